//! Explicit operators for the two protocol stages.

use crate::bipartite::{BipartiteState, SchmidtForm};
use crate::error::{Error, Result};
use crate::majorize::{self, birkhoff, caratheodory_prune, BirkhoffDecomposition, Relation};
use crate::numkit::{self, c, complexify, hermitian_eigs, identity, ComplexMatrix, DEFAULT_RANK_RTOL};

/// Entry threshold for the Birkhoff extraction used during synthesis.
pub const BIRKHOFF_TOL: f64 = 1e-14;

const STAGE2_TOL: f64 = 1e-10;

/// Eigenvalues below this fraction of the largest are eigensolver noise.
const EIG_CLEAN_RTOL: f64 = 1e-13;

/// One outcome `λ` of Alice's measurement in the deterministic stage.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausOutcome {
    /// Probability `q_λ` of this outcome.
    pub q: f64,
    /// Alice's Kraus operator `M_λ`.
    pub m: ComplexMatrix,
    /// Bob's correcting unitary `U_λ`.
    pub u: ComplexMatrix,
}

/// Deterministic stage: outcomes plus the completion operator `M₀`, which
/// annihilates the source state.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage1 {
    pub outcomes: Vec<KrausOutcome>,
    pub m0: ComplexMatrix,
}

/// Pure contraction `N ⊗ V`, succeeding with probability `p`. On failure Alice
/// has applied `N_fail`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage2 {
    pub p: f64,
    pub n: ComplexMatrix,
    pub v: ComplexMatrix,
    pub n_fail: ComplexMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UhlmannTerm {
    pub weight: f64,
    pub unitary: ComplexMatrix,
}

/// Number of leading entries of a non-increasing spectrum that are non-zero.
fn support_len(sorted: &[f64]) -> usize {
    sorted.iter().take_while(|&&v| v > 0.0).count()
}

fn clean_spectrum(values: &[f64]) -> Vec<f64> {
    let top = values.iter().fold(0.0f64, |a, &b| a.max(b));
    values
        .iter()
        .map(|&v| if v > EIG_CLEAN_RTOL * top { v } else { 0.0 })
        .collect()
}

/// Birkhoff decomposition of a bistochastic `D` with `D·q↓ = a↓`, restricted
/// to the support of `a` and pruned to the Carathéodory bound of that support.
/// Permutations act on `{0..k}`, `k` the support size of `a`.
fn linking_permutations(a_sorted: &[f64], q_sorted: &[f64]) -> Result<BirkhoffDecomposition> {
    let k = support_len(a_sorted).max(1);
    let chain = majorize::bistochastic_link(&a_sorted[..k], &q_sorted[..k.min(q_sorted.len())])?;
    let dec = birkhoff(&chain.matrix, BIRKHOFF_TOL)?;
    Ok(caratheodory_prune(&dec, k))
}

/// Mixed-unitary form of `C` in terms of `D`: weights `p_λ` and unitaries
/// `W_λ` with `C = Σ p_λ W_λ D W_λ†`. Needs `eigv(C) ≺ eigv(D)`, both
/// positive semidefinite.
///
/// Each `W_λ = X_C · P_λ · X_D†` where `X_C`, `X_D` are eigenbases (in
/// non-increasing eigenvalue order) and `P_λ` runs over a Birkhoff
/// decomposition of a bistochastic matrix with `eigv(C) = D·eigv(D)`.
/// The adjoint `W_λ† = X_D P_λᵀ X_C†` is the form used on the Kraus side.
pub fn uhlmann_decompose(c_mat: &ComplexMatrix, d_mat: &ComplexMatrix) -> Result<Vec<UhlmannTerm>> {
    if c_mat.shape() != d_mat.shape() {
        return Err(Error::dims("C and D must have the same shape"));
    }
    let (c_vals, x_c) = hermitian_eigs(c_mat)?;
    let (d_vals, x_d) = hermitian_eigs(d_mat)?;
    let c_vals = clean_spectrum(&c_vals);
    let d_vals = clean_spectrum(&d_vals);
    if !majorize::compare(&c_vals, &d_vals, Relation::Maj)? {
        return Err(Error::infeasible("eigv(C) is not majorized by eigv(D)"));
    }
    let n = c_mat.nrows();
    let dec = linking_permutations(&c_vals, &d_vals)?;
    Ok(dec
        .terms
        .iter()
        .map(|t| {
            let p = complexify(&t.perm.extended(n).matrix());
            UhlmannTerm {
                weight: t.weight,
                unitary: &x_c * p * x_d.adjoint(),
            }
        })
        .collect())
}

/// General solution `M = √q·Q·U*·A‡ + N·(I − A·A‡)` of
/// `(M ⊗ U)|A⟩⟩ = √q|Q⟩⟩`. Synthesis always passes `off_support = None`
/// (i.e. `N = 0`), which keeps `M` a contraction.
pub fn kraus_operator(
    weight: f64,
    q_amp: &ComplexMatrix,
    u_conj: &ComplexMatrix,
    a_pinv: &ComplexMatrix,
    off_support: Option<&ComplexMatrix>,
) -> ComplexMatrix {
    let mut m = q_amp * u_conj * a_pinv * c(weight.sqrt(), 0.0);
    if let Some(n_free) = off_support {
        let da = a_pinv.ncols();
        let a_amp = numkit::pinv(a_pinv, DEFAULT_RANK_RTOL).expect("finite");
        m += n_free * (identity(da) - a_amp * a_pinv);
    }
    m
}

/// Stage-1 construction from Schmidt forms of the source `A` and target `Q`.
pub(crate) fn deterministic_stage_from(sa: &SchmidtForm, sq: &SchmidtForm, q_amp: &ComplexMatrix) -> Result<Stage1> {
    let (da, db) = sa.dims();
    if sq.dims() != (da, db) {
        return Err(Error::dims(format!(
            "source {:?} and target {:?} differ",
            (da, db),
            sq.dims()
        )));
    }
    let a_sq = sa.squared();
    let q_sq = sq.squared();
    if !majorize::compare(&a_sq, &q_sq, Relation::Maj)? {
        return Err(Error::infeasible("deterministic stage needs eigv(AA†) ≺ eigv(QQ†)"));
    }
    let dec = linking_permutations(&a_sq, &q_sq)?;

    let a_svd = sa.as_svd();
    let a_pinv = a_svd.y.adjoint() * a_svd.sigma_pinv(DEFAULT_RANK_RTOL) * a_svd.x.adjoint();
    let (x_a, y_a) = (&sa.left_basis, &sa.right_basis);
    let (x_q, y_q) = (&sq.left_basis, &sq.right_basis);

    let outcomes = dec
        .terms
        .iter()
        .map(|t| {
            // Π_λ = P_λᵀ, so that Σ_A² = Σ q_λ Π_λ† Σ_Q² Π_λ on the diagonal.
            let u_conj = if da == db {
                let pi = complexify(&t.perm.extended(da).matrix().transpose());
                let w = x_q * pi * x_a.adjoint();
                y_q.adjoint() * x_q.adjoint() * w * x_a * y_a
            } else {
                // X_Q†·W_λ·X_A collapses to Π_λ, which here acts on Bob's index
                let pi = complexify(&t.perm.extended(db).matrix().transpose());
                y_q.adjoint() * pi * y_a
            };
            KrausOutcome {
                q: t.weight,
                m: kraus_operator(t.weight, q_amp, &u_conj, &a_pinv, None),
                u: u_conj.conjugate(),
            }
        })
        .collect();

    let a_amp = sa.reconstruct();
    let m0 = identity(da) - &a_amp * &a_pinv;
    Ok(Stage1 { outcomes, m0 })
}

/// Kraus measurement on Alice plus Bob corrections taking `A` to `Q` with
/// certainty. Needs `eigv(AA†) ≺ eigv(QQ†)`.
pub fn deterministic_stage(a: &BipartiteState, q: &BipartiteState) -> Result<Stage1> {
    deterministic_stage_from(&a.schmidt(), &q.schmidt(), q.amp())
}

pub(crate) fn final_contraction_from(sq: &SchmidtForm, sb: &SchmidtForm, p: f64) -> Result<Stage2> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("success probability {p} outside (0, 1]")));
    }
    let (da, db) = sb.dims();
    if sq.dims() != (da, db) {
        return Err(Error::dims(format!(
            "intermediate {:?} and target {:?} differ",
            sq.dims(),
            (da, db)
        )));
    }
    let q_sq = sq.squared();
    let b_sq = sb.squared();
    if let Some(i) = (0..q_sq.len()).find(|&i| q_sq[i] < p * b_sq[i] - STAGE2_TOL) {
        return Err(Error::infeasible(format!(
            "σ²(Q)[{i}] = {} is below p·σ²(B)[{i}] = {}",
            q_sq[i],
            p * b_sq[i]
        )));
    }
    let q_svd = sq.as_svd();
    let n = (&sb.left_basis * sb.sigma_matrix() * q_svd.sigma_pinv(DEFAULT_RANK_RTOL) * sq.left_basis.adjoint())
        * c(p.sqrt(), 0.0);
    let v = (sq.right_basis.adjoint() * &sb.right_basis).transpose();
    let n_fail = numkit::psd_sqrt(&(identity(da) - n.adjoint() * &n))?;
    Ok(Stage2 { p, n, v, n_fail })
}

/// Pure contraction `(N ⊗ V)|Q⟩⟩ = √p|B⟩⟩`, with `N = √p·X_B Σ_B Σ_Q‡ X_Q†`
/// and `Vᵀ = Y_Q† Y_B`. Needs `σ²(Q) ≥ p·σ²(B)` entrywise.
pub fn final_contraction(q: &BipartiteState, b: &BipartiteState, p: f64) -> Result<Stage2> {
    final_contraction_from(&q.schmidt(), &b.schmidt(), p)
}
