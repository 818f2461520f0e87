//! Moving Bob's operations to Alice, and the sub-stochastic certificate of a
//! pure contraction.

use crate::bipartite::{BipartiteState, SchmidtForm};
use crate::error::{Error, Result};
use crate::numkit::{frobenius, op_norm, svd, transposition_unitary, ComplexMatrix, RealMatrix};

const CONTRACTION_TOL: f64 = 1e-10;

/// Alice contraction `N` and Bob unitary `U` with
/// `(I ⊗ M)|Ψ⟩⟩ = (N ⊗ U)|Ψ⟩⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct BobReduction {
    pub n: ComplexMatrix,
    pub u: ComplexMatrix,
    /// `‖Ψ·Mᵀ − N·Ψ·Uᵀ‖_F`.
    pub residual: f64,
}

/// Replace a contraction `M` on Bob's side by `N = K_{MΨᵀ}·M·K_Ψ` on Alice's
/// side plus the unitary `U = K_{MΨᵀ}†·K_Ψ†` on Bob's, where `K_O` is the
/// transposition unitary of `O`. Square amplitude matrices only.
pub fn reduce_bob(m: &ComplexMatrix, psi: &BipartiteState) -> Result<BobReduction> {
    let amp = psi.amp();
    if !amp.is_square() {
        return Err(Error::UnsupportedShape(format!(
            "Bob reduction needs a square amplitude matrix, got {}x{}",
            amp.nrows(),
            amp.ncols()
        )));
    }
    let d = amp.nrows();
    if m.shape() != (d, d) {
        return Err(Error::dims(format!(
            "Bob operator is {}x{}, state needs {d}x{d}",
            m.nrows(),
            m.ncols()
        )));
    }
    crate::numkit::ensure_finite(m)?;
    let norm = op_norm(m);
    if norm > 1.0 + CONTRACTION_TOL {
        return Err(Error::invalid(format!(
            "Bob operator is not a contraction (‖M‖ = {norm})"
        )));
    }

    let k_psi = transposition_unitary(amp)?;
    let k_mpsi = transposition_unitary(&(m * amp.transpose()))?;
    let n = &k_mpsi * m * &k_psi;
    let u = k_mpsi.adjoint() * k_psi.adjoint();
    let residual = frobenius(&(amp * m.transpose() - &n * amp * u.transpose()));
    Ok(BobReduction { n, u, residual })
}

/// `S` together with the quantities that certify it.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstochasticCheck {
    /// `S[(k, l)] = |⟨l|X_B†·M·X_A|k⟩|²`.
    pub matrix: RealMatrix,
    pub max_row_sum: f64,
    pub max_col_sum: f64,
    /// `max_l |Σ_k S_kl σ_k²(A) − p·σ_l²(B)|`.
    pub balance_residual: f64,
}

/// `max_l |Σ_k S_kl a_k − p·b_l|` for squared spectra zero-padded to `S`.
pub fn substochastic_balance_residual(s: &RealMatrix, a_sq: &[f64], b_sq: &[f64], p: f64) -> f64 {
    let pad = |v: &[f64]| {
        let mut v = v.to_vec();
        v.resize(s.nrows(), 0.0);
        v
    };
    let a = pad(a_sq);
    let b = pad(b_sq);
    (0..s.ncols())
        .map(|l| {
            let lhs: f64 = (0..s.nrows()).map(|k| s[(k, l)] * a[k]).sum();
            (lhs - p * b[l]).abs()
        })
        .fold(0.0, f64::max)
}

/// Sub-stochastic matrix of an Alice contraction `M` realizing
/// `M·A·Uᵀ = √p·B` for some Bob unitary `U`.
pub fn substochastic_matrix(
    m: &ComplexMatrix,
    a: &BipartiteState,
    b: &BipartiteState,
    p: f64,
) -> Result<SubstochasticCheck> {
    substochastic_for_amps(m, a.amp(), b.amp(), p)
}

/// [`substochastic_matrix`] on raw amplitude matrices.
pub fn substochastic_for_amps(
    m: &ComplexMatrix,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    p: f64,
) -> Result<SubstochasticCheck> {
    if a.shape() != b.shape() {
        return Err(Error::dims(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    let da = a.nrows();
    if m.shape() != (da, da) {
        return Err(Error::dims(format!(
            "contraction is {}x{}, expected {da}x{da}",
            m.nrows(),
            m.ncols()
        )));
    }
    let sa: SchmidtForm = svd(a)?.into();
    let sb: SchmidtForm = svd(b)?.into();
    let tilde = sb.left_basis.adjoint() * m * &sa.left_basis;
    let matrix = RealMatrix::from_fn(da, da, |k, l| tilde[(l, k)].norm_sqr());
    let max_row_sum = matrix.row_iter().map(|r| r.sum()).fold(0.0, f64::max);
    let max_col_sum = matrix.column_iter().map(|c| c.sum()).fold(0.0, f64::max);
    let balance_residual = substochastic_balance_residual(&matrix, &sa.squared(), &sb.squared(), p);
    Ok(SubstochasticCheck {
        matrix,
        max_row_sum,
        max_col_sum,
        balance_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{c, diag_rect, identity, unitarity_residual};
    use crate::synth::final_contraction;

    #[test]
    fn reduce_identity() {
        let psi = BipartiteState::from_schmidt(&[0.7, 0.3], 2, 2).unwrap();
        let r = reduce_bob(&identity(2), &psi).unwrap();
        assert!(r.residual < 1e-14);
        assert!(unitarity_residual(&r.u) < 1e-14);
    }

    #[test]
    fn reduce_phase_gate_on_bell() {
        let psi = BipartiteState::from_schmidt(&[0.5, 0.5], 2, 2).unwrap();
        let mut m = identity(2);
        m[(1, 1)] = c(0.0, 1.0);
        let r = reduce_bob(&m, &psi).unwrap();
        assert!(r.residual <= 1e-10);
        assert!(unitarity_residual(&r.u) <= 1e-10);
        assert!(op_norm(&r.n) <= 1.0 + 1e-9);
    }

    #[test]
    fn reduce_real_diagonal_is_exact() {
        let psi = BipartiteState::from_schmidt(&[0.5, 0.3, 0.2], 3, 3).unwrap();
        let m = diag_rect(&[0.9, 0.4, 1.0], 3, 3);
        let r = reduce_bob(&m, &psi).unwrap();
        assert!(r.residual <= 1e-12);
    }

    #[test]
    fn reduce_errors() {
        let psi = BipartiteState::from_schmidt(&[0.5, 0.5], 2, 2).unwrap();
        assert!(matches!(
            reduce_bob(&(identity(2) * c(2.0, 0.0)), &psi),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            reduce_bob(&identity(3), &psi),
            Err(Error::DimensionMismatch(_))
        ));
        let rect = BipartiteState::from_schmidt(&[0.5, 0.5], 2, 3).unwrap();
        assert!(matches!(
            reduce_bob(&identity(3), &rect),
            Err(Error::UnsupportedShape(_))
        ));
    }

    #[test]
    fn substochastic_identity() {
        let a = BipartiteState::from_schmidt(&[0.6, 0.4], 2, 2).unwrap();
        let s = substochastic_matrix(&identity(2), &a, &a, 1.0).unwrap();
        assert!((s.matrix.clone() - RealMatrix::identity(2, 2)).abs().max() < 1e-14);
        assert!(s.balance_residual < 1e-14);
    }

    #[test]
    fn substochastic_canonical_contraction() {
        let q = BipartiteState::from_schmidt(&[0.8, 0.2], 2, 2).unwrap();
        let b = BipartiteState::from_schmidt(&[0.5, 0.5], 2, 2).unwrap();
        let s2 = final_contraction(&q, &b, 0.4).unwrap();
        let s = substochastic_matrix(&s2.n, &q, &b, 0.4).unwrap();
        let expected = RealMatrix::from_row_slice(2, 2, &[0.25, 0.0, 0.0, 1.0]);
        assert!((s.matrix.clone() - expected).abs().max() < 1e-12);
        assert!(s.balance_residual < 1e-12);
        assert!(s.max_row_sum <= 1.0 + 1e-10 && s.max_col_sum <= 1.0 + 1e-10);
    }
}
