//! Bipartite pure states stored as amplitude matrices.
//!
//! The state `Σ a_ij |i⟩⊗|j⟩` is held as the `dA × dB` matrix `(a_ij)`, so a
//! local product operator acts as `(C_A ⊗ C_B)|A⟩⟩ = |C_A·A·C_Bᵀ⟩⟩`.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numkit::{self, diag_rect, frobenius, numerical_rank, ComplexMatrix, SvdTriple, DEFAULT_RANK_RTOL};

/// Allowed deviation of `tr(A·A†)` from one.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    amp: ComplexMatrix,
}

/// Schmidt decomposition `amp = left · diag(coeffs) · right`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtForm {
    pub left_basis: ComplexMatrix,
    /// Non-increasing, length `min(dA, dB)`.
    pub coeffs: Vec<f64>,
    pub right_basis: ComplexMatrix,
}

impl From<SvdTriple> for SchmidtForm {
    fn from(t: SvdTriple) -> Self {
        SchmidtForm {
            left_basis: t.x,
            coeffs: t.sigma,
            right_basis: t.y,
        }
    }
}

impl SchmidtForm {
    pub fn dims(&self) -> (usize, usize) {
        (self.left_basis.nrows(), self.right_basis.nrows())
    }

    pub fn rank(&self) -> usize {
        numerical_rank(&self.coeffs, DEFAULT_RANK_RTOL)
    }

    /// Squared coefficients, with those below the rank threshold set to
    /// exactly zero.
    pub fn squared(&self) -> Vec<f64> {
        let rank = self.rank();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, s)| if i < rank { s * s } else { 0.0 })
            .collect()
    }

    pub fn sigma_matrix(&self) -> ComplexMatrix {
        let (da, db) = self.dims();
        diag_rect(&self.coeffs, da, db)
    }

    pub fn as_svd(&self) -> SvdTriple {
        SvdTriple {
            x: self.left_basis.clone(),
            sigma: self.coeffs.clone(),
            y: self.right_basis.clone(),
        }
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        &self.left_basis * self.sigma_matrix() * &self.right_basis
    }
}

impl BipartiteState {
    /// Wrap a normalized amplitude matrix.
    pub fn new(amp: ComplexMatrix) -> Result<Self> {
        numkit::ensure_finite(&amp)?;
        let norm_sq = frobenius(&amp).powi(2);
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!("state is not normalized: tr(AA†) = {norm_sq}")));
        }
        Ok(BipartiteState { amp })
    }

    /// Rescale `amp` to unit norm.
    pub fn normalized(amp: ComplexMatrix) -> Result<Self> {
        numkit::ensure_finite(&amp)?;
        let norm = frobenius(&amp);
        if norm == 0.0 {
            return Err(Error::invalid("cannot normalize the zero vector"));
        }
        Ok(BipartiteState {
            amp: amp / numkit::c(norm, 0.0),
        })
    }

    /// Diagonal state whose squared Schmidt coefficients are `coeffs_sq`.
    pub fn from_schmidt(coeffs_sq: &[f64], da: usize, db: usize) -> Result<Self> {
        if coeffs_sq.len() > da.min(db) {
            return Err(Error::invalid(format!(
                "{} Schmidt coefficients do not fit a {da}x{db} system",
                coeffs_sq.len()
            )));
        }
        if coeffs_sq.iter().any(|&c| !c.is_finite() || c < 0.0) {
            return Err(Error::invalid("squared Schmidt coefficients must be non-negative"));
        }
        let total: f64 = coeffs_sq.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!("squared Schmidt coefficients sum to {total}")));
        }
        let roots: Vec<f64> = coeffs_sq.iter().map(|c| c.sqrt()).collect();
        BipartiteState::new(diag_rect(&roots, da, db))
    }

    pub fn amp(&self) -> &ComplexMatrix {
        &self.amp
    }

    pub fn into_amp(self) -> ComplexMatrix {
        self.amp
    }

    pub fn dims(&self) -> (usize, usize) {
        self.amp.shape()
    }

    pub fn schmidt(&self) -> SchmidtForm {
        numkit::svd(&self.amp).expect("state amplitudes are finite").into()
    }

    pub fn schmidt_rank(&self) -> usize {
        self.schmidt().rank()
    }

    /// `(C_A ⊗ C_B)|A⟩⟩` as the unnormalized matrix `C_A·A·C_Bᵀ`, together
    /// with its squared norm (the branch weight).
    pub fn apply_local(&self, ca: &ComplexMatrix, cb: &ComplexMatrix) -> Result<(ComplexMatrix, f64)> {
        apply_local(&self.amp, ca, cb)
    }

    /// `|⟨⟨A|B⟩⟩|²`.
    pub fn fidelity(&self, other: &BipartiteState) -> Result<f64> {
        if self.dims() != other.dims() {
            return Err(Error::dims(format!("{:?} vs {:?}", self.dims(), other.dims())));
        }
        let overlap = self
            .amp
            .iter()
            .zip(other.amp.iter())
            .map(|(a, b)| a.conj() * b)
            .sum::<num_complex::Complex64>();
        Ok(overlap.norm_sqr().min(1.0))
    }

    /// Hex SHA-256 of the dimensions and the raw amplitude bits.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        let (r, c) = self.dims();
        h.update((r as u64).to_le_bytes());
        h.update((c as u64).to_le_bytes());
        for i in 0..r {
            for j in 0..c {
                let z = self.amp[(i, j)];
                h.update(z.re.to_le_bytes());
                h.update(z.im.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

/// Local product operator on a raw amplitude matrix.
pub fn apply_local(amp: &ComplexMatrix, ca: &ComplexMatrix, cb: &ComplexMatrix) -> Result<(ComplexMatrix, f64)> {
    let (da, db) = amp.shape();
    if ca.ncols() != da || cb.ncols() != db {
        return Err(Error::dims(format!(
            "operators {}x{} ⊗ {}x{} cannot act on a {da}x{db} state",
            ca.nrows(),
            ca.ncols(),
            cb.nrows(),
            cb.ncols()
        )));
    }
    let out = ca * amp * cb.transpose();
    let weight = frobenius(&out).powi(2);
    Ok((out, weight))
}
