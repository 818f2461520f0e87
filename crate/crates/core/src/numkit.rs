//! Dense complex linear algebra used by every other module.
//!
//! Singular value decompositions follow the convention `O = X Σ Y` where
//! both `X` and `Y` are square unitaries and `Y` is the already-adjointed
//! right factor (`Y = V†` in the usual `U Σ V†` notation).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type RealMatrix = DMatrix<f64>;

/// Singular values below `DEFAULT_RANK_RTOL * σ₁` are treated as zero.
pub const DEFAULT_RANK_RTOL: f64 = 1e-12;

const HERMITIAN_RTOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Rectangular `rows × cols` matrix with `values` on the leading diagonal.
pub fn diag_rect(values: &[f64], rows: usize, cols: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(rows, cols);
    for (i, &v) in values.iter().enumerate().take(rows.min(cols)) {
        m[(i, i)] = c(v, 0.0);
    }
    m
}

/// Lift a real matrix into the complex carrier.
pub fn complexify(m: &RealMatrix) -> ComplexMatrix {
    m.map(|x| c(x, 0.0))
}

pub fn ensure_finite(m: &ComplexMatrix) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::invalid("matrix must have at least one row and column"));
    }
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid("matrix contains NaN or infinite entries"))
    }
}

pub fn frobenius(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Operator (spectral) norm.
pub fn op_norm(m: &ComplexMatrix) -> f64 {
    m.clone().singular_values().max()
}

/// `‖U†U − I‖_F`; zero for an exact unitary.
pub fn unitarity_residual(u: &ComplexMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    frobenius(&(u.adjoint() * u - identity(u.nrows())))
}

/// Number of singular values at or above `rank_rtol · σ₁`.
pub fn numerical_rank(sigma: &[f64], rank_rtol: f64) -> usize {
    match sigma.first() {
        Some(&s1) if s1 > 0.0 => sigma.iter().filter(|&&s| s >= rank_rtol * s1).count(),
        _ => 0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvdTriple {
    /// Left unitary, `rows × rows`.
    pub x: ComplexMatrix,
    /// Singular values, non-increasing, length `min(rows, cols)`.
    pub sigma: Vec<f64>,
    /// Right unitary, `cols × cols`.
    pub y: ComplexMatrix,
}

impl SvdTriple {
    pub fn rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn cols(&self) -> usize {
        self.y.nrows()
    }

    /// The rectangular diagonal factor `Σ`.
    pub fn sigma_matrix(&self) -> ComplexMatrix {
        diag_rect(&self.sigma, self.rows(), self.cols())
    }

    /// `Σ‡`, inverting only singular values at or above `rank_rtol · σ₁`.
    pub fn sigma_pinv(&self, rank_rtol: f64) -> ComplexMatrix {
        let rank = numerical_rank(&self.sigma, rank_rtol);
        let inv: Vec<f64> = self
            .sigma
            .iter()
            .enumerate()
            .map(|(i, &s)| if i < rank { 1.0 / s } else { 0.0 })
            .collect();
        diag_rect(&inv, self.cols(), self.rows())
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        &self.x * self.sigma_matrix() * &self.y
    }
}

/// Extend a set of orthonormal columns to a full unitary basis of `C^n`.
fn complete_basis(partial: &ComplexMatrix) -> ComplexMatrix {
    let n = partial.nrows();
    let mut cols: Vec<DVector<Complex64>> = partial.column_iter().map(|c| c.into_owned()).collect();
    while cols.len() < n {
        let mut best: Option<(f64, DVector<Complex64>)> = None;
        for i in 0..n {
            let mut r = DVector::<Complex64>::zeros(n);
            r[i] = c(1.0, 0.0);
            // two Gram-Schmidt passes
            for _ in 0..2 {
                for q in &cols {
                    let proj = q.dotc(&r);
                    r -= q * proj;
                }
            }
            let norm = r.norm();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, r));
            }
        }
        let (norm, r) = best.expect("n > 0");
        cols.push(r / c(norm, 0.0));
    }
    ComplexMatrix::from_columns(&cols)
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// Apply the plane rotation `[c, s; −s, c]` to columns `p` and `q`, after
/// multiplying column `q` by `phase`.
fn rotate_columns(m: &mut ComplexMatrix, p: usize, q: usize, cs: f64, sn: f64, phase: Complex64) {
    for r in 0..m.nrows() {
        let a = m[(r, p)];
        let b = m[(r, q)] * phase;
        m[(r, p)] = a * cs - b * sn;
        m[(r, q)] = a * sn + b * cs;
    }
}

/// One-sided Jacobi on a matrix with at least as many rows as columns:
/// returns `(G, V)` with `M·V = G`, `V` unitary and the columns of `G`
/// mutually orthogonal.
fn jacobi_orthogonalize(m: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let n = m.ncols();
    let mut g = m.clone();
    let mut v = identity(n);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = g.column(p).norm_squared();
                let beta = g.column(q).norm_squared();
                let gamma = g.column(p).dotc(&g.column(q));
                let gabs = gamma.norm();
                if gabs == 0.0 || gabs <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = (gamma / gabs).conj();
                let zeta = (beta - alpha) / (2.0 * gabs);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                rotate_columns(&mut g, p, q, cs, sn, phase);
                rotate_columns(&mut v, p, q, cs, sn, phase);
            }
        }
        if !rotated {
            break;
        }
    }
    (g, v)
}

/// Thin SVD `M = U·diag(σ)·V†` of a tall matrix, with `U` completed to a
/// square unitary and `σ` non-increasing.
fn svd_tall(m: &ComplexMatrix) -> (ComplexMatrix, Vec<f64>, ComplexMatrix) {
    let (rows, cols) = m.shape();
    let (g, v) = jacobi_orthogonalize(m);
    let norms: Vec<f64> = g.column_iter().map(|col| col.norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();

    // Columns too small to normalize reliably are replaced by a completion;
    // this perturbs the product by at most their norm.
    let floor = sigma.first().copied().unwrap_or(0.0) * f64::EPSILON * rows.max(1) as f64;
    let kept: Vec<DVector<Complex64>> = order
        .iter()
        .take_while(|&&j| norms[j] > floor && norms[j] > 0.0)
        .map(|&j| g.column(j) / c(norms[j], 0.0))
        .collect();
    let u = if kept.is_empty() {
        identity(rows)
    } else {
        complete_basis(&ComplexMatrix::from_columns(&kept))
    };
    let v_sorted = ComplexMatrix::from_fn(cols, cols, |r, k| v[(r, order[k])]);
    (u, sigma, v_sorted)
}

/// Full singular value decomposition `M = X·diag(σ)·Y` with square unitary
/// factors and `σ` sorted non-increasing. Computed by one-sided Jacobi
/// rotations, which stay accurate for repeated singular values.
pub fn svd(m: &ComplexMatrix) -> Result<SvdTriple> {
    ensure_finite(m)?;
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(SvdTriple {
            x: identity(rows),
            sigma: Vec::new(),
            y: identity(cols),
        });
    }
    if rows >= cols {
        let (u, sigma, v) = svd_tall(m);
        Ok(SvdTriple {
            x: u,
            sigma,
            y: v.adjoint(),
        })
    } else {
        // M† = U·Σ·V†  ⇒  M = V·Σᵀ·U†
        let (u, sigma, v) = svd_tall(&m.adjoint());
        Ok(SvdTriple {
            x: v,
            sigma,
            y: u.adjoint(),
        })
    }
}

/// Moore-Penrose inverse, zeroing singular values below `rank_rtol · σ₁`.
pub fn pinv(m: &ComplexMatrix, rank_rtol: f64) -> Result<ComplexMatrix> {
    if rank_rtol.is_nan() || rank_rtol <= 0.0 {
        return Err(Error::invalid("rank_rtol must be positive"));
    }
    let t = svd(m)?;
    Ok(t.y.adjoint() * t.sigma_pinv(rank_rtol) * t.x.adjoint())
}

/// The unitary `K` with `Mᵀ = K·M·K*` (entrywise conjugate), built as
/// `K = Yᵀ·X†` from the SVD of `M`.
pub fn transposition_unitary(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::invalid(format!(
            "transposition unitary needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let t = svd(m)?;
    Ok(t.y.transpose() * t.x.adjoint())
}

/// Eigen-decomposition of a Hermitian matrix: `H = U·diag(e)·U†` with `e`
/// sorted non-increasing.
pub fn hermitian_eigs(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    ensure_finite(h)?;
    if !h.is_square() {
        return Err(Error::invalid("hermitian_eigs needs a square matrix"));
    }
    let asym = frobenius(&(h - h.adjoint()));
    if asym > HERMITIAN_RTOL * frobenius(h).max(1.0) {
        return Err(Error::invalid(format!("matrix is not Hermitian (‖H − H†‖ = {asym:e})")));
    }
    let sym = (h + h.adjoint()) * c(0.5, 0.0);
    let n = h.nrows();
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, j| eig.eigenvectors[(r, order[j])]);
    Ok((values, vectors))
}

/// Principal square root of a positive semidefinite matrix. Slightly negative
/// eigenvalues from rounding are clamped to zero.
pub fn psd_sqrt(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (values, u) = hermitian_eigs(h)?;
    let roots: Vec<f64> = values.iter().map(|&v| v.max(0.0).sqrt()).collect();
    let n = h.nrows();
    Ok(&u * diag_rect(&roots, n, n) * u.adjoint())
}
