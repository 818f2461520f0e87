//! Majorization on spectra and the bistochastic machinery behind it.
//!
//! Spectra are plain `&[f64]` slices in arbitrary order. Every routine sorts
//! non-increasingly and right-pads with zeros before comparing, so spectra of
//! different lengths (e.g. Schmidt vectors of different rank) are comparable.

mod birkhoff;
mod matching;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::RealMatrix;

pub use birkhoff::{
    birkhoff, caratheodory_bound, caratheodory_prune, BirkhoffDecomposition, BirkhoffTerm, Permutation,
};

/// Absolute tolerance on partial sums.
pub const COMPARE_TOL: f64 = 1e-10;

/// Mismatches smaller than this end the T-transform chain.
const CHAIN_EPS: f64 = 1e-15;
const LINK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// `x ≺ y`: head sums of `x` bounded by those of `y`, equal totals.
    Maj,
    /// `x ≺_w y`: head sums only.
    Sub,
    /// `x ≺^w y`: tail sums of `x` bound those of `y` from above.
    Super,
}

/// Copy of `x` sorted non-increasing and zero-padded to `len`.
pub fn sorted_desc(x: &[f64], len: usize) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v.resize(len.max(x.len()), 0.0);
    v
}

/// Tail sums `E_k = Σ_{i≥k} x↓_i` for `k = 0..len`.
pub fn tail_sums(x: &[f64]) -> Vec<f64> {
    let sorted = sorted_desc(x, x.len());
    let mut tails = vec![0.0; sorted.len()];
    let mut acc = 0.0;
    for i in (0..sorted.len()).rev() {
        acc += sorted[i];
        tails[i] = acc;
    }
    tails
}

fn head_sums(sorted: &[f64]) -> Vec<f64> {
    sorted
        .iter()
        .scan(0.0, |acc, &v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

fn check_nonnegative(x: &[f64], tol: f64) -> Result<()> {
    match x.iter().find(|v| !v.is_finite() || **v < -tol) {
        Some(v) => Err(Error::invalid(format!("spectrum entry {v} is negative or not finite"))),
        None => Ok(()),
    }
}

/// `compare_with_tol` at the default [`COMPARE_TOL`].
pub fn compare(x: &[f64], y: &[f64], relation: Relation) -> Result<bool> {
    compare_with_tol(x, y, relation, COMPARE_TOL)
}

/// Decide `x ≺ y`, `x ≺_w y` or `x ≺^w y` with an absolute tolerance on every
/// partial sum.
pub fn compare_with_tol(x: &[f64], y: &[f64], relation: Relation, tol: f64) -> Result<bool> {
    let neg_tol = tol.max(COMPARE_TOL);
    check_nonnegative(x, neg_tol)?;
    check_nonnegative(y, neg_tol)?;
    let d = x.len().max(y.len());
    let xs = sorted_desc(x, d);
    let ys = sorted_desc(y, d);
    Ok(match relation {
        Relation::Sub => head_sums(&xs)
            .iter()
            .zip(head_sums(&ys))
            .all(|(hx, hy)| *hx <= hy + tol),
        Relation::Maj => {
            let hx = head_sums(&xs);
            let hy = head_sums(&ys);
            let totals_equal = d == 0 || (hx[d - 1] - hy[d - 1]).abs() <= tol;
            totals_equal && hx.iter().zip(&hy).all(|(a, b)| *a <= b + tol)
        }
        Relation::Super => tail_sums(&xs)
            .iter()
            .zip(tail_sums(&ys))
            .all(|(tx, ty)| *tx >= ty - tol),
    })
}

/// A bistochastic matrix `D` with `D·q↓ = a↓`, built as a product of
/// T-transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct TChain {
    pub matrix: RealMatrix,
    /// Number of T-transforms multiplied together, at most `d − 1`.
    pub steps: usize,
}

/// Build a bistochastic `D` relating two comparable spectra, `D·q↓ = a↓`.
/// Requires `a ≺ q`.
pub fn bistochastic_link(a: &[f64], q: &[f64]) -> Result<TChain> {
    if !compare(a, q, Relation::Maj)? {
        return Err(Error::infeasible("bistochastic link needs a ≺ q"));
    }
    let d = a.len().max(q.len());
    let x = sorted_desc(a, d);
    let mut y = sorted_desc(q, d);
    let mut matrix = DMatrix::<f64>::identity(d, d);
    let mut steps = 0;

    while let Some(j) = (0..d).rev().find(|&i| y[i] - x[i] > CHAIN_EPS) {
        let Some(k) = (j + 1..d).find(|&i| x[i] - y[i] > CHAIN_EPS) else {
            break;
        };
        let surplus = y[j] - x[j];
        let deficit = x[k] - y[k];
        let delta = surplus.min(deficit);
        let t = delta / (y[j] - y[k]);

        // D ← T·D with T = (1 − t)·I + t·(j k)
        for col in 0..d {
            let rj = matrix[(j, col)];
            let rk = matrix[(k, col)];
            matrix[(j, col)] = (1.0 - t) * rj + t * rk;
            matrix[(k, col)] = t * rj + (1.0 - t) * rk;
        }
        if surplus <= deficit {
            y[j] = x[j];
            y[k] += delta;
        } else {
            y[k] = x[k];
            y[j] -= delta;
        }
        steps += 1;
        if steps > d {
            return Err(Error::NumericalDegeneracy(
                "T-transform chain failed to terminate".into(),
            ));
        }
    }

    let q_sorted = sorted_desc(q, d);
    let image = &matrix * nalgebra::DVector::from_vec(q_sorted);
    let residual = image.iter().zip(&x).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    if residual > LINK_TOL {
        return Err(Error::NumericalDegeneracy(format!(
            "bistochastic link residual {residual:e} exceeds {LINK_TOL:e}"
        )));
    }
    Ok(TChain { matrix, steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_is_majorized_by_everything() {
        assert!(compare(&[0.5, 0.5], &[0.8, 0.2], Relation::Maj).unwrap());
        assert!(!compare(&[0.8, 0.2], &[0.5, 0.5], Relation::Maj).unwrap());
    }

    #[test]
    fn reflexive() {
        let x = [0.3, 0.1, 0.6];
        for r in [Relation::Maj, Relation::Sub, Relation::Super] {
            assert!(compare(&x, &x, r).unwrap());
        }
    }

    #[test]
    fn order_and_padding_do_not_matter() {
        assert!(compare(&[0.2, 0.5, 0.3], &[0.7, 0.3], Relation::Maj).unwrap());
        assert!(compare(&[1.0], &[0.0, 1.0, 0.0], Relation::Maj).unwrap());
    }

    #[test]
    fn super_majorization_threshold() {
        // tails of (0.8, 0.2) against p·(0.5, 0.5): 0.2 ≥ 0.5·p ⇔ p ≤ 0.4
        let x = [0.8, 0.2];
        let scaled = |p: f64| [0.5 * p, 0.5 * p];
        assert!(compare(&x, &scaled(0.4), Relation::Super).unwrap());
        assert!(!compare(&x, &scaled(0.41), Relation::Super).unwrap());
        // a product state has an empty tail and supermajorizes nothing with support
        assert!(!compare(&[1.0, 0.0], &scaled(0.4), Relation::Super).unwrap());
        assert!(compare(&[1.0, 0.0], &[0.0, 0.0], Relation::Super).unwrap());
    }

    #[test]
    fn sub_majorization_ignores_totals() {
        assert!(compare(&[0.2, 0.2], &[0.8, 0.2], Relation::Sub).unwrap());
        assert!(!compare(&[0.2, 0.2], &[0.8, 0.2], Relation::Maj).unwrap());
    }

    #[test]
    fn negative_entries_rejected() {
        assert!(matches!(
            compare(&[-0.1, 1.1], &[1.0], Relation::Maj),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            compare(&[1.0], &[f64::NAN], Relation::Sub),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn tail_sums_of_sorted_vector() {
        let t = tail_sums(&[0.2, 0.5, 0.3]);
        assert!((t[0] - 1.0).abs() < 1e-15);
        assert!((t[1] - 0.5).abs() < 1e-15);
        assert!((t[2] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn link_identity_when_equal() {
        let chain = bistochastic_link(&[0.6, 0.4], &[0.6, 0.4]).unwrap();
        assert_eq!(chain.steps, 0);
        assert_eq!(chain.matrix, DMatrix::identity(2, 2));
    }

    #[test]
    fn link_uniform_from_pure() {
        // single T-transform with t = 1/2
        let chain = bistochastic_link(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert_eq!(chain.steps, 1);
        for v in chain.matrix.iter() {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn link_three_dimensional() {
        let a = [0.5, 0.3, 0.2];
        let q = [0.6, 0.3, 0.1];
        let chain = bistochastic_link(&a, &q).unwrap();
        assert!(chain.steps <= 2);
        let image = &chain.matrix * nalgebra::DVector::from_column_slice(&q);
        for (u, v) in image.iter().zip(a) {
            assert!((u - v).abs() < 1e-12);
        }
        for i in 0..3 {
            assert!((chain.matrix.row(i).sum() - 1.0).abs() < 1e-12);
            assert!((chain.matrix.column(i).sum() - 1.0).abs() < 1e-12);
        }
        assert!(chain.matrix.iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn link_rejects_non_comparable() {
        assert!(matches!(
            bistochastic_link(&[0.8, 0.2], &[0.5, 0.5]),
            Err(Error::Infeasible { .. })
        ));
    }
}
