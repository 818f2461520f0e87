use serde::{Deserialize, Serialize};

use super::matching::bottleneck_matching;
use crate::error::{Error, Result};
use crate::numkit::RealMatrix;

/// A bijection on `{0..d}`. Its matrix has a one at `(i, perm[i])`, so
/// `(P·v)_i = v[perm[i]]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(d: usize) -> Self {
        Permutation((0..d).collect())
    }

    pub fn new(images: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; images.len()];
        for &i in &images {
            if i >= images.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid(format!("{images:?} is not a permutation")));
            }
        }
        Ok(Permutation(images))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    /// Extend by fixed points to act on `{0..n}`.
    pub fn extended(&self, n: usize) -> Self {
        let mut images = self.0.clone();
        images.extend(self.0.len()..n.max(self.0.len()));
        Permutation(images)
    }

    pub fn matrix(&self) -> RealMatrix {
        let d = self.0.len();
        RealMatrix::from_fn(d, d, |i, j| if self.0[i] == j { 1.0 } else { 0.0 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffTerm {
    pub weight: f64,
    pub perm: Permutation,
}

/// Convex combination `Σ q_λ P(Π_λ)` of permutation matrices.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BirkhoffDecomposition {
    pub terms: Vec<BirkhoffTerm>,
}

impl BirkhoffDecomposition {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    pub fn reconstruct(&self, d: usize) -> RealMatrix {
        let mut m = RealMatrix::zeros(d, d);
        for t in &self.terms {
            for (i, &j) in t.perm.images().iter().enumerate() {
                m[(i, j)] += t.weight;
            }
        }
        m
    }

    fn normalize(&mut self) {
        let total = self.weight_sum();
        if total > 0.0 {
            for t in &mut self.terms {
                t.weight /= total;
            }
        }
    }
}

/// Maximum number of permutations needed for a `d × d` bistochastic matrix.
pub fn caratheodory_bound(d: usize) -> usize {
    if d == 0 {
        1
    } else {
        (d - 1) * (d - 1) + 1
    }
}

fn max_abs_entry(m: &RealMatrix) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Greedy Birkhoff–von Neumann decomposition.
///
/// Each round picks a perfect matching on the entries above `tol` (the one
/// whose smallest entry is largest), subtracts that smallest entry along the
/// matching and zeroes it, so the loop runs at most `d²` times. Weights are
/// renormalized to sum to one at the end.
pub fn birkhoff(d_mat: &RealMatrix, tol: f64) -> Result<BirkhoffDecomposition> {
    if !d_mat.is_square() {
        return Err(Error::invalid("bistochastic matrix must be square"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let d = d_mat.nrows();
    let sum_tol = tol.max(1e-12) * d as f64;
    for i in 0..d {
        let row = d_mat.row(i).sum();
        let col = d_mat.column(i).sum();
        if (row - 1.0).abs() > sum_tol || (col - 1.0).abs() > sum_tol {
            return Err(Error::invalid(format!(
                "row/column {i} sums ({row}, {col}) differ from 1"
            )));
        }
    }
    if d_mat.iter().any(|&v| !v.is_finite() || v < -tol) {
        return Err(Error::invalid("bistochastic matrix has negative or non-finite entries"));
    }

    let mut rest: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| d_mat[(i, j)].max(0.0)).collect())
        .collect();
    let mut dec = BirkhoffDecomposition::default();

    for _ in 0..=d * d {
        let largest = rest.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
        if largest <= tol {
            break;
        }
        let Some((perm, weight)) = bottleneck_matching(&rest, tol) else {
            let leftover = rest.iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max);
            if leftover <= 10.0 * tol * d as f64 {
                break;
            }
            return Err(Error::NumericalDegeneracy(format!(
                "no perfect matching on entries above {tol:e} with {leftover:e} mass left; tolerance too small"
            )));
        };
        for (i, &j) in perm.iter().enumerate() {
            rest[i][j] = if rest[i][j] <= weight { 0.0 } else { rest[i][j] - weight };
        }
        dec.terms.push(BirkhoffTerm {
            weight,
            perm: Permutation(perm),
        });
    }
    dec.normalize();

    let residual = max_abs_entry(&(dec.reconstruct(d) - d_mat));
    if residual > 10.0 * tol * d as f64 {
        return Err(Error::NumericalDegeneracy(format!(
            "Birkhoff reconstruction residual {residual:e} exceeds bound"
        )));
    }
    Ok(dec)
}

/// One vector `c ≠ 0` with `A·c = 0`, from the reduced row echelon form of `A`.
fn null_vector(mut a: Vec<Vec<f64>>, cols: usize) -> Option<Vec<f64>> {
    const PIVOT_TOL: f64 = 1e-9;
    let rows = a.len();
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for col in 0..cols {
        if r == rows {
            break;
        }
        let (best, val) = (r..rows)
            .map(|i| (i, a[i][col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("r < rows");
        if val <= PIVOT_TOL {
            continue;
        }
        a.swap(r, best);
        let p = a[r][col];
        for v in a[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i != r && row[col] != 0.0 {
                let f = row[col];
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * p;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    let free = (0..cols).find(|c| !pivots.contains(c))?;
    let mut v = vec![0.0; cols];
    v[free] = 1.0;
    for (row, &pc) in pivots.iter().enumerate() {
        v[pc] = -a[row][free];
    }
    Some(v)
}

/// Reduce the number of terms to at most `(d − 1)² + 1` without changing the
/// represented matrix.
///
/// While over the bound, the flattened permutation matrices (with an appended
/// one for the weight constraint) are linearly dependent; moving the weights
/// along a null direction until one of them hits zero drops that term.
pub fn caratheodory_prune(dec: &BirkhoffDecomposition, d: usize) -> BirkhoffDecomposition {
    let bound = caratheodory_bound(d);
    let mut terms = dec.terms.clone();

    while terms.len() > bound {
        let m = terms.len();
        let mut system = vec![vec![0.0; m]; d * d + 1];
        for (lambda, t) in terms.iter().enumerate() {
            for (i, &j) in t.perm.images().iter().enumerate() {
                system[i * d + j][lambda] = 1.0;
            }
            system[d * d][lambda] = 1.0;
        }
        let Some(mut dir) = null_vector(system, m) else {
            break;
        };
        if dir.iter().all(|&c| c <= 0.0) {
            dir.iter_mut().for_each(|c| *c = -*c);
        }
        let (drop, step) = dir
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0.0)
            .map(|(i, &c)| (i, terms[i].weight / c))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("null direction has a positive entry");
        for (t, c) in terms.iter_mut().zip(&dir) {
            t.weight = (t.weight - step * c).max(0.0);
        }
        terms[drop].weight = 0.0;
        terms.retain(|t| t.weight > 0.0);
    }

    let mut out = BirkhoffDecomposition { terms };
    out.normalize();
    out
}
