#![allow(dead_code)]

use locc_forge::numkit::{c, diag_rect, op_norm, svd, ComplexMatrix, RealMatrix};
use locc_forge::BipartiteState;
use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-ish unitary: left factor of a Gaussian matrix's SVD.
pub fn unitary(rng: &mut impl Rng, d: usize) -> ComplexMatrix {
    svd(&gaussian(rng, d, d)).unwrap().x
}

/// Normalized spectrum with `rank` non-zero entries, padded to `d`, sorted
/// non-increasing.
pub fn spectrum(rng: &mut impl Rng, d: usize, rank: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..rank).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v.resize(d, 0.0);
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// `U_A · diag(√sq) · U_B` with random local unitaries.
pub fn state_with_spectrum(rng: &mut impl Rng, sq: &[f64], da: usize, db: usize) -> BipartiteState {
    let roots: Vec<f64> = sq.iter().map(|x| x.sqrt()).collect();
    let amp = unitary(rng, da) * diag_rect(&roots, da, db) * unitary(rng, db);
    BipartiteState::normalized(amp).unwrap()
}

pub fn random_state(rng: &mut impl Rng, da: usize, db: usize) -> BipartiteState {
    BipartiteState::normalized(gaussian(rng, da, db)).unwrap()
}

/// Random convex combination of permutation matrices.
pub fn bistochastic(rng: &mut impl Rng, d: usize) -> RealMatrix {
    let terms = rng.random_range(1..=d + 1);
    let mut m = RealMatrix::zeros(d, d);
    let mut total = 0.0;
    for _ in 0..terms {
        let w: f64 = rng.random_range(0.1..1.0);
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(rng);
        for (i, &j) in perm.iter().enumerate() {
            m[(i, j)] += w;
        }
        total += w;
    }
    m / total
}

/// A spectrum `a = D·b` for random bistochastic `D`, so `a ≺ b`.
pub fn majorized_by(rng: &mut impl Rng, b: &[f64]) -> Vec<f64> {
    let d = b.len();
    let a = bistochastic(rng, d) * DVector::from_column_slice(b);
    let mut a: Vec<f64> = a.iter().copied().collect();
    a.sort_by(|x, y| y.total_cmp(x));
    let s: f64 = a.iter().sum();
    a.iter_mut().for_each(|x| *x /= s);
    a
}

/// Square matrix drawn from one of several families, including
/// rank-deficient and repeated-singular-value cases.
pub fn square_matrix(rng: &mut impl Rng, d: usize, family: usize) -> ComplexMatrix {
    match family % 4 {
        0 => gaussian(rng, d, d),
        1 => {
            let r = rng.random_range(0..d.max(1));
            gaussian(rng, d, r) * gaussian(rng, r, d)
        }
        2 => {
            let sv: Vec<f64> = (0..d).map(|i| if i < d / 2 + 1 { 1.5 } else { 0.5 }).collect();
            unitary(rng, d) * diag_rect(&sv, d, d) * unitary(rng, d)
        }
        _ => unitary(rng, d),
    }
}

/// Contraction with operator norm drawn from `[0.2, 1]`.
pub fn contraction(rng: &mut impl Rng, d: usize) -> ComplexMatrix {
    let g = gaussian(rng, d, d);
    let scale = rng.random_range(0.2..=1.0) / op_norm(&g);
    g * c(scale, 0.0)
}

/// Eigenvalues of `A·A†` via a real symmetric embedding, independent of the
/// library's complex eigen-solver.
pub fn reduced_spectrum(amp: &ComplexMatrix) -> Vec<f64> {
    let rho = amp * amp.adjoint();
    let n = rho.nrows();
    let mut emb = RealMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = rho[(i, j)];
            emb[(i, j)] = z.re;
            emb[(i + n, j + n)] = z.re;
            emb[(i, j + n)] = -z.im;
            emb[(i + n, j)] = z.im;
        }
    }
    let mut ev: Vec<f64> = emb.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    // each eigenvalue appears twice in the embedding
    ev.iter().step_by(2).map(|x| x.max(0.0)).collect()
}

/// Weak sub-majorization by head sums: `x ≺_w y`.
pub fn weakly_submajorized(x: &[f64], y: &[f64], tol: f64) -> bool {
    let d = x.len().max(y.len());
    let sorted = |v: &[f64]| {
        let mut v = v.to_vec();
        v.resize(d, 0.0);
        v.sort_by(|a, b| b.total_cmp(a));
        v
    };
    let (x, y) = (sorted(x), sorted(y));
    let (mut sx, mut sy) = (0.0, 0.0);
    (0..d).all(|k| {
        sx += x[k];
        sy += y[k];
        sx <= sy + tol
    })
}
