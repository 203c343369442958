//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

pub mod replay;

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample::<f64, _>(StandardNormal))
}

/// Random symmetric matrix with entries roughly N(0, 1).
pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let g = gaussian(rng, n, n);
    (&g + &g.t()) * 0.5
}

/// Well-conditioned SPD matrix `GᵀG/n + I`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let g = gaussian(rng, n, n);
    g.t().dot(&g) / n as f64 + Array2::<f64>::eye(n)
}

pub fn to_na(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Naive triple loop.
pub fn matmul(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    assert_eq!(a.ncols(), b.nrows());
    let mut out = Array2::zeros((a.nrows(), b.ncols()));
    for i in 0..a.nrows() {
        for j in 0..b.ncols() {
            let mut s = 0.0;
            for k in 0..a.ncols() {
                s += a[[i, k]] * b[[k, j]];
            }
            out[[i, j]] = s;
        }
    }
    out
}

pub fn matvec(a: &Array2<f64>, x: ArrayView1<f64>) -> Array1<f64> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|k| a[[i, k]] * x[k]).sum())
        .collect()
}

pub fn norm(x: ArrayView1<f64>) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Real eigenvalues of `inverse(b)·m` via a nonsymmetric Schur decomposition,
/// sorted ascending.
pub fn brute_gen_eigenvalues(m: &Array2<f64>, b: &Array2<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let binv = to_na(b).try_inverse().expect("invertible B");
    let a = binv * to_na(m);
    let eig = a.clone().schur().complex_eigenvalues();
    let mut vals: Vec<f64> = eig.iter().map(|c| c.re).collect();
    vals.sort_by(f64::total_cmp);
    (a, vals)
}

/// Unit null vector of `a − λI`: right singular vector of the smallest
/// singular value.
pub fn null_vector(a: &DMatrix<f64>, lambda: f64) -> Vec<f64> {
    let n = a.nrows();
    let shifted = a - DMatrix::<f64>::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .unwrap();
    vt.row(imin).iter().copied().collect()
}

/// Max abs difference between two vectors after aligning their signs.
pub fn sign_aligned_diff(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let s = if dot < 0.0 { -1.0 } else { 1.0 };
    u.iter().zip(v).map(|(a, b)| (a - s * b).abs()).fold(0.0, f64::max)
}

/// O(n²) kNN graph: each point links to its `k` nearest others, ties broken
/// by lower index, then the relation is symmetrized.
pub fn brute_knn_edges(points: &Array2<f64>, k: usize) -> BTreeSet<(usize, usize)> {
    let n = points.nrows();
    let mut edges = BTreeSet::new();
    for i in 0..n {
        let mut d: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let dist: f64 = points
                    .row(i)
                    .iter()
                    .zip(points.row(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (dist, j)
            })
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in &d[..k] {
            edges.insert((i.min(j), i.max(j)));
        }
    }
    edges
}

/// Principal axes of the mean-centered rows, strongest first, via SVD.
pub fn centered_principal_axes(a: &Array2<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mean = a.mean_axis(ndarray::Axis(0)).unwrap();
    let centered = to_na(&(a - &mean));
    let svd = centered.svd(false, true);
    let vt = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let vals = order.iter().map(|&i| svd.singular_values[i].powi(2)).collect();
    let axes = order.iter().map(|&i| vt.row(i).iter().copied().collect()).collect();
    (vals, axes)
}

/// Angle between lines through `u` and `v`, in degrees, via arccos.
pub fn arccos_angle(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot.abs() / (nu * nv)).min(1.0).acos().to_degrees()
}
