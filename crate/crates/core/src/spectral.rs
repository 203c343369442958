//! Dense symmetric and generalized symmetric-definite eigensolvers.
//!
//! The standard problem is solved by Householder reduction to tridiagonal
//! form followed by implicit QL iterations with accumulated rotations. The
//! generalized problem `M u = λ (B + εI) u` is reduced to the standard one by
//! Cholesky whitening, so every returned vector is `B'`-orthonormal.
//!
//! All routines are sequential and deterministic: identical inputs give
//! bit-identical outputs.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_QL_SWEEPS: usize = 60;

/// A dense real symmetric matrix.
///
/// Construction symmetrizes the input by averaging it with its transpose, so
/// `entries[i][j] == entries[j][i]` holds exactly afterwards.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    data: Array2<f64>,
}

impl SymMatrix {
    pub fn new(m: Array2<f64>) -> Result<Self> {
        let (rows, cols) = m.dim();
        if rows != cols {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square, got {rows}x{cols}"
            )));
        }
        if rows == 0 {
            return Err(Error::DimensionMismatch(
                "symmetric matrix must have dim >= 1".into(),
            ));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("symmetric matrix"));
        }
        let mut data = m;
        for i in 0..rows {
            for j in (i + 1)..rows {
                let avg = 0.5 * (data[[i, j]] + data[[j, i]]);
                data[[i, j]] = avg;
                data[[j, i]] = avg;
            }
        }
        Ok(SymMatrix { data })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        SymMatrix::new(Array2::eye(dim))
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        SymMatrix::new(Array2::from_diag(&ArrayView1::from(diag)))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    pub fn trace(&self) -> f64 {
        self.data.diag().sum()
    }
}

/// Order in which eigenpairs are returned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    Ascending,
    Descending,
}

/// Eigenvalues with their unit-norm (or `B'`-normalized) eigenvectors.
///
/// Eigenvectors are stored as the columns of `eigenvectors`. Each column is
/// sign-normalized so that its largest-magnitude component is positive.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenResult {
    pub eigenvalues: Array1<f64>,
    pub eigenvectors: Array2<f64>,
    pub ordering: Ordering,
}

impl EigenResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, i: usize) -> ArrayView1<'_, f64> {
        self.eigenvectors.column(i)
    }
}

/// Shift applied to `B` before factorization in [`gen_sym_eig`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularization {
    /// No shift if `B` factors cleanly, otherwise `1e-10 * trace(B) / dim`.
    Auto,
    Fixed(f64),
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization::Auto
    }
}

/// Result of [`gen_sym_eig`]: eigenpairs plus the shift that was actually used.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedEigen {
    pub eigen: EigenResult,
    pub regularization: f64,
}

/// Relative size of the automatic diagonal shift.
pub const AUTO_REGULARIZATION_SCALE: f64 = 1e-10;

/// Full eigendecomposition of a symmetric matrix.
pub fn sym_eig(m: &SymMatrix, ordering: Ordering) -> Result<EigenResult> {
    let n = m.dim();
    let mut v: Vec<f64> = m.as_array().iter().copied().collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, n, &mut d, &mut e);

    // QL rotations act on eigenvector columns; keep them as contiguous rows.
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            vt[j * n + i] = v[i * n + j];
        }
    }
    tql2(&mut vt, n, &mut d, &mut e)?;

    let order = sorted_indices(&d, ordering);
    let mut eigenvalues = Array1::zeros(n);
    let mut eigenvectors = Array2::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        eigenvalues[col] = d[src];
        let mut vec = vt[src * n..(src + 1) * n].to_vec();
        let norm = vec.iter().map(|x| x * x).sum::<f64>().sqrt();
        vec.iter_mut().for_each(|x| *x /= norm);
        canonical_sign(&mut vec);
        for (row, x) in vec.into_iter().enumerate() {
            eigenvectors[[row, col]] = x;
        }
    }
    Ok(EigenResult {
        eigenvalues,
        eigenvectors,
        ordering,
    })
}

/// Solves `m u = λ (b + εI) u` by Cholesky whitening.
///
/// Returned vectors satisfy `uᵢᵀ (b + εI) uⱼ = δᵢⱼ`.
pub fn gen_sym_eig(
    m: &SymMatrix,
    b: &SymMatrix,
    regularization: Regularization,
    ordering: Ordering,
) -> Result<GeneralizedEigen> {
    let n = m.dim();
    if b.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "generalized eigenproblem needs equal dims, got {} and {}",
            n,
            b.dim()
        )));
    }
    let max_diag = b.as_array().diag().iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let singular_tol = n as f64 * f64::EPSILON * max_diag;

    let (chol, shift) = match regularization {
        Regularization::Fixed(eps) => {
            if !(eps >= 0.0 && eps.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "regularization must be a non-negative finite number, got {eps}"
                )));
            }
            let tol = if eps > 0.0 { 0.0 } else { singular_tol };
            (cholesky(b.as_array(), eps, tol)?, eps)
        }
        Regularization::Auto => match cholesky(b.as_array(), 0.0, singular_tol) {
            Ok(l) => (l, 0.0),
            Err(Error::NotPositiveDefinite { .. }) => {
                let eps = AUTO_REGULARIZATION_SCALE * b.trace() / n as f64;
                log::debug!("B is singular; regularizing with {eps:e}");
                if !(eps > 0.0) {
                    return Err(Error::NotPositiveDefinite {
                        pivot: 0,
                        value: b.trace(),
                    });
                }
                (cholesky(b.as_array(), eps, 0.0)?, eps)
            }
            Err(other) => return Err(other),
        },
    };

    // C = L⁻¹ M L⁻ᵀ = L⁻¹ (L⁻¹ M)ᵀ since M is symmetric.
    let y = forward_substitute(&chol, m.as_array());
    let c = forward_substitute(&chol, &y.t().as_standard_layout().to_owned());
    let whitened = SymMatrix::new(c)?;
    let std_eig = sym_eig(&whitened, ordering)?;

    let mut vectors = back_substitute_transposed(&chol, &std_eig.eigenvectors);
    for mut col in vectors.columns_mut() {
        let mut tmp = col.to_vec();
        canonical_sign(&mut tmp);
        col.iter_mut().zip(tmp).for_each(|(dst, x)| *dst = x);
    }
    Ok(GeneralizedEigen {
        eigen: EigenResult {
            eigenvalues: std_eig.eigenvalues,
            eigenvectors: vectors,
            ordering,
        },
        regularization: shift,
    })
}

/// Lower Cholesky factor of `b + shift·I`. Fails when a pivot is `<= tol`.
pub fn cholesky(b: &Array2<f64>, shift: f64, tol: f64) -> Result<Array2<f64>> {
    let n = b.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut diag = b[[j, j]] + shift;
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if !(diag > tol) || !diag.is_finite() {
            return Err(Error::NotPositiveDefinite {
                pivot: j,
                value: diag,
            });
        }
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..n {
            let mut s = b[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L X = rhs` for lower-triangular `L`.
fn forward_substitute(l: &Array2<f64>, rhs: &Array2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut x = rhs.to_owned();
    for i in 0..n {
        let (done, mut rest) = x.view_mut().split_at(ndarray::Axis(0), i);
        let mut row = rest.row_mut(0);
        for k in 0..i {
            row.scaled_add(-l[[i, k]], &done.row(k));
        }
        row /= l[[i, i]];
    }
    x
}

/// Solves `Lᵀ X = rhs` for lower-triangular `L`.
fn back_substitute_transposed(l: &Array2<f64>, rhs: &Array2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut x = rhs.to_owned();
    for i in (0..n).rev() {
        let (mut head, done) = x.view_mut().split_at(ndarray::Axis(0), i + 1);
        let mut row = head.row_mut(i);
        for k in (i + 1)..n {
            row.scaled_add(-l[[k, i]], &done.row(k - i - 1));
        }
        row /= l[[i, i]];
    }
    x
}

const MAX_JACOBI_SWEEPS: usize = 60;

/// Singular values of `a`, descending, by one-sided (Hestenes) Jacobi
/// rotations on its columns.
///
/// Small singular values keep high relative accuracy, which the
/// eigenvalues of `aᵀa` do not.
pub fn singular_values(a: &Array2<f64>) -> Result<Vec<f64>> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    // Work on whichever orientation has fewer columns.
    let mut w = if a.ncols() <= a.nrows() {
        a.to_owned()
    } else {
        a.t().to_owned()
    };
    let n = w.ncols();
    let mut converged = n < 2;
    for _ in 0..MAX_JACOBI_SWEEPS {
        if converged {
            break;
        }
        converged = true;
        for p in 0..n {
            for q in p + 1..n {
                let (cp, cq) = (w.column(p), w.column(q));
                let alpha = cp.dot(&cp);
                let beta = cq.dot(&cq);
                let gamma = cp.dot(&cq);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                converged = false;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..w.nrows() {
                    let (x, y) = (w[[i, p]], w[[i, q]]);
                    w[[i, p]] = c * x - s * y;
                    w[[i, q]] = s * x + c * y;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence(MAX_JACOBI_SWEEPS));
    }
    let mut sv: Vec<f64> = w.columns().into_iter().map(|c| c.dot(&c).sqrt()).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    Ok(sv)
}

/// Stable ordering of eigenvalue indices; ties keep solver order.
fn sorted_indices(values: &[f64], ordering: Ordering) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        let ord = values[a]
            .partial_cmp(&values[b])
            .expect("eigenvalues are finite");
        match ordering {
            Ordering::Ascending => ord,
            Ordering::Descending => ord.reverse(),
        }
    });
    idx
}

/// Flips `v` so that its largest-magnitude component (first one on ties) is positive.
pub fn canonical_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Householder reduction to tridiagonal form (EISPACK tred2).
///
/// On entry `v` holds the symmetric matrix row-major; on exit it holds the
/// accumulated orthogonal transform, `d` the diagonal and `e` the
/// subdiagonal in `e[1..]`.
fn tred2(v: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    let idx = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
                v[idx(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = 0.0;
    }
    v[idx(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal matrix (EISPACK tql2).
///
/// `vt` holds eigenvectors as rows (the transpose of the tred2 output).
fn tql2(vt: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }

        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_QL_SWEEPS {
                    return Err(Error::NoConvergence(l));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (lo, hi) = vt.split_at_mut((i + 1) * n);
                    let vi = &mut lo[i * n..];
                    let vi1 = &mut hi[..n];
                    for (a, b) in vi.iter_mut().zip(vi1.iter_mut()) {
                        let t = *b;
                        *b = s * *a + c * t;
                        *a = c * *a - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
