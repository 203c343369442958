//! LPP and PCA direction discovery over a generator weight matrix, plus
//! angle-based comparison of two direction families.
//!
//! The weight matrix holds one weight vector per row (`n_points × latent_dim`).
//! Graph vertices are those rows, and with `X = Aᵀ` the locality-preserving
//! problem is
//!
//! ```text
//! argmin uᵀ X L Xᵀ u   subject to   uᵀ X D Xᵀ u = 1
//! ```
//!
//! which is solved as a generalized symmetric eigenproblem of size
//! `latent_dim`. PCA directions are the leading eigenvectors of the
//! uncentered `AᵀA`.

use std::fmt;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{knn_graph_rows, NeighborGraph};
use crate::spectral::{gen_sym_eig, singular_values, sym_eig, Ordering, Regularization, SymMatrix};

/// Eigenvalues at or below this fraction of the largest magnitude are flagged
/// as trivial.
pub const TRIVIAL_EIGENVALUE_RATIO: f64 = 1e-12;

/// Tolerance on `‖u‖ = 1` for stored directions.
pub const UNIT_NORM_TOL: f64 = 1e-10;

/// Generator weights, one weight vector per row.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    data: Array2<f64>,
}

impl WeightMatrix {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (n, d) = data.dim();
        if n < 2 {
            return Err(Error::DimensionMismatch(format!(
                "weight matrix needs at least 2 rows, got {n}"
            )));
        }
        if d < 2 {
            return Err(Error::DimensionMismatch(format!(
                "weight matrix needs latent_dim >= 2, got {d}"
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("weight matrix"));
        }
        Ok(WeightMatrix {
            data: data.as_standard_layout().into_owned(),
        })
    }

    pub fn n_points(&self) -> usize {
        self.data.nrows()
    }

    pub fn latent_dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lpp,
    Pca,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Lpp => f.write_str("LPP"),
            Method::Pca => f.write_str("PCA"),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lpp" => Ok(Method::Lpp),
            "pca" => Ok(Method::Pca),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

/// Parameters a direction set was computed with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionParams {
    /// Neighbor count (LPP only).
    pub k: Option<usize>,
    pub count_requested: usize,
    /// Regularization as requested (LPP only).
    pub regularization: Option<Regularization>,
    /// Diagonal shift actually applied to `X D Xᵀ` (LPP only).
    pub regularization_used: Option<f64>,
}

/// Ordered unit-norm directions in latent space.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionSet {
    method: Method,
    /// One direction per row.
    directions: Array2<f64>,
    eigenvalues: Vec<f64>,
    trivial: Vec<bool>,
    params: DirectionParams,
}

impl DirectionSet {
    /// Assembles a direction set, checking every invariant.
    pub fn from_parts(
        method: Method,
        directions: Array2<f64>,
        eigenvalues: Vec<f64>,
        params: DirectionParams,
    ) -> Result<Self> {
        let (count, latent_dim) = directions.dim();
        if eigenvalues.len() != count {
            return Err(Error::DimensionMismatch(format!(
                "{count} directions but {} eigenvalues",
                eigenvalues.len()
            )));
        }
        if count > latent_dim {
            return Err(Error::CountTooLarge { count, latent_dim });
        }
        if directions.iter().chain(&eigenvalues).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("direction set"));
        }
        for (i, row) in directions.rows().into_iter().enumerate() {
            let norm = row.dot(&row).sqrt();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::InvalidArgument(format!(
                    "direction {i} has norm {norm}, expected 1"
                )));
            }
        }
        let sorted = eigenvalues.windows(2).all(|w| match method {
            Method::Lpp => w[0] <= w[1],
            Method::Pca => w[0] >= w[1],
        });
        if !sorted {
            return Err(Error::InvalidArgument(format!(
                "{method} eigenvalues must be {}",
                match method {
                    Method::Lpp => "ascending",
                    Method::Pca => "descending",
                }
            )));
        }
        let trivial = trivial_flags(&eigenvalues);
        Ok(DirectionSet {
            method,
            directions: directions.as_standard_layout().into_owned(),
            eigenvalues,
            trivial,
            params,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn latent_dim(&self) -> usize {
        self.directions.ncols()
    }

    pub fn count(&self) -> usize {
        self.directions.nrows()
    }

    pub fn direction(&self, i: usize) -> ArrayView1<'_, f64> {
        self.directions.row(i)
    }

    /// All directions, one per row.
    pub fn directions(&self) -> &Array2<f64> {
        &self.directions
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `true` for directions whose eigenvalue is negligible relative to the
    /// largest one (kept, but flagged).
    pub fn trivial(&self) -> &[bool] {
        &self.trivial
    }

    pub fn params(&self) -> &DirectionParams {
        &self.params
    }

    /// SHA-256 of the directions encoded as an `LDM1` file. Matches the
    /// content hash recorded in a manifest.
    pub fn fingerprint(&self) -> String {
        crate::io::sha256_hex(&crate::io::encode_matrix(&self.directions))
    }
}

fn trivial_flags(eigenvalues: &[f64]) -> Vec<bool> {
    let max = eigenvalues.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    eigenvalues
        .iter()
        .map(|x| x.abs() <= TRIVIAL_EIGENVALUE_RATIO * max)
        .collect()
}

fn check_count(a: &WeightMatrix, count: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    if count > a.latent_dim() {
        return Err(Error::CountTooLarge {
            count,
            latent_dim: a.latent_dim(),
        });
    }
    Ok(())
}

/// Leading eigenvectors of the uncentered `AᵀA`, eigenvalues descending.
pub fn pca_directions(a: &WeightMatrix, count: usize) -> Result<DirectionSet> {
    check_count(a, count)?;
    let w = a.as_array();
    let gram = SymMatrix::new(w.t().dot(w))?;
    let eig = sym_eig(&gram, Ordering::Descending)?;
    let directions = eig
        .eigenvectors
        .slice(ndarray::s![.., ..count])
        .t()
        .to_owned();
    DirectionSet::from_parts(
        Method::Pca,
        directions,
        eig.eigenvalues.iter().take(count).copied().collect(),
        DirectionParams {
            k: None,
            count_requested: count,
            regularization: None,
            regularization_used: None,
        },
    )
}

/// The two `latent_dim × latent_dim` forms of the locality-preserving problem.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplacianForms {
    /// `X L Xᵀ`
    pub locality: SymMatrix,
    /// `X D Xᵀ`
    pub degree: SymMatrix,
}

/// Builds `X L Xᵀ` and `X D Xᵀ` (with `X = Aᵀ`) from the graph's edge list.
///
/// `L Xᵀ` is formed row by row as `Σⱼ (aᵢ − aⱼ)` over neighbors `j`, so
/// identical rows give an exactly zero locality form.
pub fn laplacian_forms(a: &WeightMatrix, g: &NeighborGraph) -> Result<LaplacianForms> {
    let w = a.as_array();
    if g.n_points() != a.n_points() {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} vertices, weight matrix has {} rows",
            g.n_points(),
            a.n_points()
        )));
    }
    let adjacency = g.adjacency_lists();
    let mut lx = Array2::<f64>::zeros(w.dim());
    for (i, nbrs) in adjacency.iter().enumerate() {
        let mut row = lx.row_mut(i);
        let ai = w.row(i);
        for &j in nbrs {
            let aj = w.row(j);
            row.zip_mut_with(&(&ai - &aj), |acc, d| *acc += d);
        }
    }
    let mut dx = w.to_owned();
    for (mut row, &d) in dx.axis_iter_mut(Axis(0)).zip(g.degree()) {
        row *= d as f64;
    }
    Ok(LaplacianForms {
        locality: SymMatrix::new(w.t().dot(&lx))?,
        degree: SymMatrix::new(w.t().dot(&dx))?,
    })
}

/// Locality-preserving directions: the `count` smallest generalized
/// eigenvectors of `(X L Xᵀ, X D Xᵀ)` over a `k`-NN graph of the rows,
/// rescaled to unit Euclidean norm.
pub fn lpp_directions(
    a: &WeightMatrix,
    k: usize,
    count: usize,
    regularization: Regularization,
) -> Result<DirectionSet> {
    check_count(a, count)?;
    let graph = knn_graph_rows(a.as_array().view(), k)?;
    log::debug!(
        "knn graph: {} vertices, {} edges",
        graph.n_points(),
        graph.edges().len()
    );
    let forms = laplacian_forms(a, &graph)?;
    let solved = gen_sym_eig(
        &forms.locality,
        &forms.degree,
        regularization,
        Ordering::Ascending,
    )?;

    let mut directions = solved
        .eigen
        .eigenvectors
        .slice(ndarray::s![.., ..count])
        .t()
        .to_owned();
    for mut row in directions.rows_mut() {
        let norm = row.dot(&row).sqrt();
        row /= norm;
    }
    DirectionSet::from_parts(
        Method::Lpp,
        directions,
        solved.eigen.eigenvalues.iter().take(count).copied().collect(),
        DirectionParams {
            k: Some(k),
            count_requested: count,
            regularization: Some(regularization),
            regularization_used: Some(solved.regularization),
        },
    )
}

/// Angles between two direction families, in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// Sign-invariant angle between the i-th directions of each set, in `[0, 90]`.
    pub pairwise_angles: Vec<f64>,
    /// Principal angles between the spans of the top-`r` directions, non-decreasing.
    pub principal_angles: Vec<f64>,
    pub r: usize,
}

/// Sign-invariant angle between two lines, in degrees within `[0, 90]`.
///
/// Equal to `acos(|u·v| / (‖u‖‖v‖))` but evaluated as
/// `2·atan2(‖û − sv̂‖, ‖û + sv̂‖)` so small angles keep full precision.
pub fn line_angle_degrees(u: ArrayView1<f64>, v: ArrayView1<f64>) -> f64 {
    let nu = u.dot(&u).sqrt();
    let nv = v.dot(&v).sqrt();
    let s = if u.dot(&v) < 0.0 { -1.0 } else { 1.0 };
    let mut diff = 0.0;
    let mut sum = 0.0;
    for (x, y) in u.iter().zip(v.iter()) {
        let (x, y) = (x / nu, s * y / nv);
        diff += (x - y) * (x - y);
        sum += (x + y) * (x + y);
    }
    (2.0 * diff.sqrt().atan2(sum.sqrt())).to_degrees()
}

/// Orthonormal basis (rows) for the span of the rows of `m`, via twice-applied
/// modified Gram-Schmidt.
fn orthonormal_rows(m: ArrayView2<f64>) -> Result<Array2<f64>> {
    let mut q = m.to_owned();
    for i in 0..q.nrows() {
        for _pass in 0..2 {
            for j in 0..i {
                let proj = q.row(i).dot(&q.row(j));
                let qj = q.row(j).to_owned();
                q.row_mut(i).scaled_add(-proj, &qj);
            }
        }
        let norm = q.row(i).dot(&q.row(i)).sqrt();
        if !(norm > 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "direction {i} is linearly dependent on the preceding ones"
            )));
        }
        q.row_mut(i).mapv_inplace(|x| x / norm);
    }
    Ok(q)
}

/// Principal angles (degrees, non-decreasing) between the row spans of two
/// equally sized sets of vectors.
///
/// Cosines are the singular values of the cross-Gram matrix, sines those of
/// the residual of one basis after projection onto the other. Each angle is
/// taken from whichever is better conditioned.
pub fn principal_angles(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<Vec<f64>> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "principal angles need equal shapes, got {:?} and {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let qa = orthonormal_rows(a)?;
    let qb = orthonormal_rows(b)?;
    let cross = qa.dot(&qb.t());
    let residual = &qb - &cross.t().dot(&qa);

    let cosines = singular_values(&cross)?;
    let mut sines = singular_values(&residual)?;
    sines.truncate(cosines.len());
    sines.reverse();

    let mut angles: Vec<f64> = cosines
        .iter()
        .zip(&sines)
        .map(|(&c, &s)| {
            let (c, s) = (c.clamp(0.0, 1.0), s.clamp(0.0, 1.0));
            let theta = if c * c >= 0.5 { s.asin() } else { c.acos() };
            theta.to_degrees().clamp(0.0, 90.0)
        })
        .collect();
    angles.sort_by(|x, y| x.partial_cmp(y).expect("finite angles"));
    Ok(angles)
}

/// Compares the top-`r` directions of two sets.
pub fn compare_directions(
    a_set: &DirectionSet,
    b_set: &DirectionSet,
    r: usize,
) -> Result<ComparisonReport> {
    if a_set.latent_dim() != b_set.latent_dim() {
        return Err(Error::DimensionMismatch(format!(
            "latent dims differ: {} vs {}",
            a_set.latent_dim(),
            b_set.latent_dim()
        )));
    }
    let available = a_set.count().min(b_set.count());
    if r == 0 || r > available {
        return Err(Error::DimensionMismatch(format!(
            "r = {r} must be in 1..={available}"
        )));
    }
    let pairwise_angles = (0..r)
        .map(|i| line_angle_degrees(a_set.direction(i), b_set.direction(i)))
        .collect();
    let top = ndarray::s![..r, ..];
    let principal = principal_angles(
        a_set.directions().slice(top),
        b_set.directions().slice(top),
    )?;
    Ok(ComparisonReport {
        pairwise_angles,
        principal_angles: principal,
        r,
    })
}

/// Centered scatter matrix `Σ (xᵢ − μ)(xᵢ − μ)ᵀ` of the rows.
pub fn centered_scatter(a: &WeightMatrix) -> Result<SymMatrix> {
    let w = a.as_array();
    let mean: Array1<f64> = w.mean_axis(Axis(0)).expect("non-empty");
    let centered = w - &mean;
    SymMatrix::new(centered.t().dot(&centered))
}
