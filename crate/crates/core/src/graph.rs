//! k-nearest-neighbor graphs over weight vectors and their Laplacians.

use ndarray::{Array1, Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectral::SymMatrix;

/// Points stored as the rows of a dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    points: Array2<f64>,
}

impl PointSet {
    pub fn new(points: Array2<f64>) -> Result<Self> {
        check_points(points.view())?;
        Ok(PointSet {
            points: points.as_standard_layout().into_owned(),
        })
    }

    pub fn n_points(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.points
    }
}

fn check_points(points: ArrayView2<f64>) -> Result<()> {
    if points.nrows() < 2 {
        return Err(Error::DimensionMismatch(format!(
            "need at least 2 points, got {}",
            points.nrows()
        )));
    }
    if points.ncols() == 0 {
        return Err(Error::DimensionMismatch("points have dimension 0".into()));
    }
    if points.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("point set"));
    }
    Ok(())
}

/// Undirected binary adjacency graph, stored as a sorted edge list.
///
/// Each edge `(i, j)` has `i < j`. `degree[i]` counts the edges touching `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborGraph {
    n_points: usize,
    k: usize,
    edges: Vec<(usize, usize)>,
    degree: Vec<usize>,
}

impl NeighborGraph {
    /// Builds a graph from an explicit edge list. Duplicates and orientation
    /// are normalized; self loops are rejected. `k` is recorded as 0.
    pub fn from_edges(n_points: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut normalized = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b {
                return Err(Error::InvalidArgument(format!("self loop at vertex {a}")));
            }
            if a >= n_points || b >= n_points {
                return Err(Error::IndexOutOfRange {
                    index: a.max(b),
                    count: n_points,
                });
            }
            normalized.push((a.min(b), a.max(b)));
        }
        Ok(Self::from_normalized(n_points, 0, normalized))
    }

    fn from_normalized(n_points: usize, k: usize, mut edges: Vec<(usize, usize)>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        let mut degree = vec![0; n_points];
        for &(a, b) in &edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        NeighborGraph {
            n_points,
            k,
            edges,
            degree,
        }
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Neighbor count used to build the graph (0 for explicit edge lists).
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self) -> &[usize] {
        &self.degree
    }

    /// Sorted neighbor lists per vertex.
    pub fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        let mut lists = vec![Vec::new(); self.n_points];
        for &(a, b) in &self.edges {
            lists[a].push(b);
            lists[b].push(a);
        }
        lists.iter_mut().for_each(|l| l.sort_unstable());
        lists
    }

    /// Dense adjacency matrix `W`. Only sensible for small graphs.
    pub fn adjacency_matrix(&self) -> Array2<f64> {
        let mut w = Array2::zeros((self.n_points, self.n_points));
        for &(a, b) in &self.edges {
            w[[a, b]] = 1.0;
            w[[b, a]] = 1.0;
        }
        w
    }
}

/// Squared Euclidean distance, accumulated in eight fixed lanes so the
/// compiler can vectorize while the summation order stays fixed.
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [0.0_f64; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (xa, xb) in (&mut ca).zip(&mut cb) {
        for l in 0..8 {
            let d = xa[l] - xb[l];
            lanes[l] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        let d = x - y;
        tail += d * d;
    }
    ((lanes[0] + lanes[4]) + (lanes[1] + lanes[5]))
        + ((lanes[2] + lanes[6]) + (lanes[3] + lanes[7]))
        + tail
}

/// k-nearest-neighbor graph with union symmetrization.
///
/// `(i, j)` is an edge iff `j` is among the `k` nearest points of `i` or vice
/// versa. Distance ties go to the lower index; a point is never its own
/// neighbor.
pub fn knn_graph(points: &PointSet, k: usize) -> Result<NeighborGraph> {
    knn_graph_rows(points.as_array().view(), k)
}

pub(crate) fn knn_graph_rows(points: ArrayView2<f64>, k: usize) -> Result<NeighborGraph> {
    check_points(points)?;
    let n = points.nrows();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k >= n {
        return Err(Error::KTooLarge { k, n_points: n });
    }
    let points = points.as_standard_layout();
    let flat = points.as_slice().expect("standard layout");
    let dim = points.ncols();
    let row = |i: usize| &flat[i * dim..(i + 1) * dim];

    let directed: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = row(i);
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (squared_distance(xi, row(j)), j))
                .collect();
            let by_dist = |a: &(f64, usize), b: &(f64, usize)| {
                a.0.partial_cmp(&b.0)
                    .expect("finite distances")
                    .then(a.1.cmp(&b.1))
            };
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, by_dist);
                cand.truncate(k);
            }
            cand.sort_unstable_by(by_dist);
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect();

    let edges = directed
        .iter()
        .enumerate()
        .flat_map(|(i, nbrs)| nbrs.iter().map(move |&j| (i.min(j), i.max(j))))
        .collect();
    Ok(NeighborGraph::from_normalized(n, k, edges))
}

/// Degree vector and Laplacian `L = D − W` of a graph.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphLaplacian {
    pub degree: Array1<f64>,
    pub laplacian: SymMatrix,
}

impl GraphLaplacian {
    pub fn degree_matrix(&self) -> Array2<f64> {
        Array2::from_diag(&self.degree)
    }
}

/// Dense degree and Laplacian matrices.
///
/// The Laplacian is assembled in integer arithmetic and cast at the end, so
/// every row sums to exactly zero. This materializes an `n × n` matrix; the
/// direction solvers work from the edge list instead.
pub fn laplacian(g: &NeighborGraph) -> Result<GraphLaplacian> {
    let n = g.n_points();
    let mut lap = vec![0_i64; n * n];
    for &(a, b) in g.edges() {
        lap[a * n + b] -= 1;
        lap[b * n + a] -= 1;
    }
    for (i, &d) in g.degree().iter().enumerate() {
        lap[i * n + i] = d as i64;
    }
    let dense = Array2::from_shape_vec((n, n), lap.into_iter().map(|x| x as f64).collect())
        .expect("n*n entries");
    Ok(GraphLaplacian {
        degree: g.degree().iter().map(|&d| d as f64).collect(),
        laplacian: SymMatrix::new(dense)?,
    })
}
