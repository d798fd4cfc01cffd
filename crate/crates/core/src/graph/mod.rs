//! Adjacency representation, the row-normalized peer operator, and
//! structural network statistics.

mod community;
mod stats;

pub use community::{greedy_partition, modularity, modularity_of, CommunityPartition};
pub use stats::{sd_row_means, transitivity};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Undirected graph stored as a dense symmetric adjacency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    a: DMatrix<f64>,
    deg: DVector<f64>,
}

impl Graph {
    /// Wrap an adjacency matrix. It must be square, exactly symmetric,
    /// finite, nonnegative, and have a zero diagonal.
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!("adjacency must be square, got {}x{}", n, a.ncols())));
        }
        for i in 0..n {
            if a[(i, i)] != 0.0 {
                return Err(Error::InvalidArgument(format!("nonzero diagonal entry at node {i}")));
            }
            for j in 0..i {
                let v = a[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidArgument(format!("edge weight a[{i},{j}] = {v} is not a finite nonnegative number")));
                }
                if v != a[(j, i)] {
                    return Err(Error::InvalidArgument(format!("adjacency is not symmetric at ({i},{j})")));
                }
            }
        }
        let deg = DVector::from_fn(n, |i, _| a.row(i).sum());
        Ok(Graph { a, deg })
    }

    /// Like [`Graph::new`] but tolerates asymmetry up to `tol`, replacing
    /// the matrix by its symmetric part.
    pub fn from_near_symmetric(a: DMatrix<f64>, tol: f64) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!("adjacency must be square, got {}x{}", n, a.ncols())));
        }
        for i in 0..n {
            for j in 0..i {
                if (a[(i, j)] - a[(j, i)]).abs() > tol {
                    return Err(Error::InvalidArgument(format!(
                        "adjacency asymmetric beyond {tol:e} at ({i},{j}): {} vs {}",
                        a[(i, j)],
                        a[(j, i)]
                    )));
                }
            }
        }
        let sym = DMatrix::from_fn(n, n, |i, j| if i == j { a[(i, i)] } else { 0.5 * (a[(i, j)] + a[(j, i)]) });
        Graph::new(sym)
    }

    /// Build a binary graph from an undirected edge list.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut a = DMatrix::zeros(n, n);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidArgument(format!("edge ({i},{j}) out of range for {n} nodes")));
            }
            if i == j {
                return Err(Error::InvalidArgument(format!("self loop at node {i}")));
            }
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        Graph::new(a)
    }

    pub fn empty(n: usize) -> Self {
        Graph { a: DMatrix::zeros(n, n), deg: DVector::zeros(n) }
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn degrees(&self) -> &DVector<f64> {
        &self.deg
    }

    pub fn edge_count(&self) -> f64 {
        self.deg.sum() / 2.0
    }

    /// Fraction of node pairs that carry an edge.
    pub fn density(&self) -> f64 {
        let n = self.n() as f64;
        if n < 2.0 {
            return 0.0;
        }
        self.edge_count() / (n * (n - 1.0) / 2.0)
    }

    pub fn is_binary(&self) -> bool {
        self.a.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Neighbor lists (nodes with positive weight), ascending.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        (0..n)
            .map(|i| (0..n).filter(|&j| self.a[(i, j)] > 0.0).collect())
            .collect()
    }

    /// Subgraph induced by `keep` (in the given order).
    pub fn induced(&self, keep: &[usize]) -> Result<Self> {
        if let Some(&bad) = keep.iter().find(|&&i| i >= self.n()) {
            return Err(Error::InvalidArgument(format!("node {bad} out of range")));
        }
        let k = keep.len();
        Graph::new(DMatrix::from_fn(k, k, |i, j| self.a[(keep[i], keep[j])]))
    }

    /// Relabel nodes: node `perm[i]` of the result is node `i` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        if perm.len() != n {
            return Err(Error::Dimension(format!("permutation of length {} for {n} nodes", perm.len())));
        }
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(perm[i], perm[j])] = self.a[(i, j)];
            }
        }
        Graph::new(a)
    }
}

/// Row-normalized adjacency `G` with `g_ij = a_ij / deg_i`.
///
/// Rows of zero-degree nodes are left entirely zero so that `G` keeps the
/// same dimensions as the covariates; those nodes are listed in `isolated`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeerOperator {
    g: DMatrix<f64>,
    isolated: Vec<usize>,
}

impl PeerOperator {
    /// Wraps an arbitrary square interaction matrix. Rows summing to zero are
    /// recorded as isolated.
    pub fn from_matrix(g: DMatrix<f64>) -> Result<Self> {
        if !g.is_square() {
            return Err(Error::Dimension(format!(
                "peer operator must be square, got {}x{}",
                g.nrows(),
                g.ncols()
            )));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput("non-finite entry in peer operator".into()));
        }
        let isolated = (0..g.nrows())
            .filter(|&i| g.row(i).iter().all(|&v| v == 0.0))
            .collect();
        Ok(PeerOperator { g, isolated })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn isolated(&self) -> &[usize] {
        &self.isolated
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    /// `G · m`.
    pub fn apply(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        &self.g * m
    }
}

pub fn row_normalize(graph: &Graph) -> PeerOperator {
    let n = graph.n();
    let mut g = graph.a.clone();
    let mut isolated = Vec::new();
    for i in 0..n {
        let d = graph.deg[i];
        if d > 0.0 {
            g.row_mut(i).unscale_mut(d);
        } else {
            isolated.push(i);
        }
    }
    PeerOperator { g, isolated }
}
