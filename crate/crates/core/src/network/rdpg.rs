use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{symmetric_leading, SpectrumOrder};
use crate::rng::StreamRng;

/// Adjacency spectral embedding `Û = U_A |S_A|^{1/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdpgFit {
    /// n×d latent positions, columns ordered by decreasing |eigenvalue|.
    #[serde(with = "crate::io::serde_matrix")]
    pub u_hat: DMatrix<f64>,
    pub eigvals: Vec<f64>,
    pub d: usize,
}

impl RdpgFit {
    /// Reconstructed edge-probability matrix `Û Ûᵀ`.
    pub fn reconstruction(&self) -> DMatrix<f64> {
        &self.u_hat * self.u_hat.transpose()
    }
}

pub fn spectral_embed(graph: &Graph, d: usize) -> Result<RdpgFit> {
    spectral_embed_matrix(graph.adjacency(), d)
}

/// Spectral embedding of any symmetric matrix (not necessarily a valid adjacency).
pub fn spectral_embed_matrix(a: &DMatrix<f64>, d: usize) -> Result<RdpgFit> {
    let n = a.nrows();
    if d == 0 {
        return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
    }
    if d > n {
        return Err(Error::Dimension(format!("embedding dimension {d} exceeds node count {n}")));
    }
    let eig = symmetric_leading(a, d, SpectrumOrder::Magnitude)?;
    let mut u_hat = eig.vectors;
    for (c, lam) in eig.values.iter().enumerate() {
        u_hat.column_mut(c).scale_mut(lam.abs().sqrt());
    }
    Ok(RdpgFit { u_hat, eigvals: eig.values, d })
}

/// A simulated RDPG draw plus how many pair probabilities had to be clamped.
#[derive(Debug, Clone)]
pub struct RdpgDraw {
    pub graph: Graph,
    pub clamped: usize,
}

/// Symmetric Bernoulli draws with `p_ij = clamp(rho · u_iᵀu_j, 0, 1)`.
pub fn rdpg_simulate(u: &DMatrix<f64>, rho: f64, rng: &mut StreamRng) -> Result<RdpgDraw> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidArgument(format!("sparsity factor {rho} outside [0,1]")));
    }
    let n = u.nrows();
    let gram = u * u.transpose();
    let mut a = DMatrix::zeros(n, n);
    let mut clamped = 0;
    for i in 0..n {
        for j in i + 1..n {
            let raw = rho * gram[(i, j)];
            if !raw.is_finite() {
                return Err(Error::Numerical(format!("non-finite edge probability at ({i},{j})")));
            }
            let p = if raw < 0.0 {
                clamped += 1;
                0.0
            } else if raw > 1.0 {
                clamped += 1;
                1.0
            } else {
                raw
            };
            // One uniform per pair keeps the stream layout independent of p.
            let draw: f64 = rng.random();
            if draw < p {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    Ok(RdpgDraw { graph: Graph::new(a)?, clamped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn two_node_embedding() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let fit = spectral_embed(&g, 1).unwrap();
        assert!((fit.eigvals[0].abs() - 1.0).abs() < 1e-12);
        for i in 0..2 {
            assert!((fit.u_hat[(i, 0)].abs() - 0.5f64.sqrt()).abs() < 1e-12);
        }
        assert_eq!(fit.u_hat[(0, 0)].signum(), fit.u_hat[(1, 0)].signum());
    }

    #[test]
    fn rank_one_matrix_recovers_direction() {
        let a = DMatrix::from_element(3, 3, 1.0);
        let fit = spectral_embed_matrix(&a, 1).unwrap();
        for i in 0..3 {
            assert!((fit.u_hat[(i, 0)] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn erdos_renyi_reconstruction_tracks_density() {
        let n = 200;
        let u = DMatrix::from_element(n, 1, 0.3f64.sqrt());
        let draw = rdpg_simulate(&u, 1.0, &mut stream(11, "er", 0)).unwrap();
        let fit = spectral_embed(&draw.graph, 1).unwrap();
        let rec = fit.reconstruction();
        let mean = rec.mean();
        assert!((mean - draw.graph.density()).abs() < 0.02, "{mean} vs {}", draw.graph.density());
        assert!((mean - 0.3).abs() < 0.03);
    }

    #[test]
    fn dimension_checks() {
        let g = Graph::empty(3);
        assert!(spectral_embed(&g, 4).is_err());
        assert!(spectral_embed(&g, 0).is_err());
    }

    #[test]
    fn simulate_boundaries() {
        let n = 30;
        let u = DMatrix::from_element(n, 1, 1.0);
        let empty = rdpg_simulate(&u, 0.0, &mut stream(1, "s", 0)).unwrap();
        assert_eq!(empty.graph.edge_count(), 0.0);
        let full = rdpg_simulate(&u, 1.0, &mut stream(1, "s", 0)).unwrap();
        assert_eq!(full.graph.edge_count(), (n * (n - 1) / 2) as f64);
        let over = rdpg_simulate(&(u * 2.0), 1.0, &mut stream(1, "s", 0)).unwrap();
        assert_eq!(over.clamped, n * (n - 1) / 2);
    }

    #[test]
    fn simulate_is_reproducible() {
        let u = DMatrix::from_fn(40, 2, |i, j| 0.2 + 0.01 * (i + j) as f64);
        let a = rdpg_simulate(&u, 0.8, &mut stream(5, "s", 2)).unwrap();
        let b = rdpg_simulate(&u, 0.8, &mut stream(5, "s", 2)).unwrap();
        assert_eq!(a.graph, b.graph);
    }

    #[test]
    fn empirical_edge_frequencies_match_probabilities() {
        let n = 6;
        let u = DMatrix::from_fn(n, 2, |i, j| 0.25 + 0.08 * i as f64 + 0.05 * j as f64);
        let rho = 0.9;
        let runs = 500;
        let mut counts = DMatrix::<f64>::zeros(n, n);
        for r in 0..runs {
            counts += rdpg_simulate(&u, rho, &mut stream(99, "freq", r)).unwrap().graph.adjacency();
        }
        let p = &u * u.transpose() * rho;
        for i in 0..n {
            for j in i + 1..n {
                let pij = p[(i, j)].clamp(0.0, 1.0);
                let band = 4.0 * (pij * (1.0 - pij) / runs as f64).sqrt();
                let freq = counts[(i, j)] / runs as f64;
                assert!((freq - pij).abs() <= band, "pair ({i},{j}): {freq} vs {pij}");
            }
        }
    }
}
