//! Universal singular value thresholding initializer for the latent space model.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{symmetric_leading, SpectrumOrder};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UsvtOptions {
    /// Singular values below `threshold_const · √(n p̂)` are discarded.
    pub threshold_const: f64,
    /// Probability estimates are clamped into `(clamp_eps, 1 − clamp_eps)`.
    pub clamp_eps: f64,
}

impl Default for UsvtOptions {
    fn default() -> Self {
        UsvtOptions { threshold_const: 2.01, clamp_eps: 1e-4 }
    }
}

/// Starting point for the latent space model fit.
#[derive(Debug, Clone)]
pub struct UsvtInit {
    pub q: DMatrix<f64>,
    pub v: DVector<f64>,
    pub rho: f64,
    /// Clamped logit of the thresholded probability estimate (diagonal imputed).
    pub logits: DMatrix<f64>,
    /// Number of spectral components that survived the threshold.
    pub kept: usize,
}

pub fn usvt_init(graph: &Graph, d: usize, opts: &UsvtOptions) -> Result<UsvtInit> {
    let (logits, kept) = usvt_logits(graph, opts)?;
    let (q, v, rho) = decompose_logits(&logits, d)?;
    Ok(UsvtInit { q, v, rho, logits, kept })
}

/// Thresholded, clamped logit matrix and the number of kept components.
pub(crate) fn usvt_logits(graph: &Graph, opts: &UsvtOptions) -> Result<(DMatrix<f64>, usize)> {
    let n = graph.n();
    if graph.edge_count() == 0.0 {
        return Err(Error::DegenerateInput("USVT needs at least one edge".into()));
    }
    let p_hat = graph.density();
    let tau = opts.threshold_const * (n as f64 * p_hat).sqrt();
    let eig = symmetric_leading(graph.adjacency(), n, SpectrumOrder::Magnitude)?;
    let kept = eig.values.iter().take_while(|l| l.abs() >= tau).count();
    let mut p = DMatrix::zeros(n, n);
    for c in 0..kept {
        let col = eig.vectors.column(c);
        p.ger(eig.values[c], &col, &col, 1.0);
    }
    let eps = opts.clamp_eps;
    let mut logits = p.map(|x| {
        let c = x.clamp(eps, 1.0 - eps);
        (c / (1.0 - c)).ln()
    });
    impute_diagonal(&mut logits);
    Ok((logits, kept))
}

fn impute_diagonal(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    if n < 2 {
        return;
    }
    for i in 0..n {
        m[(i, i)] = 0.0;
        let s = m.row(i).sum();
        m[(i, i)] = s / (n - 1) as f64;
    }
}

/// Split a symmetric logit matrix into `Q Qᵀ + v 1ᵀ + 1 vᵀ + ρ` with
/// `Σ v = 0` and centered `Q`, keeping the top-`d` positive part of the
/// double-centered remainder.
pub(crate) fn decompose_logits(theta: &DMatrix<f64>, d: usize) -> Result<(DMatrix<f64>, DVector<f64>, f64)> {
    let n = theta.nrows();
    if d >= n {
        return Err(Error::Dimension(format!("latent dimension {d} must be below node count {n}")));
    }
    let t = theta;
    let row_means = DVector::from_fn(n, |i, _| t.row(i).mean());
    let grand = row_means.mean();
    let v = row_means.add_scalar(-grand);
    let mut centered = t.clone();
    for i in 0..n {
        for j in 0..n {
            centered[(i, j)] -= v[i] + v[j] + grand;
        }
    }
    // Remove residual row/column means so the remainder is exactly double-centered.
    let rm = DVector::from_fn(n, |i, _| centered.row(i).mean());
    let gm = rm.mean();
    for i in 0..n {
        for j in 0..n {
            centered[(i, j)] += gm - rm[i] - rm[j];
        }
    }
    let centered = (&centered + centered.transpose()) * 0.5;
    let eig = symmetric_leading(&centered, d, SpectrumOrder::Algebraic)?;
    let mut q = eig.vectors;
    for (c, lam) in eig.values.iter().enumerate() {
        q.column_mut(c).scale_mut(lam.max(0.0).sqrt());
    }
    Ok((q, v, grand))
}
