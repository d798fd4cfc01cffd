//! Edge cross-validation for the latent dimension.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{symmetric_leading, SpectrumOrder};
use crate::rng::stream;

const HOLDOUT_FRACTION: f64 = 0.1;
const PROB_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimensionSelection {
    pub selected: usize,
    pub candidates: Vec<usize>,
    /// Mean held-out binomial deviance per candidate.
    pub mean_deviance: Vec<f64>,
}

/// Pick the latent dimension by repeated edge hold-out.
///
/// Each repetition hides a uniform 10% of node pairs, fills them with the
/// observed density, reconstructs the adjacency from its leading-`d`
/// eigenpairs, and scores the hidden pairs by binomial deviance. Ties go to
/// the smaller dimension.
pub fn select_dimension(graph: &Graph, candidates: &[usize], folds: usize, seed: u64) -> Result<DimensionSelection> {
    let n = graph.n();
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate dimensions".into()));
    }
    if let Some(&bad) = candidates.iter().find(|&&d| d == 0 || d >= n) {
        return Err(Error::Dimension(format!("candidate dimension {bad} must lie in 1..{n}")));
    }
    let mut cands = candidates.to_vec();
    cands.sort_unstable();
    cands.dedup();
    if cands.len() == 1 {
        return Ok(DimensionSelection { selected: cands[0], candidates: cands, mean_deviance: vec![f64::NAN] });
    }
    if folds == 0 {
        return Err(Error::InvalidArgument("need at least one hold-out repetition".into()));
    }
    let d_max = *cands.last().expect("nonempty");
    let a = graph.adjacency();
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for j in 0..n {
        for i in 0..j {
            pairs.push((i, j));
        }
    }
    let n_hold = ((pairs.len() as f64) * HOLDOUT_FRACTION).round().max(1.0) as usize;
    let mut totals = vec![0.0; cands.len()];

    for fold in 0..folds {
        let mut rng = stream(seed, "ecv", fold as u64);
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut rng);
        let (held, kept) = shuffled.split_at(n_hold);
        let observed: f64 = kept.iter().map(|&(i, j)| a[(i, j)]).sum::<f64>() / kept.len() as f64;
        let mut filled = a.clone();
        for &(i, j) in held {
            filled[(i, j)] = observed;
            filled[(j, i)] = observed;
        }
        let eig = symmetric_leading(&filled, d_max, SpectrumOrder::Magnitude)?;
        let mut recon = DMatrix::zeros(n, n);
        let mut next = 0;
        for (ci, &d) in cands.iter().enumerate() {
            while next < d {
                let col = eig.vectors.column(next);
                recon.ger(eig.values[next], &col, &col, 1.0);
                next += 1;
            }
            let dev: f64 = held
                .iter()
                .map(|&(i, j)| {
                    let p = recon[(i, j)].clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
                    let y = a[(i, j)];
                    -2.0 * (y * p.ln() + (1.0 - y) * (1.0 - p).ln())
                })
                .sum();
            totals[ci] += dev / held.len() as f64;
        }
    }
    let mean_deviance: Vec<f64> = totals.iter().map(|t| t / folds as f64).collect();
    let mut best = 0;
    for (i, dv) in mean_deviance.iter().enumerate() {
        if *dv < mean_deviance[best] {
            best = i;
        }
    }
    Ok(DimensionSelection { selected: cands[best], candidates: cands, mean_deviance })
}
