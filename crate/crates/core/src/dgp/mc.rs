use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{generate, Generated, NetworkModel, Scenario};
use crate::error::Result;
use crate::io::serde_matrix;
use crate::network::{lsm_fit, spectral_embed, LsmOptions};
use crate::peer::{adjusted_2sls, naive_2sls, PeerEffectsFit};
use crate::sieve::{build_basis, SieveSpec};

/// Two-sided 95% normal quantile.
const Z975: f64 = 1.959963984540054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Estimator {
    Naive,
    Adjusted { sieve: SieveSpec },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepDraw {
    pub rep: u64,
    /// `vec(beta)` for this replication.
    pub beta: Vec<f64>,
    /// `D̂` in row-major order.
    pub d_hat: Vec<f64>,
    /// Standard errors of `D̂`, row-major.
    pub d_se: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepFailure {
    pub rep: u64,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McReport {
    pub scenario: String,
    pub n: usize,
    pub estimator: Estimator,
    pub reps_requested: usize,
    pub reps_completed: usize,
    pub failures: Vec<RepFailure>,
    #[serde(with = "serde_matrix")]
    pub d_true: DMatrix<f64>,
    #[serde(with = "serde_matrix")]
    pub mse: DMatrix<f64>,
    #[serde(with = "serde_matrix")]
    pub bias: DMatrix<f64>,
    /// Monte Carlo standard error of each bias entry.
    #[serde(with = "serde_matrix")]
    pub bias_se: DMatrix<f64>,
    /// Share of replications whose 95% interval covers the truth.
    #[serde(with = "serde_matrix")]
    pub coverage: DMatrix<f64>,
    pub draws: Vec<RepDraw>,
    /// Wall-clock seconds; excluded from serialized reports.
    #[serde(skip)]
    pub elapsed_secs: f64,
    #[serde(skip)]
    pub mean_rep_secs: f64,
}

impl McReport {
    /// `(D̂_ij − D_ij) / se_ij` for every completed replication.
    pub fn z_scores(&self, i: usize, j: usize) -> Vec<f64> {
        let m = self.d_true.nrows();
        self.draws
            .iter()
            .map(|d| (d.d_hat[i * m + j] - self.d_true[(i, j)]) / d.d_se[i * m + j])
            .collect()
    }

    pub fn estimates(&self, i: usize, j: usize) -> Vec<f64> {
        let m = self.d_true.nrows();
        self.draws.iter().map(|d| d.d_hat[i * m + j]).collect()
    }
}

fn estimate(gen: &Generated, scenario: &Scenario, estimator: &Estimator) -> Result<PeerEffectsFit> {
    match estimator {
        Estimator::Naive => naive_2sls(&gen.data),
        Estimator::Adjusted { sieve } => {
            let u_hat = match scenario.network_model {
                NetworkModel::Rdpg => spectral_embed(&gen.graph, scenario.latent_dim)?.u_hat,
                NetworkModel::LsmCov => {
                    let fit = lsm_fit(
                        &gen.graph,
                        gen.edge_covariates.as_ref(),
                        scenario.latent_dim,
                        &LsmOptions::default(),
                    )?;
                    fit.params.latent_positions()
                }
            };
            let design = build_basis(&u_hat, sieve)?;
            adjusted_2sls(&gen.data, &design)
        }
    }
}

fn one_rep(scenario: &Scenario, estimator: &Estimator, rep: u64) -> Result<RepDraw> {
    let gen = generate(scenario, rep)?;
    let fit = estimate(&gen, scenario, estimator)?;
    let m = scenario.m;
    let mut d_hat = Vec::with_capacity(m * m);
    let mut d_se = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            d_hat.push(fit.d_hat[(i, j)]);
            d_se.push(fit.d_se(i, j));
        }
    }
    Ok(RepDraw {
        rep,
        beta: fit.beta_vec().iter().copied().collect(),
        d_hat,
        d_se,
    })
}

/// Runs `scenario.reps` independent replications. Each replication draws
/// fresh data, re-estimates latent positions from the simulated graph, and
/// fits `estimator`. Failed replications are counted and reported, never
/// silently dropped.
pub fn run_monte_carlo(scenario: &Scenario, estimator: &Estimator) -> Result<McReport> {
    scenario.validate()?;
    let start = Instant::now();
    let outcomes: Vec<(u64, Result<RepDraw>, f64)> = (0..scenario.reps as u64)
        .into_par_iter()
        .map(|rep| {
            let t = Instant::now();
            let r = one_rep(scenario, estimator, rep);
            (rep, r, t.elapsed().as_secs_f64())
        })
        .collect();

    let mut draws = Vec::new();
    let mut failures = Vec::new();
    let mut rep_secs = 0.0;
    for (rep, r, secs) in outcomes {
        rep_secs += secs;
        match r {
            Ok(d) => draws.push(d),
            Err(e) => failures.push(RepFailure {
                rep,
                message: e.to_string(),
            }),
        }
    }
    let m = scenario.m;
    let k = draws.len() as f64;
    let mut mse = DMatrix::zeros(m, m);
    let mut bias = DMatrix::zeros(m, m);
    let mut bias_se = DMatrix::zeros(m, m);
    let mut coverage = DMatrix::zeros(m, m);
    if !draws.is_empty() {
        for i in 0..m {
            for j in 0..m {
                let idx = i * m + j;
                let truth = scenario.d_true[(i, j)];
                let errs: Vec<f64> = draws.iter().map(|d| d.d_hat[idx] - truth).collect();
                let mean = errs.iter().sum::<f64>() / k;
                mse[(i, j)] = errs.iter().map(|e| e * e).sum::<f64>() / k;
                bias[(i, j)] = mean;
                if draws.len() > 1 {
                    let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0);
                    bias_se[(i, j)] = (var / k).sqrt();
                }
                let covered = draws
                    .iter()
                    .filter(|d| (d.d_hat[idx] - truth).abs() <= Z975 * d.d_se[idx])
                    .count();
                coverage[(i, j)] = covered as f64 / k;
            }
        }
    }
    let reps_requested = scenario.reps;
    Ok(McReport {
        scenario: scenario.name.clone(),
        n: scenario.n,
        estimator: estimator.clone(),
        reps_requested,
        reps_completed: draws.len(),
        failures,
        d_true: scenario.d_true.clone(),
        mse,
        bias,
        bias_se,
        coverage,
        draws,
        elapsed_secs: start.elapsed().as_secs_f64(),
        mean_rep_secs: rep_secs / reps_requested.max(1) as f64,
    })
}

/// One line of an MSE table: the network size and the MSE of every `D`
/// entry in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MseRow {
    pub n: usize,
    pub mse: Vec<f64>,
}

pub fn mse_table(reports: &[McReport]) -> Vec<MseRow> {
    reports
        .iter()
        .map(|r| MseRow {
            n: r.n,
            mse: r.mse.transpose().iter().copied().collect(),
        })
        .collect()
}
