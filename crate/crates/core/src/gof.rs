//! Goodness of fit by simulation: fit a network model, draw replicate
//! networks from the fit, and locate the observed structural statistics in
//! the simulated distributions.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{modularity, sd_row_means, transitivity, Graph};
use crate::io::serde_matrix;
use crate::network::{lsm_fit, lsm_simulate, rdpg_simulate, spectral_embed, EdgeCovariates, LsmOptions};
use crate::rng::stream;

pub const DEFAULT_REPLICATES: usize = 200;

pub const STATISTICS: [&str; 3] = ["modularity", "sd_row_means", "transitivity"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum GofModel {
    Rdpg { d: usize },
    Lsm { d: usize },
    LsmCov { d: usize },
}

impl GofModel {
    pub fn name(&self) -> String {
        match self {
            GofModel::Rdpg { d } => format!("rdpg(d={d})"),
            GofModel::Lsm { d } => format!("lsm(d={d})"),
            GofModel::LsmCov { d } => format!("lsm_cov(d={d})"),
        }
    }
}

/// Comparators that have a slot in the report but no implementation here.
pub const UNIMPLEMENTED_COMPARATORS: [&str; 2] = ["tetrad_logit", "jfe"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub modularity: f64,
    pub sd_row_means: f64,
    pub transitivity: f64,
}

impl GraphStats {
    pub fn of(graph: &Graph) -> Result<Self> {
        // An edgeless graph has no community structure to speak of.
        let modularity = if graph.edge_count() > 0.0 { modularity(graph)? } else { 0.0 };
        Ok(GraphStats {
            modularity,
            sd_row_means: sd_row_means(graph)?,
            transitivity: transitivity(graph),
        })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.modularity, self.sd_row_means, self.transitivity]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GofReport {
    pub model_name: String,
    /// False for placeholder rows of comparators without an implementation.
    pub implemented: bool,
    pub observed: Option<GraphStats>,
    /// One row per statistic in [`STATISTICS`] order, one column per
    /// replicate.
    #[serde(with = "serde_matrix")]
    pub simulated: DMatrix<f64>,
    pub percentile_of_observed: Vec<f64>,
    pub r: usize,
}

impl GofReport {
    pub fn placeholder(name: &str) -> Self {
        GofReport {
            model_name: name.to_string(),
            implemented: false,
            observed: None,
            simulated: DMatrix::zeros(3, 0),
            percentile_of_observed: Vec::new(),
            r: 0,
        }
    }

    /// Whether each observed statistic lies in the central `[lo, hi]`
    /// percentile band.
    pub fn inside_band(&self, lo: f64, hi: f64) -> Vec<bool> {
        self.percentile_of_observed.iter().map(|&p| p >= lo && p <= hi).collect()
    }
}

/// Mid-rank percentile of `observed` among `draws`, on `(0, 100)`:
/// `100 · (below + ties/2 + 1/2) / (R + 1)`.
pub fn percentile_of(observed: f64, draws: &[f64]) -> f64 {
    let below = draws.iter().filter(|&&v| v < observed).count() as f64;
    let ties = draws.iter().filter(|&&v| v == observed).count() as f64;
    100.0 * (below + 0.5 * ties + 0.5) / (draws.len() as f64 + 1.0)
}

enum Fitted {
    Rdpg(DMatrix<f64>),
    Lsm(crate::network::LsmParams),
}

pub fn run_gof(
    graph: &Graph,
    model: GofModel,
    cov: Option<&EdgeCovariates>,
    r: usize,
    seed: u64,
) -> Result<GofReport> {
    if r < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 replicates, got {r}")));
    }
    let name = model.name();
    let wrap = |e: Error| Error::Numerical(format!("{name} fit failed: {e}"));
    let fitted = match model {
        GofModel::Rdpg { d } => Fitted::Rdpg(spectral_embed(graph, d).map_err(wrap)?.u_hat),
        GofModel::Lsm { d } => Fitted::Lsm(lsm_fit(graph, None, d, &LsmOptions::default()).map_err(wrap)?.params),
        GofModel::LsmCov { d } => {
            let cov = cov.ok_or_else(|| Error::InvalidArgument(format!("{name} needs edge covariates")))?;
            Fitted::Lsm(lsm_fit(graph, Some(cov), d, &LsmOptions::default()).map_err(wrap)?.params)
        }
    };
    let cov_used = match model {
        GofModel::LsmCov { .. } => cov,
        _ => None,
    };
    let label = format!("gof/{name}");
    let stats: Vec<[f64; 3]> = (0..r as u64)
        .into_par_iter()
        .map(|rep| -> Result<[f64; 3]> {
            let mut rng = stream(seed, &label, rep);
            let sim = match &fitted {
                Fitted::Rdpg(u) => rdpg_simulate(u, 1.0, &mut rng)?.graph,
                Fitted::Lsm(p) => lsm_simulate(p, cov_used, &mut rng)?,
            };
            Ok(GraphStats::of(&sim)?.as_array())
        })
        .collect::<Result<_>>()?;

    let observed = GraphStats::of(graph)?;
    let simulated = DMatrix::from_fn(3, r, |s, j| stats[j][s]);
    let percentile_of_observed = observed
        .as_array()
        .iter()
        .enumerate()
        .map(|(s, &o)| percentile_of(o, simulated.row(s).transpose().as_slice()))
        .collect();
    Ok(GofReport {
        model_name: name,
        implemented: true,
        observed: Some(observed),
        simulated,
        percentile_of_observed,
        r,
    })
}

/// `(model, statistic, replicate, value)` records for plotting histograms.
pub fn long_format(reports: &[GofReport]) -> Vec<(String, &'static str, usize, f64)> {
    let mut out = Vec::new();
    for rep in reports.iter().filter(|r| r.implemented) {
        for (s, stat) in STATISTICS.iter().enumerate() {
            for j in 0..rep.r {
                out.push((rep.model_name.clone(), *stat, j, rep.simulated[(s, j)]));
            }
        }
    }
    out
}
