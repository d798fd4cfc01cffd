//! Command dispatch: each command loads its inputs, runs its pipeline, and
//! writes its artifacts plus a manifest into a fresh run directory.

use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use super::bundle::{validate_and_load, DatasetBundle};
use super::config::{Command, EstimatorChoice, LatentModel, OutcomeSource, ProfileSource, RunConfig};
use super::output::{OutputDir, RunManifest};
use super::table::{csv_text, format_number, matrix_csv};
use crate::dgp::{mse_table, run_monte_carlo, McReport};
use crate::error::{Error, Result};
use crate::gof::{long_format, run_gof, GofReport, STATISTICS, UNIMPLEMENTED_COMPARATORS};
use crate::graph::{row_normalize, Graph};
use crate::network::{lsm_fit, select_dimension, spectral_embed, DimensionSelection, EdgeCovariates, LsmFit};
use crate::peer::{adjusted_2sls, alr, naive_2sls, wald_table, MsarData, PeerEffectsFit};
use crate::predict::{cross_fit, roc_points, variable_importance, PredDataset};
use crate::sieve::{build_basis, SieveSpec};

impl Error {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Validation { .. }
            | Error::Dimension(_)
            | Error::DegenerateInput(_)
            | Error::InvalidArgument(_)
            | Error::Scenario(_)
            | Error::Csv { .. } => 3,
            Error::Identification(_) => 4,
            Error::Numerical(_) | Error::NonFinite { .. } | Error::Separation { .. } => 5,
            Error::Io { .. } => 6,
            Error::OutputExists(_) => 7,
        }
    }
}

fn graph(bundle: &DatasetBundle) -> Result<&Graph> {
    bundle
        .graph
        .as_ref()
        .ok_or_else(|| Error::Config("inputs.adjacency is required".into()))
}

fn names(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|j| format!("{prefix}{j}")).collect()
}

#[derive(Serialize)]
struct EmbedReport<'a> {
    model: &'static str,
    d: usize,
    eigvals: &'a [f64],
    selection: Option<&'a DimensionSelection>,
}

#[derive(Serialize)]
struct FitNetReport<'a> {
    d: usize,
    selection: Option<&'a DimensionSelection>,
    fit: &'a LsmFit,
}

/// Latent dimension from the config, or chosen by edge cross-validation.
fn latent_dim(cfg: &RunConfig, g: &Graph, seed: u64) -> Result<(usize, Option<DimensionSelection>)> {
    match cfg.latent.dim {
        Some(d) => Ok((d, None)),
        None => {
            let cands: Vec<usize> = cfg.latent.candidates.iter().copied().filter(|&d| d >= 1 && d < g.n()).collect();
            let sel = select_dimension(g, &cands, cfg.latent.cv_reps, seed)?;
            Ok((sel.selected, Some(sel)))
        }
    }
}

/// Estimated latent positions and the column names used when exporting them.
struct Latent {
    u: DMatrix<f64>,
    names: Vec<String>,
    selection: Option<DimensionSelection>,
    rdpg_eigvals: Option<Vec<f64>>,
    lsm: Option<LsmFit>,
    d: usize,
}

fn estimate_latent(cfg: &RunConfig, g: &Graph, cov: Option<&EdgeCovariates>, model: LatentModel, seed: u64) -> Result<Latent> {
    let (d, selection) = latent_dim(cfg, g, seed)?;
    match model {
        LatentModel::Rdpg => {
            let fit = spectral_embed(g, d)?;
            Ok(Latent {
                u: fit.u_hat,
                names: names("u", d),
                selection,
                rdpg_eigvals: Some(fit.eigvals),
                lsm: None,
                d,
            })
        }
        LatentModel::Lsm => {
            let fit = lsm_fit(g, cov, d, &cfg.latent.lsm)?;
            let mut cols = names("q", d);
            cols.push("v".into());
            Ok(Latent {
                u: fit.params.latent_positions(),
                names: cols,
                selection,
                rdpg_eigvals: None,
                lsm: Some(fit),
                d,
            })
        }
    }
}

fn embed(cfg: &RunConfig, bundle: &DatasetBundle, out: &mut OutputDir, seed: u64) -> Result<()> {
    let g = graph(bundle)?;
    let lat = out.timed("embed", || estimate_latent(cfg, g, None, LatentModel::Rdpg, seed))?;
    out.write("latent.csv", &matrix_csv(&lat.names, &lat.u)?)?;
    out.write_json(
        "embed.json",
        &EmbedReport {
            model: "rdpg",
            d: lat.d,
            eigvals: lat.rdpg_eigvals.as_deref().unwrap_or(&[]),
            selection: lat.selection.as_ref(),
        },
    )
}

fn fit_net(cfg: &RunConfig, bundle: &DatasetBundle, out: &mut OutputDir, seed: u64) -> Result<()> {
    let g = graph(bundle)?;
    let cov = bundle.edge_covariates.as_ref();
    let lat = out.timed("fit-net", || estimate_latent(cfg, g, cov, LatentModel::Lsm, seed))?;
    let fit = lat.lsm.as_ref().expect("latent space fit");
    out.write("latent.csv", &matrix_csv(&lat.names, &lat.u)?)?;
    out.write_json(
        "lsm_fit.json",
        &FitNetReport {
            d: lat.d,
            selection: lat.selection.as_ref(),
            fit,
        },
    )
}

fn gof(cfg: &RunConfig, bundle: &DatasetBundle, out: &mut OutputDir, seed: u64) -> Result<()> {
    let g = graph(bundle)?;
    let mut reports: Vec<GofReport> = Vec::new();
    for &model in &cfg.gof.models {
        let report = out.timed(&format!("gof {}", model.name()), || {
            run_gof(g, model, bundle.edge_covariates.as_ref(), cfg.gof.replicates, seed)
        })?;
        reports.push(report);
    }
    reports.extend(UNIMPLEMENTED_COMPARATORS.iter().map(|n| GofReport::placeholder(n)));
    out.write_json("gof.json", &reports)?;

    let long: Vec<Vec<String>> = long_format(&reports)
        .into_iter()
        .map(|(m, s, r, v)| vec![m, s.to_string(), r.to_string(), format_number(v)])
        .collect();
    out.write("gof_long.csv", &csv_text(&["model", "statistic", "replicate", "value"], &long)?)?;

    let mut summary = Vec::new();
    for r in reports.iter().filter(|r| r.implemented) {
        let obs = r.observed.as_ref().expect("implemented reports carry observations").as_array();
        for (s, stat) in STATISTICS.iter().enumerate() {
            summary.push(vec![
                r.model_name.clone(),
                stat.to_string(),
                format_number(obs[s]),
                format_number(r.percentile_of_observed[s]),
            ]);
        }
    }
    out.write(
        "gof_summary.csv",
        &csv_text(&["model", "statistic", "observed", "percentile"], &summary)?,
    )
}

#[derive(Serialize)]
struct EstimateReport<'a> {
    outcome_source: OutcomeSource,
    outcome_names: &'a [String],
    covariate_names: &'a [String],
    latent_model: Option<LatentModel>,
    latent_dim: Option<usize>,
    sieve: Option<&'a SieveSpec>,
    dropped_isolated: Vec<usize>,
    fit: &'a PeerEffectsFit,
}

fn estimate(cfg: &RunConfig, bundle: &DatasetBundle, out: &mut OutputDir, seed: u64) -> Result<()> {
    let g = graph(bundle)?;
    let covariates = bundle.covariates.as_ref().ok_or_else(|| Error::Config("inputs.covariates is required".into()))?;
    let (y, outcome_names) = match cfg.estimate.outcome {
        OutcomeSource::Outcomes => {
            let t = bundle.outcomes.as_ref().ok_or_else(|| Error::Config("inputs.outcomes is required".into()))?;
            (t.data().clone(), t.names("y"))
        }
        OutcomeSource::Alr => {
            let comp = bundle
                .composition
                .as_ref()
                .ok_or_else(|| Error::Config("inputs.class_probabilities is required".into()))?;
            let base = &bundle.class_names[comp.baseline()];
            let names = (0..comp.classes())
                .filter(|&c| c != comp.baseline())
                .map(|c| format!("log({}/{base})", bundle.class_names[c]))
                .collect();
            (alr(comp), names)
        }
    };
    let covariate_names = covariates.names("x");
    let data = MsarData::new(y, covariates.data().clone(), row_normalize(g))?;
    let (data, keep) = if cfg.estimate.drop_isolated {
        data.drop_isolated()?
    } else {
        let all = (0..data.n()).collect();
        (data, all)
    };
    let dropped: Vec<usize> = (0..g.n()).filter(|i| keep.binary_search(i).is_err()).collect();

    let (fit, latent) = match cfg.estimate.estimator {
        EstimatorChoice::Naive => (out.timed("2sls", || naive_2sls(&data))?, None),
        EstimatorChoice::Adjusted => {
            let lat = out.timed("latent", || {
                estimate_latent(cfg, g, bundle.edge_covariates.as_ref(), cfg.latent.model, seed)
            })?;
            let u = lat.u.select_rows(&keep);
            let design = out.timed("sieve", || build_basis(&u, &cfg.sieve))?;
            let fit = out.timed("2sls", || adjusted_2sls(&data, &design))?;
            (fit, Some(lat))
        }
    };

    let rows: Vec<Vec<String>> = wald_table(&fit)
        .into_iter()
        .map(|r| {
            let regressor = match r.block {
                "D" => format!("G*{}", outcome_names[r.regressor]),
                "B1" => covariate_names[r.regressor].clone(),
                _ => format!("G*{}", covariate_names[r.regressor]),
            };
            vec![
                r.block.to_string(),
                regressor,
                outcome_names[r.equation].clone(),
                format_number(r.estimate),
                format_number(r.se),
                format_number(r.z),
                r.flagged.to_string(),
            ]
        })
        .collect();
    out.write(
        "coefficients.csv",
        &csv_text(&["block", "regressor", "equation", "estimate", "se", "z", "flagged"], &rows)?,
    )?;
    if let Some(lat) = &latent {
        out.write("latent.csv", &matrix_csv(&lat.names, &lat.u)?)?;
    }
    out.write_json(
        "fit.json",
        &EstimateReport {
            outcome_source: cfg.estimate.outcome,
            outcome_names: &outcome_names,
            covariate_names: &covariate_names,
            latent_model: latent.as_ref().map(|_| cfg.latent.model),
            latent_dim: latent.as_ref().map(|l| l.d),
            sieve: latent.as_ref().map(|_| &cfg.sieve),
            dropped_isolated: dropped,
            fit: &fit,
        },
    )
}

fn mc(cfg: &RunConfig, out: &mut OutputDir, seed: u64) -> Result<()> {
    let mut spec = cfg.mc.scenario.clone();
    spec.seed = Some(seed);
    let base = spec.resolve()?;
    let mut reports: Vec<McReport> = Vec::new();
    for &n in &cfg.mc.n_values {
        let sc = base.with_n(n);
        let report = out.timed(&format!("mc n={n}"), || run_monte_carlo(&sc, &cfg.mc.estimator))?;
        if report.reps_completed == 0 {
            return Err(Error::Numerical(format!(
                "every replication failed at n={n}: {}",
                report.failures.first().map_or("", |f| f.message.as_str())
            )));
        }
        reports.push(report);
    }
    out.write_json("mc_report.json", &reports)?;
    let m = base.m;
    let mut header = vec!["N".to_string()];
    for i in 1..=m {
        for j in 1..=m {
            header.push(format!("D{i}{j}"));
        }
    }
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = mse_table(&reports)
        .into_iter()
        .map(|r| {
            let mut row = vec![r.n.to_string()];
            row.extend(r.mse.iter().map(|&v| format_number(v)));
            row
        })
        .collect();
    out.write("mse.csv", &csv_text(&h, &rows)?)
}

#[derive(Serialize)]
struct PredictReport<'a> {
    n: usize,
    positives: usize,
    folds: usize,
    auc: f64,
    lambda1: f64,
    lambda2: f64,
    names: &'a [String],
    /// Selected variable names per fold.
    support: Vec<Vec<&'a str>>,
}

fn predict(cfg: &RunConfig, bundle: &DatasetBundle, out: &mut OutputDir, seed: u64) -> Result<()> {
    let y = bundle.labels.clone().ok_or_else(|| Error::Config("inputs.labels is required".into()))?;
    let covariates = bundle.covariates.as_ref().ok_or_else(|| Error::Config("inputs.covariates is required".into()))?;
    let mut names = covariates.names("x");
    let t = match cfg.predict.profile {
        ProfileSource::None => None,
        ProfileSource::Embedding => {
            let p = bundle
                .embedding_profile
                .as_ref()
                .ok_or_else(|| Error::Config("inputs.embedding_profile is required".into()))?;
            names.extend(p.names("e"));
            Some(p.data().clone())
        }
        ProfileSource::Alr => {
            let comp = bundle
                .composition
                .as_ref()
                .ok_or_else(|| Error::Config("inputs.class_probabilities is required".into()))?;
            let base = &bundle.class_names[comp.baseline()];
            names.extend(
                (0..comp.classes())
                    .filter(|&c| c != comp.baseline())
                    .map(|c| format!("log({}/{base})", bundle.class_names[c])),
            );
            Some(alr(comp))
        }
    };
    let data = PredDataset::new(y, covariates.data().clone(), t)?.with_names(names)?;
    let cv = out.timed("cross-fit", || cross_fit(&data, cfg.predict.folds, &cfg.predict.cv, seed))?;

    let roc: Vec<Vec<String>> = roc_points(&cv.scores, &data.y)?
        .into_iter()
        .map(|p| vec![format_number(p.threshold), format_number(p.fpr), format_number(p.tpr)])
        .collect();
    out.write("roc.csv", &csv_text(&["threshold", "fpr", "tpr"], &roc)?)?;
    let scores: Vec<Vec<String>> = (0..data.n())
        .map(|i| vec![(i + 1).to_string(), format_number(data.y[i]), cv.folds[i].to_string(), format_number(cv.scores[i])])
        .collect();
    out.write("scores.csv", &csv_text(&["row", "label", "fold", "score"], &scores)?)?;

    if cfg.predict.importance {
        let imp = out.timed("importance", || variable_importance(&data, &cv))?;
        let mut rows = Vec::new();
        for (v, name) in imp.names.iter().enumerate() {
            for (f, d) in imp.delta[v].iter().enumerate() {
                rows.push(vec![name.clone(), f.to_string(), format_number(imp.full_r2[f]), format_number(*d)]);
            }
        }
        out.write("importance.csv", &csv_text(&["variable", "fold", "full_pseudo_r2", "delta_pseudo_r2"], &rows)?)?;
    }

    out.write_json(
        "auc.json",
        &PredictReport {
            n: data.n(),
            positives: data.y.iter().filter(|&&v| v == 1.0).count(),
            folds: cfg.predict.folds,
            auc: cv.auc,
            lambda1: cv.lambda.lambda1,
            lambda2: cv.lambda.lambda2,
            names: &data.names,
            support: cv
                .support
                .iter()
                .map(|s| s.iter().map(|&j| data.names[j].as_str()).collect())
                .collect(),
        },
    )
}

/// Validates `cfg` for `command`, runs it, and writes all artifacts under
/// `out_dir`. The manifest is written last.
pub fn dispatch(command: Command, cfg: &RunConfig, out_dir: &Path) -> Result<RunManifest> {
    cfg.validate(command)?;
    let seed = cfg.require_seed()?;
    let bundle = validate_and_load(cfg)?;
    let mut out = OutputDir::create(out_dir)?;
    match command {
        Command::Embed => embed(cfg, &bundle, &mut out, seed)?,
        Command::FitNet => fit_net(cfg, &bundle, &mut out, seed)?,
        Command::Gof => gof(cfg, &bundle, &mut out, seed)?,
        Command::Estimate => estimate(cfg, &bundle, &mut out, seed)?,
        Command::Mc => mc(cfg, &mut out, seed)?,
        Command::Predict => predict(cfg, &bundle, &mut out, seed)?,
    }
    let echo = serde_json::to_value(cfg).map_err(|e| Error::Config(e.to_string()))?;
    out.finish(command.name(), seed, echo, &bundle.hashes)
}
