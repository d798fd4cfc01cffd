//! TOML run configuration. Relative input paths resolve against the
//! directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dgp::{Estimator, ScenarioSpec};
use crate::error::{Error, Result};
use crate::gof::{GofModel, DEFAULT_REPLICATES};
use crate::network::LsmOptions;
use crate::predict::CvOptions;
use crate::sieve::SieveSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Embed,
    FitNet,
    Gof,
    Estimate,
    Mc,
    Predict,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Embed => "embed",
            Command::FitNet => "fit-net",
            Command::Gof => "gof",
            Command::Estimate => "estimate",
            Command::Mc => "mc",
            Command::Predict => "predict",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    pub adjacency: Option<PathBuf>,
    pub outcomes: Option<PathBuf>,
    pub covariates: Option<PathBuf>,
    pub class_probabilities: Option<PathBuf>,
    pub embedding_profile: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub edge_covariates: Vec<PathBuf>,
}

/// Latent-position estimation shared by `embed`, `fit-net` and `estimate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatentConfig {
    /// `rdpg` for the adjacency spectral embedding, `lsm` for the latent
    /// space model fit (with edge covariates when provided).
    pub model: LatentModel,
    /// Fixed dimension; when absent it is chosen by edge cross-validation
    /// over `candidates`.
    pub dim: Option<usize>,
    pub candidates: Vec<usize>,
    pub cv_reps: usize,
    pub lsm: LsmOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatentModel {
    Rdpg,
    Lsm,
}

impl Default for LatentConfig {
    fn default() -> Self {
        LatentConfig {
            model: LatentModel::Rdpg,
            dim: None,
            candidates: (1..=6).collect(),
            cv_reps: 5,
            lsm: LsmOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeSource {
    /// Outcomes read directly from the outcomes file.
    Outcomes,
    /// Additive log-ratios of the class-probability file.
    Alr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorChoice {
    Naive,
    Adjusted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateConfig {
    pub estimator: EstimatorChoice,
    pub outcome: OutcomeSource,
    /// Baseline class for the log-ratio transform.
    pub baseline: usize,
    pub drop_isolated: bool,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            estimator: EstimatorChoice::Adjusted,
            outcome: OutcomeSource::Outcomes,
            baseline: 0,
            drop_isolated: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GofConfig {
    pub models: Vec<GofModel>,
    pub replicates: usize,
}

impl Default for GofConfig {
    fn default() -> Self {
        GofConfig {
            models: vec![GofModel::Rdpg { d: 2 }, GofModel::Lsm { d: 2 }, GofModel::LsmCov { d: 2 }],
            replicates: DEFAULT_REPLICATES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub scenario: ScenarioSpec,
    pub n_values: Vec<usize>,
    pub estimator: Estimator,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            scenario: ScenarioSpec::default(),
            n_values: vec![100, 300, 500],
            estimator: Estimator::Adjusted { sieve: SieveSpec::default() },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileSource {
    None,
    /// The embedding-profile file, used as is.
    Embedding,
    /// Additive log-ratios of the class-probability file.
    Alr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictConfig {
    pub folds: usize,
    pub profile: ProfileSource,
    pub baseline: usize,
    pub cv: CvOptions,
    pub importance: bool,
}

impl Default for PredictConfig {
    fn default() -> Self {
        PredictConfig {
            folds: 5,
            profile: ProfileSource::None,
            baseline: 0,
            cv: CvOptions::default(),
            importance: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub inputs: InputPaths,
    pub latent: LatentConfig,
    pub sieve: SieveSpec,
    pub estimate: EstimateConfig,
    pub gof: GofConfig,
    pub mc: McConfig,
    pub predict: PredictConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let i = &mut self.inputs;
        for p in [
            &mut i.adjacency,
            &mut i.outcomes,
            &mut i.covariates,
            &mut i.class_probabilities,
            &mut i.embedding_profile,
            &mut i.labels,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        i.edge_covariates.iter_mut().for_each(fix);
        if let Some(o) = &mut self.out {
            fix(o);
        }
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("a seed is required (config key `seed` or --seed)".into()))
    }

    /// Checks that the inputs `command` needs are declared and that every
    /// declared path exists.
    pub fn validate(&self, command: Command) -> Result<()> {
        self.require_seed()?;
        let i = &self.inputs;
        let need = |p: &Option<PathBuf>, key: &str| -> Result<()> {
            match p {
                Some(_) => Ok(()),
                None => Err(Error::Config(format!("`{}` needs inputs.{key}", command.name()))),
            }
        };
        match command {
            Command::Embed | Command::FitNet | Command::Gof => need(&i.adjacency, "adjacency")?,
            Command::Estimate => {
                need(&i.adjacency, "adjacency")?;
                need(&i.covariates, "covariates")?;
                match self.estimate.outcome {
                    OutcomeSource::Outcomes => need(&i.outcomes, "outcomes")?,
                    OutcomeSource::Alr => need(&i.class_probabilities, "class_probabilities")?,
                }
            }
            Command::Mc => {}
            Command::Predict => {
                need(&i.labels, "labels")?;
                need(&i.covariates, "covariates")?;
                match self.predict.profile {
                    ProfileSource::None => {}
                    ProfileSource::Embedding => need(&i.embedding_profile, "embedding_profile")?,
                    ProfileSource::Alr => need(&i.class_probabilities, "class_probabilities")?,
                }
            }
        }
        for p in [
            &i.adjacency,
            &i.outcomes,
            &i.covariates,
            &i.class_probabilities,
            &i.embedding_profile,
            &i.labels,
        ]
        .into_iter()
        .flatten()
        .chain(i.edge_covariates.iter())
        {
            if !p.is_file() {
                return Err(Error::Config(format!("input {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_keys() {
        let cfg = RunConfig::from_toml(
            r#"
            seed = 7
            [inputs]
            adjacency = "a.csv"
            edge_covariates = ["e1.csv"]
            [latent]
            model = "lsm"
            dim = 3
            [sieve]
            family = "cosine"
            degree = 3
            total_degree_cap = 3
            [estimate]
            estimator = "naive"
            outcome = "alr"
            [gof]
            replicates = 50
            models = [{ model = "rdpg", d = 2 }]
            [mc]
            n_values = [100, 200]
            estimator = { kind = "naive" }
            [mc.scenario]
            network_model = "lsm_cov"
            reps = 10
            [predict]
            profile = "alr"
            cv = { rule = { rule = "cv_min" } }
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.latent.model, LatentModel::Lsm);
        assert_eq!(cfg.sieve.degree, 3);
        assert_eq!(cfg.estimate.outcome, OutcomeSource::Alr);
        assert_eq!(cfg.gof.models, vec![GofModel::Rdpg { d: 2 }]);
        assert_eq!(cfg.mc.estimator, Estimator::Naive);
        assert_eq!(cfg.mc.scenario.reps, Some(10));
        assert_eq!(cfg.predict.profile, ProfileSource::Alr);
    }

    #[test]
    fn unknown_keys_and_missing_seed_are_config_errors() {
        assert!(matches!(RunConfig::from_toml("sed = 1"), Err(Error::Config(_))));
        let cfg = RunConfig::from_toml("").unwrap();
        assert!(matches!(cfg.validate(Command::Mc), Err(Error::Config(_))));
        let cfg = RunConfig::from_toml("seed = 1").unwrap();
        assert!(cfg.validate(Command::Mc).is_ok());
        let e = cfg.validate(Command::Estimate).unwrap_err().to_string();
        assert!(e.contains("adjacency"), "{e}");
    }

    #[test]
    fn missing_input_file_is_reported() {
        let mut cfg = RunConfig::from_toml("seed = 1\n[inputs]\nadjacency = \"nowhere.csv\"").unwrap();
        cfg.resolve_paths(Path::new("/nonexistent"));
        let e = cfg.validate(Command::Embed).unwrap_err().to_string();
        assert!(e.contains("/nonexistent/nowhere.csv"), "{e}");
    }
}
