//! Dataset ingestion, configuration schema, and report serialization.

mod bundle;
mod config;
mod output;
mod run;
mod serde_helpers;
mod table;

pub use bundle::{validate_and_load, DatasetBundle, InputHash, LoadedTable, SYMMETRY_TOL};
pub use config::{
    Command, EstimateConfig, EstimatorChoice, GofConfig, InputPaths, LatentConfig, LatentModel, McConfig,
    OutcomeSource, PredictConfig, ProfileSource, RunConfig,
};
pub use output::{FileHash, OutputDir, RunManifest, StageTiming, MANIFEST_NAME};
pub use run::dispatch;
pub use serde_helpers::{serde_matrix, serde_vector};
pub use table::{csv_text, format_number, matrix_csv, parse_table, read_table, Table};
