//! Loading and cross-checking every declared input file.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use super::table::{parse_table, Table};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::network::EdgeCovariates;
use crate::peer::Composition;

/// Asymmetry tolerated in an adjacency file before it is rejected.
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct InputHash {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone)]
pub struct LoadedTable {
    pub path: PathBuf,
    pub table: Table,
}

impl LoadedTable {
    pub fn data(&self) -> &DMatrix<f64> {
        &self.table.data
    }

    /// Header names, or `prefix1..prefixK` when the file had none.
    pub fn names(&self, prefix: &str) -> Vec<String> {
        self.table
            .header
            .clone()
            .unwrap_or_else(|| (1..=self.table.data.ncols()).map(|j| format!("{prefix}{j}")).collect())
    }
}

/// Every declared input, parsed and dimension-checked.
#[derive(Debug, Clone, Default)]
pub struct DatasetBundle {
    pub graph: Option<Graph>,
    pub outcomes: Option<LoadedTable>,
    pub covariates: Option<LoadedTable>,
    pub composition: Option<Composition>,
    /// Rows of the class-probability file whose sums were off by more than
    /// rounding and were renormalized.
    pub renormalized_rows: Vec<usize>,
    pub class_names: Vec<String>,
    pub embedding_profile: Option<LoadedTable>,
    pub labels: Option<Vec<f64>>,
    pub edge_covariates: Option<EdgeCovariates>,
    pub hashes: Vec<InputHash>,
}

fn load(path: &Path, hashes: &mut Vec<InputHash>) -> Result<LoadedTable> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    hashes.push(InputHash {
        path: path.to_path_buf(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    });
    Ok(LoadedTable {
        path: path.to_path_buf(),
        table: parse_table(&bytes, path)?,
    })
}

fn validation(path: &Path, row: usize, message: impl Into<String>) -> Error {
    Error::Validation {
        file: path.to_path_buf(),
        row,
        message: message.into(),
    }
}

/// Data rows start on line 2 when the file has a header.
fn line_of(t: &LoadedTable, row: usize) -> usize {
    row + 1 + usize::from(t.table.header.is_some())
}

fn load_graph(t: &LoadedTable) -> Result<Graph> {
    let a = t.data();
    if a.nrows() != a.ncols() {
        return Err(validation(
            &t.path,
            0,
            format!("adjacency must be square, got {}x{}", a.nrows(), a.ncols()),
        ));
    }
    for i in 0..a.nrows() {
        if a[(i, i)] != 0.0 {
            return Err(validation(&t.path, line_of(t, i), "adjacency diagonal must be zero"));
        }
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOL {
                return Err(validation(
                    &t.path,
                    line_of(t, i),
                    format!("adjacency is not symmetric at ({}, {})", i + 1, j + 1),
                ));
            }
            if a[(i, j)] < 0.0 {
                return Err(validation(&t.path, line_of(t, i), "adjacency entries must be nonnegative"));
            }
        }
    }
    Graph::from_near_symmetric(a.clone(), SYMMETRY_TOL)
}

/// Tracks the first file that fixed the node count so mismatches can name
/// both files.
struct RowCheck {
    n: Option<(usize, PathBuf)>,
}

impl RowCheck {
    fn check(&mut self, path: &Path, rows: usize) -> Result<()> {
        match &self.n {
            None => {
                self.n = Some((rows, path.to_path_buf()));
                Ok(())
            }
            Some((n, first)) if *n != rows => Err(Error::Dimension(format!(
                "{} has {n} rows but {} has {rows} rows",
                first.display(),
                path.display()
            ))),
            Some(_) => Ok(()),
        }
    }
}

/// Reads every input the config declares, checks shapes against each other,
/// and smooths class probabilities onto the simplex.
pub fn validate_and_load(cfg: &RunConfig) -> Result<DatasetBundle> {
    let inputs = &cfg.inputs;
    let mut hashes = Vec::new();
    let mut rows = RowCheck { n: None };
    let mut bundle = DatasetBundle::default();

    if let Some(p) = &inputs.adjacency {
        let t = load(p, &mut hashes)?;
        let g = load_graph(&t)?;
        rows.check(p, g.n())?;
        bundle.graph = Some(g);
    }
    if let Some(p) = &inputs.outcomes {
        let t = load(p, &mut hashes)?;
        rows.check(p, t.data().nrows())?;
        bundle.outcomes = Some(t);
    }
    if let Some(p) = &inputs.covariates {
        let t = load(p, &mut hashes)?;
        rows.check(p, t.data().nrows())?;
        bundle.covariates = Some(t);
    }
    if let Some(p) = &inputs.class_probabilities {
        let t = load(p, &mut hashes)?;
        rows.check(p, t.data().nrows())?;
        let q = t.data();
        if let Some((i, _)) = q.row_iter().enumerate().find(|(_, r)| r.iter().any(|&v| v < 0.0)) {
            return Err(validation(p, line_of(&t, i), "class probabilities must be nonnegative"));
        }
        if let Some((i, _)) = q.row_iter().enumerate().find(|(_, r)| r.sum() <= 0.0) {
            return Err(validation(p, line_of(&t, i), "class probabilities sum to zero"));
        }
        let baseline = cfg.estimate.baseline.max(cfg.predict.baseline);
        if baseline >= q.ncols() {
            return Err(Error::Config(format!(
                "baseline class {baseline} but {} has {} classes",
                p.display(),
                q.ncols()
            )));
        }
        let (comp, off) = Composition::smoothed(q, baseline)?;
        for &i in &off {
            log::warn!(
                "{}: row {}: class probabilities sum to {:.6}; renormalized",
                p.display(),
                line_of(&t, i),
                q.row(i).sum()
            );
        }
        bundle.class_names = t.names("class");
        bundle.renormalized_rows = off;
        bundle.composition = Some(comp);
    }
    if let Some(p) = &inputs.embedding_profile {
        let t = load(p, &mut hashes)?;
        rows.check(p, t.data().nrows())?;
        bundle.embedding_profile = Some(t);
    }
    if let Some(p) = &inputs.labels {
        let t = load(p, &mut hashes)?;
        rows.check(p, t.data().nrows())?;
        if t.data().ncols() != 1 {
            return Err(validation(p, 0, format!("labels need one column, found {}", t.data().ncols())));
        }
        if let Some(i) = t.data().iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(validation(p, line_of(&t, i), "labels must be 0 or 1"));
        }
        bundle.labels = Some(t.data().iter().copied().collect());
    }
    if !inputs.edge_covariates.is_empty() {
        let mut mats = Vec::new();
        for p in &inputs.edge_covariates {
            let t = load(p, &mut hashes)?;
            let m = t.data();
            if m.nrows() != m.ncols() {
                return Err(validation(p, 0, format!("edge covariate must be square, got {}x{}", m.nrows(), m.ncols())));
            }
            rows.check(p, m.nrows())?;
            mats.push(m.clone());
        }
        bundle.edge_covariates = Some(EdgeCovariates::new(mats)?);
    }
    bundle.hashes = hashes;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn path_graph(n: usize) -> String {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i.abs_diff(j) == 1 { "1" } else { "0" })
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn row_mismatch_names_both_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::default();
        cfg.inputs.adjacency = Some(write(dir.path(), "adj.csv", &path_graph(100)));
        let y: String = (0..99).map(|i| format!("{i},1,2\n")).collect();
        cfg.inputs.outcomes = Some(write(dir.path(), "y.csv", &y));
        let e = validate_and_load(&cfg).unwrap_err();
        assert!(matches!(e, Error::Dimension(_)));
        let msg = e.to_string();
        assert!(msg.contains("adj.csv") && msg.contains("y.csv"), "{msg}");
    }

    #[test]
    fn off_simplex_row_is_renormalized() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::default();
        cfg.inputs.class_probabilities = Some(write(dir.path(), "q.csv", "a,b,c\n0.2,0.3,0.5\n0.5,0.28,0.2\n"));
        let b = validate_and_load(&cfg).unwrap();
        assert_eq!(b.renormalized_rows, vec![1]);
        let q = b.composition.unwrap();
        assert!((q.probabilities().row(1).sum() - 1.0).abs() < 1e-12);
        assert_eq!(b.class_names, vec!["a", "b", "c"]);
    }

    #[test]
    fn valid_bundle_records_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::default();
        cfg.inputs.adjacency = Some(write(dir.path(), "adj.csv", &path_graph(5)));
        cfg.inputs.covariates = Some(write(dir.path(), "x.csv", "x1\n1\n2\n3\n4\n5\n"));
        let b = validate_and_load(&cfg).unwrap();
        assert_eq!(b.graph.unwrap().n(), 5);
        assert_eq!(b.covariates.unwrap().names("x"), vec!["x1"]);
        assert_eq!(b.hashes.len(), 2);
        assert_eq!(b.hashes[0].sha256.len(), 64);
    }

    #[test]
    fn bad_adjacency_is_rejected_with_row() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::default();
        cfg.inputs.adjacency = Some(write(dir.path(), "adj.csv", "0,1,0\n0,0,1\n0,1,0\n"));
        let e = validate_and_load(&cfg).unwrap_err().to_string();
        assert!(e.contains("adj.csv") && e.contains("row 2") && e.contains("symmetric"), "{e}");
        cfg.inputs.labels = None;
        cfg.inputs.adjacency = Some(write(dir.path(), "lab.csv", "0,1\n1,0\n"));
        cfg.inputs.labels = Some(write(dir.path(), "labels.csv", "y\n0\n2\n"));
        let e = validate_and_load(&cfg).unwrap_err().to_string();
        assert!(e.contains("labels.csv") && e.contains("row 3"), "{e}");
    }
}
