//! Write-once run directories and the run manifest.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::bundle::InputHash;
use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub stages: Vec<StageTiming>,
}

/// A run directory in which every file is created exactly once.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    outputs: Vec<FileHash>,
    stages: Vec<StageTiming>,
}

impl OutputDir {
    /// Creates `root` if needed. A directory that already holds a manifest
    /// belongs to a finished run and is refused.
    pub fn create(root: &Path) -> Result<Self> {
        let manifest = root.join(MANIFEST_NAME);
        if manifest.exists() {
            return Err(Error::OutputExists(manifest));
        }
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            outputs: Vec::new(),
            stages: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn create_new(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        let mut f = OpenOptions::new().write(true).create_new(true).open(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::AlreadyExists {
                Error::OutputExists(path.clone())
            } else {
                Error::io(&path, e)
            }
        })?;
        f.write_all(bytes).map_err(|e| Error::io(&path, e))
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        self.create_new(name, bytes)?;
        self.outputs.push(FileHash {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| Error::Numerical(format!("cannot serialize {name}: {e}")))?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Runs `f` and records its wall-clock time under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f();
        self.stages.push(StageTiming {
            stage: stage.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    /// Writes the manifest last, which seals the directory.
    pub fn finish(self, command: &str, seed: u64, config: serde_json::Value, inputs: &[InputHash]) -> Result<RunManifest> {
        let manifest = RunManifest {
            tool: "peerfx",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            config,
            inputs: inputs
                .iter()
                .map(|h| FileHash {
                    path: h.path.display().to_string(),
                    sha256: h.sha256.clone(),
                })
                .collect(),
            outputs: self.outputs.clone(),
            stages: self.stages.clone(),
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)
            .map_err(|e| Error::Numerical(format!("cannot serialize manifest: {e}")))?;
        bytes.push(b'\n');
        self.create_new(MANIFEST_NAME, &bytes)?;
        Ok(manifest)
    }
}
