//! Atomic file output and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::Config;
use crate::error::CliError;

/// Writes `bytes` to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| CliError::Data(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))
}

/// Record of one command run, stored as JSON next to its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: u64,
    pub tool_version: String,
    pub wall_clock_s: f64,
    /// Effective configuration after environment overrides.
    pub config: Config,
}

pub struct ManifestBuilder {
    command: String,
    config_path: Option<PathBuf>,
    config: Config,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, config_path: Option<&Path>, config: &Config) -> Self {
        Self {
            command: command.into(),
            config_path: config_path.map(Path::to_path_buf),
            config: config.clone(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    /// Writes an output atomically and records it.
    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(path, bytes)?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }

    /// Writes the manifest to `path`.
    pub fn finish(self, path: &Path) -> Result<(), CliError> {
        let manifest = RunManifest {
            command: self.command,
            config_path: self.config_path,
            inputs: self.inputs,
            outputs: self.outputs,
            seed: self.config.seed,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            wall_clock_s: self.started.elapsed().as_secs_f64(),
            config: self.config,
        };
        let mut json = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Data(e.to_string()))?;
        json.push(b'\n');
        write_atomic(path, &json)
    }
}

/// `out.csv` → `out.manifest.json`.
pub fn manifest_path_for(out: &Path) -> PathBuf {
    sibling(out, "manifest.json")
}

/// `out.csv` with suffix `history.csv` → `out.history.csv`.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}"))
}
