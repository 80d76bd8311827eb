//! CSV tables, JSON reports and the run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, Settings};
use crate::error::{CliError, CliResult};

/// Bumped whenever a column set changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Numeric table written as one CSV file.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub file: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(file: impl Into<String>, columns: Vec<String>) -> Self {
        Self { file: file.into(), columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Shortest round-trip formatting (exponent form for tiny and huge
    /// magnitudes), so identical numbers give identical bytes.
    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| format!("{:?}", x + 0.0)))?;
        }
        w.into_inner().map_err(|e| CliError::Io { path: PathBuf::from(&self.file), source: e.into_error() })
    }
}

/// Everything an experiment produces apart from timing.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    /// Additional JSON documents, by file name.
    pub reports: Vec<(String, Value)>,
    /// Solved ensemble parameters and effective couplings.
    pub derived: Value,
    /// Headline numbers of the run.
    pub summary: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub version: String,
    pub schema_version: u32,
    pub config: RunConfig,
    pub config_hash: String,
    pub seed: u64,
    pub scaled: bool,
    pub derived_params: Value,
    pub summary: Value,
    pub outputs: Vec<String>,
    pub columns: BTreeMap<String, Vec<String>>,
    pub runtime_seconds: f64,
}

/// SHA-256 of the resolved config, ignoring where outputs go.
pub fn config_hash(config: &RunConfig) -> CliResult<String> {
    let bytes = serde_json::to_vec(&RunConfig { out: None, ..config.clone() })?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Writes tables, reports and `manifest.json` into `settings.out`; returns the
/// manifest. Everything except the manifest is a pure function of the config.
pub fn write_outcome(settings: &Settings, outcome: &Outcome, runtime_seconds: f64) -> CliResult<Manifest> {
    let dir = &settings.out;
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
    let mut outputs = Vec::new();
    let mut columns = BTreeMap::new();
    for t in &outcome.tables {
        write(&dir.join(&t.file), &t.to_csv()?)?;
        outputs.push(t.file.clone());
        columns.insert(t.file.clone(), t.columns.clone());
    }
    for (file, doc) in &outcome.reports {
        let mut bytes = serde_json::to_vec_pretty(doc)?;
        bytes.push(b'\n');
        write(&dir.join(file), &bytes)?;
        outputs.push(file.clone());
    }
    let manifest = Manifest {
        experiment: settings.experiment.label().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        schema_version: SCHEMA_VERSION,
        config: settings.resolved.clone(),
        config_hash: config_hash(&settings.resolved)?,
        seed: settings.seed,
        scaled: settings.scaled,
        derived_params: outcome.derived.clone(),
        summary: outcome.summary.clone(),
        outputs,
        columns,
        runtime_seconds,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    write(&dir.join("manifest.json"), &bytes)?;
    Ok(manifest)
}

/// JSON number, or a string for infinities and NaN.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x + 0.0)
    } else {
        Value::from(format!("{x}"))
    }
}
