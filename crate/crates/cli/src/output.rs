//! Artifact files. Every file carries the config hash and the artifact
//! version; writes go through a temporary file in the target directory and
//! a rename.

use crate::config::ExperimentConfig;
use crate::error::CliError;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

/// Provenance stamped on every artifact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Stamp {
    pub config_hash: String,
    pub version: String,
}

impl Stamp {
    pub fn of(cfg: &ExperimentConfig) -> Self {
        Self { config_hash: cfg.hash(), version: VERSION.to_string() }
    }

    fn csv_header(&self) -> String {
        format!("# config_hash={} version={}\n", self.config_hash, self.version)
    }
}

/// A table of floating-point columns, with optional text columns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, stamp: &Stamp) -> Result<Vec<u8>, CliError> {
        let mut out = stamp.csv_header().into_bytes();
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        drop(w);
        Ok(out)
    }
}

/// Shortest round-trip representation; `NaN` and infinities are spelled out.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// A JSON report with the stamp fields prepended.
#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    #[serde(flatten)]
    stamp: &'a Stamp,
    #[serde(flatten)]
    body: &'a T,
}

pub fn to_json<T: Serialize>(stamp: &Stamp, body: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(&Stamped { stamp, body }).expect("reports always serialize");
    s.push('\n');
    s.into_bytes()
}

/// Output directory of one experiment, `<root>/<experiment_id>-<hash>`.
#[derive(Clone, Debug)]
pub struct RunDir {
    pub path: PathBuf,
    pub stamp: Stamp,
}

impl RunDir {
    pub fn new(root: &Path, cfg: &ExperimentConfig) -> Self {
        Self { path: root.join(format!("{}-{}", cfg.experiment_id, cfg.short_hash())), stamp: Stamp::of(cfg) }
    }

    pub fn write_config(&self, cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
        let p = self.path.join("config.json");
        write_atomic(&p, cfg.canonical().as_bytes())?;
        Ok(p)
    }

    pub fn write_table(&self, name: &str, t: &Table) -> Result<PathBuf, CliError> {
        let p = self.path.join(name);
        write_atomic(&p, &t.to_csv(&self.stamp)?)?;
        Ok(p)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, body: &T) -> Result<PathBuf, CliError> {
        let p = self.path.join(name);
        write_atomic(&p, &to_json(&self.stamp, body))?;
        Ok(p)
    }
}

/// Reads a CSV written by [`Table::to_csv`] (or any CSV with a header row).
pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let columns: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if columns.is_empty() || columns.iter().all(|c| c.is_empty()) {
        return Err(CliError::Csv(format!("{}: no header row", path.display())));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok(Table { columns, rows })
}

impl Table {
    pub fn column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let j = self.columns.iter().position(|c| c == name).ok_or_else(|| CliError::Csv(format!("no column {name:?}")))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| r[j].trim().parse::<f64>().map_err(|_| CliError::Csv(format!("row {}: {:?} in column {name:?} is not a number", i + 1, r[j]))))
            .collect()
    }
}
