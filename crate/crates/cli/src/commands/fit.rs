use crate::error::CliError;
use crate::output::{read_table, Stamp, VERSION};
use crate::report::FitReport;
use guidewave::fit::{fit_exponential, fit_power, verdict, Model, Verdict};
use std::path::Path;

#[derive(Clone, Debug, PartialEq)]
pub struct FitRequest {
    pub experiment_id: String,
    pub x: String,
    pub y: String,
    pub model: Model,
    pub window: [f64; 2],
    pub predicted: Option<f64>,
    pub tolerance: f64,
    pub sharp: bool,
}

/// Stamp recorded in the first line of an artifact CSV, if any.
pub fn csv_stamp(path: &Path) -> Result<Option<Stamp>, CliError> {
    let text = std::fs::read_to_string(path)?;
    let Some(line) = text.lines().next().and_then(|l| l.strip_prefix("# ")) else { return Ok(None) };
    let mut hash = None;
    let mut version = None;
    for kv in line.split_whitespace() {
        match kv.split_once('=') {
            Some(("config_hash", v)) => hash = Some(v.to_string()),
            Some(("version", v)) => version = Some(v.to_string()),
            _ => {}
        }
    }
    Ok(hash.map(|config_hash| Stamp { config_hash, version: version.unwrap_or_else(|| VERSION.to_string()) }))
}

pub fn run_fit(path: &Path, req: &FitRequest) -> Result<FitReport, CliError> {
    let t = read_table(path)?;
    if t.rows.is_empty() {
        return Err(CliError::Csv(format!("{}: no data rows", path.display())));
    }
    let xs = t.column(&req.x)?;
    let ys = t.column(&req.y)?;
    let w = (req.window[0], req.window[1]);
    let f = match req.model {
        Model::Power => fit_power(&xs, &ys, w)?,
        Model::Exponential => fit_exponential(&xs, &ys, w)?,
    };
    let v = req.predicted.map_or(Verdict::Informative, |p| verdict(&f, p, req.tolerance, req.sharp));
    Ok(FitReport::new(&req.experiment_id, &req.y, &f, req.predicted, v))
}
