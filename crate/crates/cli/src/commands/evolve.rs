use crate::config::{DampingConfig, ExperimentConfig, Flavor};
use crate::error::CliError;
use crate::output::{num, RunDir, Table};
use crate::report::{exponential_rate, graded_power, model_selection, FitReport};
use crate::setup;
use guidewave::evolve::{run, EnergyRecord, IdentityReport, RunOutput};
use guidewave::fit::{to_f64, Theorem, Verdict};
use serde::Serialize;
use std::path::{Path, PathBuf};

pub const SERIES_COLUMNS: [&str; 9] = ["t", "E_total", "E_local", "E_w", "grad_w", "dtu_w", "E_p0", "E_p0perp", "dissipation_cum"];

pub fn series_table(records: &[EnergyRecord<f64>]) -> Table {
    let mut t = Table::new(&SERIES_COLUMNS);
    for r in records {
        t.push([r.t, r.total, r.local, r.weighted, r.grad_w, r.dtu_w, r.p0, r.p0_perp, r.dissipation_cum].map(num).to_vec());
    }
    t
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentitySummary {
    pub initial_energy: f64,
    pub steps: usize,
    pub max_step_residual: f64,
    pub max_drift: f64,
    pub relative_step_residual: f64,
    pub relative_drift: f64,
}

impl From<&IdentityReport<f64>> for IdentitySummary {
    fn from(r: &IdentityReport<f64>) -> Self {
        Self {
            initial_energy: r.initial_energy,
            steps: r.steps,
            max_step_residual: r.max_step_residual,
            max_drift: r.max_drift,
            relative_step_residual: r.max_step_residual / r.initial_energy,
            relative_drift: r.max_drift / r.initial_energy,
        }
    }
}

pub struct EvolveOutcome {
    pub output: RunOutput<f64>,
    pub fits: Vec<FitReport>,
}

fn column(records: &[EnergyRecord<f64>], f: impl Fn(&EnergyRecord<f64>) -> f64) -> Vec<f64> {
    records.iter().map(f).collect()
}

/// Fits attached to an evolution run, by flavor.
pub fn fits(cfg: &ExperimentConfig, records: &[EnergyRecord<f64>]) -> Result<Vec<FitReport>, CliError> {
    let Some(fc) = cfg.fit.as_ref() else { return Ok(Vec::new()) };
    let id = &cfg.experiment_id;
    let ts = column(records, |r| r.t);
    let mut out = Vec::new();
    match cfg.flavor {
        Flavor::WaveNeumann | Flavor::WaveEuclidean => {
            let g = to_f64(setup::predicted(cfg, Theorem::EnergyGrad)?);
            let d = to_f64(setup::predicted(cfg, Theorem::EnergyDt)?);
            out.push(graded_power(id, "grad_w", &ts, &column(records, |r| r.grad_w), g, fc)?);
            out.push(graded_power(id, "dtu_w", &ts, &column(records, |r| r.dtu_w), d, fc)?);
            if cfg.domain.modes > 1 && cfg.flavor == Flavor::WaveNeumann {
                let mut sel = model_selection(id, "E_p0perp", &ts, &column(records, |r| r.p0_perp), fc)?;
                // the hole's high-frequency track is not resolved at this scale
                if !matches!(cfg.damping, DampingConfig::Constant { .. }) {
                    sel.iter_mut().for_each(|r| r.verdict = Verdict::Informative);
                }
                out.extend(sel);
            }
        }
        Flavor::WaveDirichlet => {
            let k = to_f64(setup::predicted(cfg, Theorem::DirichletHighFreq)?);
            out.push(graded_power(id, "energy_norm", &ts, &column(records, |r| r.total.sqrt()), k, fc)?);
        }
        Flavor::KleinGordon { .. } => {
            out.push(exponential_rate(id, "E_total", &ts, &column(records, |r| r.total), fc)?);
        }
    }
    Ok(out)
}

pub fn run_evolve(cfg: &ExperimentConfig) -> Result<EvolveOutcome, CliError> {
    let sys = setup::system(cfg, 1.0)?;
    let init = setup::initial_state(cfg, &sys)?;
    let spec = setup::run_spec(cfg.time()?, cfg.weights.delta1, false);
    let output = run(&sys, &init, &spec)?;
    let fits = fits(cfg, &output.records)?;
    Ok(EvolveOutcome { output, fits })
}

pub fn cmd_evolve(cfg: &ExperimentConfig, root: &Path) -> Result<(EvolveOutcome, Vec<PathBuf>), CliError> {
    let out = run_evolve(cfg)?;
    let dir = RunDir::new(root, cfg);
    let files = vec![
        dir.write_config(cfg)?,
        dir.write_table("series.csv", &series_table(&out.output.records))?,
        dir.write_json("identity.json", &IdentitySummary::from(&out.output.identity))?,
        dir.write_json("fit.json", &serde_json::json!({ "fits": out.fits }))?,
    ];
    Ok((out, files))
}
