use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{num, RunDir, Table};
use crate::report::{graded_power, FitReport};
use crate::setup;
use guidewave::evolve::run;
use guidewave::fit::{to_f64, Theorem};
use guidewave::heat::{compare, ComparisonRecord, HeatSolution};
use serde::Serialize;
use std::path::{Path, PathBuf};

pub const COMPARISON_COLUMNS: [&str; 7] = ["t", "norm_grad_diff", "norm_dt_diff", "norm_grad_v", "norm_dt_v", "ratio_grad", "ratio_dt"];

pub fn comparison_table(records: &[ComparisonRecord<f64>]) -> Table {
    let mut t = Table::new(&COMPARISON_COLUMNS);
    for r in records {
        t.push([r.t, r.norm_grad_diff, r.norm_dt_diff, r.norm_grad_v, r.norm_dt_v, r.ratio_grad(), r.ratio_dt()].map(num).to_vec());
    }
    t
}

#[derive(Clone, Debug, Serialize)]
pub struct HeatSummary {
    pub experiment_id: String,
    /// Mass of the heat data `P0(a u0 + u1)`.
    pub heat_mass: f64,
    pub heat_data_sup: f64,
    pub ratio_dt_final: f64,
    /// Earliest sample time after which `ratio_dt` never increases.
    pub ratio_dt_monotone_from: Option<f64>,
    pub fits: Vec<FitReport>,
}

pub struct HeatOutcome {
    pub records: Vec<ComparisonRecord<f64>>,
    pub summary: HeatSummary,
}

/// Earliest `t_j` such that `y` is nonincreasing on `j..`.
pub fn monotone_from(ts: &[f64], ys: &[f64]) -> Option<f64> {
    let n = ys.len();
    if n == 0 || !ys.iter().all(|y| y.is_finite()) {
        return None;
    }
    let mut j = n - 1;
    while j > 0 && ys[j - 1] >= ys[j] {
        j -= 1;
    }
    Some(ts[j])
}

pub fn run_heat_compare(cfg: &ExperimentConfig) -> Result<HeatOutcome, CliError> {
    let sys = setup::system(cfg, 1.0)?;
    if sys.p0_mode.is_none() {
        return Err(CliError::Config("flavor: the heat comparison needs a constant transverse mode".into()));
    }
    let init = setup::initial_state(cfg, &sys)?;
    let heat = HeatSolution::from_wave(&sys, &init)?;
    let spec = setup::run_spec(cfg.time()?, cfg.weights.delta1, true);
    let out = run(&sys, &init, &spec)?;
    let times: Vec<f64> = out.snapshots.iter().map(|s| s.t).collect();
    let records = compare(&sys, &out.snapshots, &times, &heat, cfg.weights.delta1)?;

    let ts: Vec<f64> = records.iter().map(|r| r.t).collect();
    let ratio: Vec<f64> = records.iter().map(|r| r.ratio_dt()).collect();
    let mut fits = Vec::new();
    if let Some(fc) = cfg.fit.as_ref() {
        let g = to_f64(setup::predicted(cfg, Theorem::DiffGrad)?);
        let d = to_f64(setup::predicted(cfg, Theorem::DiffDt)?);
        let gd: Vec<f64> = records.iter().map(|r| r.norm_grad_diff).collect();
        let dd: Vec<f64> = records.iter().map(|r| r.norm_dt_diff).collect();
        fits.push(graded_power(&cfg.experiment_id, "norm_grad_diff", &ts, &gd, g, fc)?);
        fits.push(graded_power(&cfg.experiment_id, "norm_dt_diff", &ts, &dd, d, fc)?);
    }
    let summary = HeatSummary {
        experiment_id: cfg.experiment_id.clone(),
        heat_mass: heat.mass(),
        heat_data_sup: heat.w0.iter().fold(0.0f64, |m, w| m.max(w.abs())),
        ratio_dt_final: ratio.last().copied().unwrap_or(f64::NAN),
        ratio_dt_monotone_from: monotone_from(&ts, &ratio),
        fits,
    };
    Ok(HeatOutcome { records, summary })
}

pub fn cmd_heat_compare(cfg: &ExperimentConfig, root: &Path) -> Result<(HeatOutcome, Vec<PathBuf>), CliError> {
    let out = run_heat_compare(cfg)?;
    let dir = RunDir::new(root, cfg);
    let files = vec![
        dir.write_config(cfg)?,
        dir.write_table("comparison.csv", &comparison_table(&out.records))?,
        dir.write_json("heat.json", &out.summary)?,
    ];
    Ok((out, files))
}
