//! Fit reports and their verdicts.

use crate::config::FitConfig;
use guidewave::fit::{fit_exponential, fit_power, verdict, DecayFit, Model, Verdict};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub experiment_id: String,
    pub series: String,
    pub model: Model,
    pub exponent: f64,
    pub stderr: f64,
    pub predicted: Option<f64>,
    pub verdict: Verdict,
    pub window: [f64; 2],
    pub samples: usize,
    pub curvature: f64,
    pub aic: f64,
}

impl FitReport {
    pub fn new(experiment_id: &str, series: &str, fit: &DecayFit, predicted: Option<f64>, verdict: Verdict) -> Self {
        Self {
            experiment_id: experiment_id.to_string(),
            series: series.to_string(),
            model: fit.model,
            exponent: fit.exponent,
            stderr: fit.stderr,
            predicted,
            verdict,
            window: [fit.window.0, fit.window.1],
            samples: fit.samples,
            curvature: fit.curvature,
            aic: fit.aic(),
        }
    }
}

fn soften(v: Verdict, fc: &FitConfig) -> Verdict {
    if fc.informative {
        Verdict::Informative
    } else {
        v
    }
}

/// Power fit graded against a predicted exponent.
pub fn graded_power(id: &str, series: &str, ts: &[f64], ys: &[f64], predicted: f64, fc: &FitConfig) -> guidewave::Result<FitReport> {
    let f = fit_power(ts, ys, (fc.window[0], fc.window[1]))?;
    let sharp = fc.sharp.iter().any(|s| s == series);
    Ok(FitReport::new(id, series, &f, Some(predicted), soften(verdict(&f, predicted, fc.tolerance, sharp), fc)))
}

/// Exponential against power on the exponential window. The exponential
/// report passes when its AIC is lower; the power report is informative.
pub fn model_selection(id: &str, series: &str, ts: &[f64], ys: &[f64], fc: &FitConfig) -> guidewave::Result<[FitReport; 2]> {
    let w = (fc.exp_window[0], fc.exp_window[1]);
    let e = fit_exponential(ts, ys, w)?;
    let p = fit_power(ts, ys, w)?;
    let v = if e.aic() < p.aic() { Verdict::Pass } else { Verdict::Fail };
    Ok([FitReport::new(id, series, &e, None, soften(v, fc)), FitReport::new(id, series, &p, None, Verdict::Informative)])
}

/// Relative standard error of a rate below which an exponential fit counts as clean.
pub const RATE_STDERR_FRACTION: f64 = 0.1;

/// Exponential fit that passes when the rate is negative and well determined.
pub fn exponential_rate(id: &str, series: &str, ts: &[f64], ys: &[f64], fc: &FitConfig) -> guidewave::Result<FitReport> {
    let e = fit_exponential(ts, ys, (fc.exp_window[0], fc.exp_window[1]))?;
    let v = if e.exponent < 0.0 && e.stderr < RATE_STDERR_FRACTION * e.exponent.abs() { Verdict::Pass } else { Verdict::Fail };
    Ok(FitReport::new(id, series, &e, None, soften(v, fc)))
}

pub fn failed(reports: &[FitReport]) -> Vec<String> {
    reports.iter().filter(|r| r.verdict == Verdict::Fail).map(|r| format!("{}/{} ({:?})", r.experiment_id, r.series, r.model)).collect()
}
