use crate::config::{ExperimentConfig, ScanKind};
use crate::error::CliError;
use crate::output::{num, RunDir, Table};
use crate::setup;
use guidewave::fit::loglog_slope;
use guidewave::resolvent::{
    energy_resolvent_norm, guard_truncation, norm_scan, semiclassical_scan, spectral_gap_probe, theta_probe, trapped_control, GapPoint, Method,
    PointFlag, ScanOptions, ScanPoint, SemiclassicalPoint, ThetaPoint, GUARD_FACTOR, GUARD_TOL,
};
use guidewave::{Complex64, ModeSystem64};
use serde::Serialize;
use std::path::{Path, PathBuf};

pub const SCAN_COLUMNS: [&str; 10] = ["re_z", "im_z", "beta1", "beta2", "norm_est", "method", "flag", "mode", "residual", "truncation_change"];

fn label<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

pub fn scan_table(points: &[ScanPoint]) -> Table {
    let mut t = Table::new(&SCAN_COLUMNS);
    for p in points {
        t.push(vec![
            num(p.z.re),
            num(p.z.im),
            p.beta1.to_string(),
            p.beta2.to_string(),
            num(p.norm_est),
            label(&p.method),
            label(&p.flag),
            p.mode.to_string(),
            num(p.residual),
            num(p.truncation_change),
        ]);
    }
    t
}

pub fn theta_table(points: &[ThetaPoint]) -> Table {
    let mut t = Table::new(&["re_z", "im_z", "block", "norm_est"]);
    for p in points {
        for (b, n) in p.norms.iter().enumerate() {
            t.push(vec![num(p.z.re), num(p.z.im), (b + 1).to_string(), num(*n)]);
        }
    }
    t
}

#[derive(Clone, Debug, Serialize)]
pub struct DenseCheck {
    pub re_z: f64,
    pub im_z: f64,
    pub estimate: f64,
    pub dense: f64,
    pub relative_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanSummary {
    pub experiment_id: String,
    pub kind: ScanKind,
    /// Slope of `log norm` against `log |z|` over the slope range.
    pub slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    /// `max norm / <z>^2` over the scan.
    pub max_ratio_japanese2: f64,
    pub max_norm: f64,
    pub truncation_limited: usize,
    pub max_truncation_change: Option<f64>,
    pub dense_checks: Vec<DenseCheck>,
}

pub enum ScanResult {
    Points(Vec<ScanPoint>),
    Theta(Vec<ThetaPoint>),
    Gap(Vec<GapPoint>),
}

pub struct ScanOutcome {
    pub result: ScanResult,
    pub summary: ScanSummary,
}

fn zs(cfg: &ExperimentConfig) -> Result<Vec<Complex64>, CliError> {
    let s = cfg.scan()?;
    if s.z_list.is_empty() {
        return Err(CliError::Config("scan.z_list: empty".into()));
    }
    Ok(s.z_list.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
}

fn energy_scan(sys: &ModeSystem64, zs: &[Complex64], opts: &ScanOptions) -> guidewave::Result<Vec<ScanPoint>> {
    zs.iter().map(|&z| energy_resolvent_norm(sys, z, opts)).collect()
}

fn points(cfg: &ExperimentConfig, kind: ScanKind, sys: &ModeSystem64, opts: &ScanOptions) -> Result<Vec<ScanPoint>, CliError> {
    let s = cfg.scan()?;
    let z = zs(cfg)?;
    Ok(match kind {
        ScanKind::Wave => norm_scan(sys, &z, s.beta1, s.beta2, opts)?,
        ScanKind::Energy => energy_scan(sys, &z, opts)?,
        _ => unreachable!("only norm scans produce scan points"),
    })
}

fn summarize(cfg: &ExperimentConfig, kind: ScanKind, pts: &[ScanPoint]) -> Result<ScanSummary, CliError> {
    let s = cfg.scan()?;
    let primary: Vec<&ScanPoint> = pts.iter().filter(|p| p.method != Method::DenseSvd).collect();
    let (slope, slope_stderr) = match s.slope_range {
        Some([lo, hi]) => {
            // truncation-limited points do not enter fits
            let sel: Vec<&&ScanPoint> = primary.iter().filter(|p| p.flag == PointFlag::Ok && (lo..=hi).contains(&p.z.norm())).collect();
            let (a, b) = loglog_slope(&sel.iter().map(|p| p.z.norm()).collect::<Vec<_>>(), &sel.iter().map(|p| p.norm_est).collect::<Vec<_>>())?;
            (Some(a), Some(b))
        }
        None => (None, None),
    };
    let dense_checks = pts
        .iter()
        .filter(|p| p.method == Method::DenseSvd)
        .filter_map(|d| {
            primary.iter().find(|p| p.z == d.z).map(|p| DenseCheck {
                re_z: d.z.re,
                im_z: d.z.im,
                estimate: p.norm_est,
                dense: d.norm_est,
                relative_error: (p.norm_est - d.norm_est).abs() / d.norm_est,
            })
        })
        .collect();
    let changes: Vec<f64> = primary.iter().map(|p| p.truncation_change).filter(|c| !c.is_nan()).collect();
    Ok(ScanSummary {
        experiment_id: cfg.experiment_id.clone(),
        kind,
        slope,
        slope_stderr,
        max_ratio_japanese2: primary.iter().map(|p| p.norm_est / (1.0 + p.z.norm_sqr())).fold(0.0, f64::max),
        max_norm: primary.iter().map(|p| p.norm_est).fold(0.0, f64::max),
        truncation_limited: primary.iter().filter(|p| p.flag == PointFlag::TruncationLimited).count(),
        max_truncation_change: (!changes.is_empty()).then(|| changes.iter().copied().fold(0.0, f64::max)),
        dense_checks,
    })
}

pub fn run_scan(cfg: &ExperimentConfig) -> Result<ScanOutcome, CliError> {
    let s = cfg.scan()?;
    let opts = setup::scan_options(cfg)?;
    let sys = setup::system(cfg, 1.0)?;
    match s.kind {
        ScanKind::Wave | ScanKind::Energy => {
            let mut pts = points(cfg, s.kind, &sys, &opts)?;
            if s.guard {
                let big = setup::system(cfg, GUARD_FACTOR)?;
                let quick = ScanOptions { validate_fraction: 0.0, ..opts };
                let enlarged = points(cfg, s.kind, &big, &quick)?;
                guard_truncation(&mut pts, &enlarged, GUARD_TOL);
            }
            let summary = summarize(cfg, s.kind, &pts)?;
            Ok(ScanOutcome { result: ScanResult::Points(pts), summary })
        }
        ScanKind::Theta => {
            let t = theta_probe(&sys, &zs(cfg)?, cfg.weights.delta1, cfg.weights.delta2, &opts)?;
            let norms: Vec<f64> = t.iter().flat_map(|p| p.norms).collect();
            let summary = ScanSummary {
                experiment_id: cfg.experiment_id.clone(),
                kind: s.kind,
                slope: None,
                slope_stderr: None,
                max_ratio_japanese2: t.iter().map(|p| p.norms.iter().fold(0.0f64, |m, &n| m.max(n)) / (1.0 + p.z.norm_sqr())).fold(0.0, f64::max),
                max_norm: norms.iter().copied().fold(0.0, f64::max),
                truncation_limited: 0,
                max_truncation_change: None,
                dense_checks: Vec::new(),
            };
            Ok(ScanOutcome { result: ScanResult::Theta(t), summary })
        }
        ScanKind::Gap => {
            let g = s.gap.ok_or_else(|| CliError::Config("scan.gap: missing".into()))?;
            let taus: Vec<f64> = zs(cfg)?.iter().map(|z| z.re).collect();
            let pts = spectral_gap_probe(&sys, &taus, g.gamma, g.c_bound, g.samples, &opts)?;
            let summary = ScanSummary {
                experiment_id: cfg.experiment_id.clone(),
                kind: s.kind,
                slope: None,
                slope_stderr: None,
                max_ratio_japanese2: pts.iter().map(|p| p.max_norm / (1.0 + p.tau * p.tau)).fold(0.0, f64::max),
                max_norm: pts.iter().map(|p| p.max_norm).fold(0.0, f64::max),
                truncation_limited: 0,
                max_truncation_change: None,
                dense_checks: Vec::new(),
            };
            Ok(ScanOutcome { result: ScanResult::Gap(pts), summary })
        }
        ScanKind::Semiclassical => Err(CliError::Config("scan.kind: semiclassical scans run through the semiclassical subcommand".into())),
    }
}

pub fn cmd_resolvent(cfg: &ExperimentConfig, root: &Path) -> Result<(ScanOutcome, Vec<PathBuf>), CliError> {
    let out = run_scan(cfg)?;
    let dir = RunDir::new(root, cfg);
    let mut files = vec![dir.write_config(cfg)?];
    match &out.result {
        ScanResult::Points(p) => files.push(dir.write_table("scan.csv", &scan_table(p))?),
        ScanResult::Theta(t) => files.push(dir.write_table("theta.csv", &theta_table(t))?),
        ScanResult::Gap(g) => files.push(dir.write_json("gap.json", &serde_json::json!({ "points": g.iter().map(gap_json).collect::<Vec<_>>() }))?),
    }
    files.push(dir.write_json("slopes.json", &out.summary)?);
    Ok((out, files))
}

fn gap_json(p: &GapPoint) -> serde_json::Value {
    serde_json::json!({
        "tau": p.tau,
        "gamma": p.gamma,
        "max_norm": p.max_norm,
        "bound": p.bound,
        "failed_solves": p.failed_solves,
        "member": p.member,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SemiclassicalRow {
    pub h: f64,
    pub norm: f64,
    pub scaled: f64,
}

impl From<&SemiclassicalPoint> for SemiclassicalRow {
    fn from(p: &SemiclassicalPoint) -> Self {
        Self { h: p.h, norm: p.norm, scaled: p.scaled }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SemiclassicalSummary {
    pub experiment_id: String,
    pub points: Vec<SemiclassicalRow>,
    /// `max scaled / min scaled` over the `h` set.
    pub spread: f64,
    pub control: Vec<SemiclassicalRow>,
    /// Growth of the control from the largest to the smallest `h`.
    pub control_growth: f64,
}

fn spread(p: &[SemiclassicalRow]) -> f64 {
    let hi = p.iter().map(|r| r.scaled).fold(f64::NEG_INFINITY, f64::max);
    let lo = p.iter().map(|r| r.scaled).fold(f64::INFINITY, f64::min);
    hi / lo
}

fn growth(p: &[SemiclassicalRow]) -> f64 {
    let big_h = p.iter().max_by(|a, b| a.h.total_cmp(&b.h));
    let small_h = p.iter().min_by(|a, b| a.h.total_cmp(&b.h));
    match (big_h, small_h) {
        (Some(b), Some(s)) => s.scaled / b.scaled,
        _ => f64::NAN,
    }
}

pub fn run_semiclassical(cfg: &ExperimentConfig) -> Result<SemiclassicalSummary, CliError> {
    let s = cfg.scan()?;
    if s.kind != ScanKind::Semiclassical || s.h_list.is_empty() {
        return Err(CliError::Config("scan: the semiclassical subcommand needs kind = semiclassical and a nonempty h_list".into()));
    }
    let opts = setup::scan_options(cfg)?.norm;
    let disc = setup::discretization(cfg, 1.0)?;
    let points: Vec<SemiclassicalRow> = semiclassical_scan(&disc, &s.h_list, &opts)?.iter().map(Into::into).collect();
    let mut bare = cfg.clone();
    bare.damping = crate::config::DampingConfig::Constant { c0: 0.0 };
    let control: Vec<SemiclassicalRow> = trapped_control(&setup::discretization(&bare, 1.0)?, &s.h_list, &opts)?.iter().map(Into::into).collect();
    Ok(SemiclassicalSummary { experiment_id: cfg.experiment_id.clone(), spread: spread(&points), control_growth: growth(&control), points, control })
}

pub fn cmd_semiclassical(cfg: &ExperimentConfig, root: &Path) -> Result<(SemiclassicalSummary, Vec<PathBuf>), CliError> {
    let out = run_semiclassical(cfg)?;
    let dir = RunDir::new(root, cfg);
    let files = vec![dir.write_config(cfg)?, dir.write_json("semiclassical.json", &out)?];
    Ok((out, files))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scans_with_dense_checks_are_reproducible() {
        let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/validation_hole.json");
        let cfg = ExperimentConfig::load(&p, &["--grid.N=127".to_string()]).unwrap();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let (out, fa) = cmd_resolvent(&cfg, a.path()).unwrap();
        let (_, fb) = cmd_resolvent(&cfg, b.path()).unwrap();
        for (x, y) in fa.iter().zip(&fb) {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
        }
        assert!(!out.summary.dense_checks.is_empty());
        assert!(out.summary.dense_checks.iter().all(|d| d.relative_error < crate::DENSE_REL_TOL));
    }
}
