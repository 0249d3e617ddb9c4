//! Acceptance run over the shipped configs: one PASS/FAIL line per criterion.

use guidewave::discretize::{Absorption, DampingProfile, Discretization, Grid1D, StencilOrder};
use guidewave::evolve::{run, shapes, RunSpec, Schedule, WaveState};
use guidewave::fit::{loglog_slope, Model, Verdict};
use guidewave::heat::{heat_weighted_norm, HeatFlavor, HeatNormQuery, HeatWindow};
use guidewave::resolvent::{HeatResolvent, ThetaPoint};
use guidewave::transverse::ModeField;
use guidewave::{Complex64, ModeSystem64};
use guidewave_cli::commands::evolve::{run_evolve, EvolveOutcome};
use guidewave_cli::commands::heat::run_heat_compare;
use guidewave_cli::commands::scan::{run_scan, run_semiclassical, ScanResult};
use guidewave_cli::report::FitReport;
use guidewave_cli::{setup, ExperimentConfig};
use nalgebra::{DMatrix, DVector};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

const STEP_RESIDUAL_REL: f64 = 1e-9;
const DRIFT_REL: f64 = 1e-6;
const GOLDEN_RUNTIME: Duration = Duration::from_secs(120);
const CONSERVATIVE_DRIFT_REL: f64 = 1e-10;
const CONSERVATIVE_STEPS: usize = 10_000;
const EXPONENT_TOL: f64 = 0.15;
const RATIO_DT_MAX: f64 = 0.3;
const RATIO_MONOTONE_FROM: f64 = 50.0;
const HEAT_SLOPE: f64 = -1.0;
const HEAT_SLOPE_TOL: f64 = 0.05;
const HEAT_LAPLACIAN_SLOPE: f64 = -1.5;
const HEAT_LAPLACIAN_TOL: f64 = 0.1;
const HEAT_RUNTIME: Duration = Duration::from_secs(60);
const HEAT_POINTS: usize = 2000;
const HIGHFREQ_SLOPE: f64 = -1.0;
const HIGHFREQ_TOL: f64 = 0.1;
const HOLE_POWER: f64 = 3.0;
const TRUNCATION_CHANGE: f64 = 0.05;
const THETA_GROWTH: f64 = 3.0;
const ROW_IDENTITY_TOL: f64 = 1e-12;
const EXPM_TOL: f64 = 1e-6;
const EXPM_DT: f64 = 1e-3;
const EXPM_N: usize = 64;

fn config(name: &str, overrides: &[&str]) -> ExperimentConfig {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.json"));
    ExperimentConfig::load(&p, &overrides.iter().map(|s| s.to_string()).collect::<Vec<_>>()).unwrap_or_else(|e| panic!("{name}: {e}"))
}

struct Line {
    ok: bool,
    detail: String,
}

fn line(ok: bool, detail: impl Into<String>) -> Line {
    Line { ok, detail: detail.into() }
}

fn failed(e: impl std::fmt::Display) -> Line {
    line(false, format!("error: {e}"))
}

fn find<'a>(fits: &'a [FitReport], series: &str, model: Model) -> Option<&'a FitReport> {
    fits.iter().find(|f| f.series == series && f.model == model)
}

struct Golden {
    name: &'static str,
    out: EvolveOutcome,
    elapsed: Duration,
}

const GOLDEN: [&str; 9] =
    ["neumann_a1", "neumann_hole", "dirichlet_hole", "localized_a1", "diffusion_a1", "heat_gaussian", "heat_zero_data", "conservative", "klein_gordon"];

fn golden_runs() -> Result<Vec<Golden>, String> {
    GOLDEN
        .iter()
        .map(|&name| {
            let start = Instant::now();
            let out = run_evolve(&config(name, &[])).map_err(|e| format!("{name}: {e}"))?;
            Ok(Golden { name, out, elapsed: start.elapsed() })
        })
        .collect()
}

fn golden<'a>(runs: &'a [Golden], name: &str) -> &'a Golden {
    runs.iter().find(|g| g.name == name).expect("golden run")
}

fn c1(runs: &[Golden]) -> Line {
    let mut worst_res = 0.0f64;
    let mut worst_drift = 0.0f64;
    let mut ok = true;
    for g in runs {
        let id = &g.out.output.identity;
        let e0 = id.initial_energy;
        ok &= id.max_step_residual <= STEP_RESIDUAL_REL * e0 && id.max_drift <= DRIFT_REL * e0;
        if e0 > 0.0 {
            worst_res = worst_res.max(id.max_step_residual / e0);
            worst_drift = worst_drift.max(id.max_drift / e0);
        }
    }
    let cfg = config("neumann_a1", &[]);
    let at_size = cfg.grid.n == 4096 && cfg.domain.modes == 16;
    let t = golden(runs, "neumann_a1").elapsed;
    ok &= at_size && t <= GOLDEN_RUNTIME;
    line(ok, format!("{} runs, max step residual {worst_res:.2e} E0, max drift {worst_drift:.2e} E0, neumann_a1 (N=4096, K=16) {:.1}s", runs.len(), t.as_secs_f64()))
}

fn c2(runs: &[Golden]) -> Line {
    let id = &golden(runs, "conservative").out.output.identity;
    let drift = id.max_drift / id.initial_energy;
    line(id.steps >= CONSERVATIVE_STEPS && drift <= CONSERVATIVE_DRIFT_REL, format!("{} steps, drift {drift:.2e} E0", id.steps))
}

/// One-sided `exponent <= predicted + tol`, two-sided when `sharp`.
fn graded(f: Option<&FitReport>, sharp: bool) -> (bool, String) {
    match f {
        Some(f) => {
            let p = f.predicted.unwrap_or(f64::NAN);
            let ok = if sharp { (f.exponent - p).abs() <= EXPONENT_TOL } else { f.exponent <= p + EXPONENT_TOL };
            (ok, format!("{} {:.4} (predicted {p:.4}{})", f.series, f.exponent, if sharp { ", sharp" } else { "" }))
        }
        None => (false, "missing fit".into()),
    }
}

fn c3(runs: &[Golden]) -> Line {
    let fits = &golden(runs, "neumann_a1").out.fits;
    let (g, gs) = graded(find(fits, "grad_w", Model::Power), false);
    let (d, ds) = graded(find(fits, "dtu_w", Model::Power), true);
    line(g && d, format!("{gs}, {ds}"))
}

fn c4(runs: &[Golden]) -> Line {
    match find(&golden(runs, "localized_a1").out.fits, "dtu_w", Model::Power) {
        Some(f) => {
            let p = f.predicted.unwrap_or(f64::NAN);
            line(f.exponent <= p + EXPONENT_TOL, format!("dtu_w {:.4} against bound {p:.4} + {EXPONENT_TOL}", f.exponent))
        }
        None => line(false, "missing fit"),
    }
}

fn c5() -> Line {
    match run_heat_compare(&config("diffusion_a1", &[])) {
        Ok(h) => {
            let s = &h.summary;
            let t_end = h.records.last().map_or(f64::NAN, |r| r.t);
            let mono = s.ratio_dt_monotone_from.is_some_and(|t| t <= RATIO_MONOTONE_FROM);
            line(s.ratio_dt_final <= RATIO_DT_MAX && mono, format!("ratio_dt {:.4} at t={t_end}, nonincreasing from t={:?}", s.ratio_dt_final, s.ratio_dt_monotone_from))
        }
        Err(e) => failed(e),
    }
}

fn heat_slope(flavor: HeatFlavor, s1: f64, s2: f64) -> Result<f64, String> {
    let win = HeatWindow { points: HEAT_POINTS, ..HeatWindow::default() };
    let ts: Vec<f64> = (0..=8).map(|j| 10f64.powf(j as f64 / 4.0)).collect();
    let norms = ts
        .iter()
        .map(|&t| heat_weighted_norm::<f64>(&HeatNormQuery { t, flavor, s1, s2, kappa: 1.2 }, &win).map(|e| e.norm))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    loglog_slope(&ts, &norms).map(|(s, _)| s).map_err(|e| e.to_string())
}

fn c6() -> Line {
    let start = Instant::now();
    let d = heat_slope(HeatFlavor::Derivative { beta: 1, s: 1.0 }, 0.0, 0.0);
    let l = heat_slope(HeatFlavor::Laplacian, 0.5, 0.5);
    let t = start.elapsed();
    match (d, l) {
        (Ok(d), Ok(l)) => {
            let ok = (d - HEAT_SLOPE).abs() <= HEAT_SLOPE_TOL && (l - HEAT_LAPLACIAN_SLOPE).abs() <= HEAT_LAPLACIAN_TOL && t <= HEAT_RUNTIME;
            line(ok, format!("derivative slope {d:.4} (want {HEAT_SLOPE} +- {HEAT_SLOPE_TOL}), laplacian slope {l:.4} (want {HEAT_LAPLACIAN_SLOPE} +- {HEAT_LAPLACIAN_TOL}), {:.1}s", t.as_secs_f64()))
        }
        (Err(e), _) | (_, Err(e)) => failed(e),
    }
}

fn c7() -> Line {
    let a = run_scan(&config("highfreq_a1", &[]));
    let h = run_scan(&config("highfreq_hole", &[]));
    match (a, h) {
        (Ok(a), Ok(h)) => {
            let sa = a.summary.slope.unwrap_or(f64::NAN);
            let sh = h.summary.slope.unwrap_or(f64::NAN);
            let c = match &h.result {
                ScanResult::Points(p) => p.iter().map(|p| p.norm_est / p.z.norm().powf(HOLE_POWER)).fold(0.0, f64::max),
                _ => f64::NAN,
            };
            let ok = (sa - HIGHFREQ_SLOPE).abs() <= HIGHFREQ_TOL && sh <= HOLE_POWER && c.is_finite();
            line(ok, format!("a=1 slope {sa:.4}, hole slope {sh:.4} with C = {c:.3e} for tau^{HOLE_POWER}"))
        }
        (Err(e), _) | (_, Err(e)) => failed(e),
    }
}

fn c8() -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["intermediate_a1", "intermediate_long_range", "intermediate_hole"] {
        match run_scan(&config(name, &[])) {
            Ok(s) => {
                let ch = s.summary.max_truncation_change.unwrap_or(f64::NAN);
                ok &= s.summary.max_norm.is_finite() && s.summary.truncation_limited == 0 && ch <= TRUNCATION_CHANGE;
                parts.push(format!("{name} max {:.3e} change {ch:.2e}", s.summary.max_norm));
            }
            Err(e) => return failed(format!("{name}: {e}")),
        }
    }
    line(ok, parts.join(", "))
}

fn c9() -> Line {
    let cfg = config("lowfreq_theta", &[]);
    let pts: Vec<ThetaPoint> = match run_scan(&cfg) {
        Ok(s) => match s.result {
            ScanResult::Theta(t) => t,
            _ => return line(false, "not a theta scan"),
        },
        Err(e) => return failed(e),
    };
    let mut growth = [0.0f64; 4];
    let base = pts.iter().max_by(|a, b| a.z.norm().total_cmp(&b.z.norm())).expect("theta points");
    for p in &pts {
        for b in 0..4 {
            growth[b] = growth[b].max(p.norms[b] / base.norms[b]);
        }
    }
    let worst = identity_defect(&cfg, &pts);
    let ok = growth.iter().all(|&g| g.is_finite() && g <= THETA_GROWTH) && worst <= ROW_IDENTITY_TOL;
    line(ok, format!("block growth as mu decreases {:?}, heat row defect {worst:.1e}", growth.map(|g| (g * 1000.0).round() / 1000.0)))
}

/// `max |second row - z first row| / |z first row|` of the heat model resolvent.
fn identity_defect(cfg: &ExperimentConfig, pts: &[ThetaPoint]) -> f64 {
    let disc = match setup::discretization(cfg, 1.0) {
        Ok(d) => d,
        Err(_) => return f64::NAN,
    };
    let f: Vec<Complex64> = disc.grid.xs.iter().map(|&x| Complex64::new((-x * x / 8.0).exp(), 0.3 * x / (1.0 + x * x))).collect();
    let g: Vec<Complex64> = f.iter().map(|v| v.conj() * 0.5).collect();
    let mut worst = 0.0f64;
    for p in pts {
        let Ok(h) = HeatResolvent::new(&disc, p.z) else { return f64::NAN };
        let (first, second) = h.model_apply(&disc.damping, &f, &g);
        let num: f64 = first.iter().zip(&second).map(|(a, b)| (b - p.z * a).norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = first.iter().map(|a| (p.z * a).norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(num / den);
    }
    worst
}

fn c10() -> Line {
    match run_semiclassical(&config("semiclassical_hole", &[])) {
        Ok(s) => line(
            s.spread <= guidewave_cli::SEMICLASSICAL_SPREAD_MAX && s.control_growth >= guidewave_cli::CONTROL_GROWTH_MIN,
            format!("h ||R|| spread {:.3}, undamped control growth {:.2}", s.spread, s.control_growth),
        ),
        Err(e) => failed(e),
    }
}

fn c11() -> Line {
    match run_scan(&config("dirichlet_energy", &[])) {
        Ok(s) => {
            let c = s.summary.max_ratio_japanese2;
            line(s.summary.max_norm.is_finite() && c.is_finite(), format!("max norm {:.3e}, C = {c:.3} for <tau>^2", s.summary.max_norm))
        }
        Err(e) => failed(e),
    }
}

fn c12(runs: &[Golden]) -> Line {
    let fits = &golden(runs, "neumann_a1").out.fits;
    let (pw, ex) = (find(fits, "E_p0perp", Model::Power), find(fits, "E_p0perp", Model::Exponential));
    let kg = find(&golden(runs, "klein_gordon").out.fits, "E_total", Model::Exponential);
    match (pw, ex, kg) {
        (Some(pw), Some(ex), Some(kg)) => {
            let aic = ex.aic < pw.aic;
            let rate = kg.stderr < guidewave_cli::report::RATE_STDERR_FRACTION * kg.exponent.abs() && kg.verdict != Verdict::Fail;
            line(aic && rate, format!("P0perp AIC exponential {:.1} vs power {:.1}, Klein-Gordon rate {:.4} +- {:.1e}", ex.aic, pw.aic, kg.exponent, kg.stderr))
        }
        _ => line(false, "missing fit"),
    }
}

/// First-order real generator `d/dt (u, v) = (v, L u - shift u - a v)` of one mode.
fn generator(sys: &ModeSystem64, m: usize) -> DMatrix<f64> {
    let n = sys.disc.n();
    let mut a = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        a[(i, n + i)] = 1.0;
        for j in i.saturating_sub(2)..(i + 3).min(n) {
            a[(n + i, j)] = sys.disc.laplacian.get(i, j);
        }
        a[(n + i, i)] -= sys.shift(m);
        a[(n + i, n + i)] = -sys.disc.damping[i];
    }
    a
}

/// Single mode, `a = 1`, `N = 64` on `[-10, 10]`, run to `t = 1`.
fn expm_error(dt: f64) -> Result<f64, String> {
    let grid = Grid1D::<f64>::new(10.0, EXPM_N).map_err(|e| e.to_string())?;
    let a = Absorption::Profile(DampingProfile::Constant { value: 1.0 });
    let disc = Discretization::new(grid, StencilOrder::Fourth, &a).map_err(|e| e.to_string())?;
    let sys = ModeSystem64 { disc, lambdas: vec![0.0], mass2: 0.0, p0_mode: Some(0) };
    let xs = sys.disc.grid.xs.clone();
    let (n, k) = (xs.len(), sys.modes());
    let u = ModeField { nx: n, rows: (0..k).map(|_| shapes::gaussian(&xs, 0.0, 2.0, 1.0)).collect() };
    let v = ModeField { nx: n, rows: (0..k).map(|_| shapes::gaussian(&xs, 1.0, 2.0, 1.0)).collect() };
    let init = WaveState::new(u, v).map_err(|e| e.to_string())?;
    let spec = RunSpec { dt, t_end: 1.0, schedule: Schedule { t0: 1.0, ratio: 10.0 }, delta1: 0.0, local_radius: 1.0, keep_snapshots: true };
    let out = run(&sys, &init, &spec).map_err(|e| e.to_string())?;
    let last = out.snapshots.last().ok_or("no snapshot")?;
    let mut worst = 0.0f64;
    for m in 0..k {
        let y0 = DVector::from_iterator(2 * n, init.u.rows[m].iter().chain(&init.v.rows[m]).copied());
        let exact = (generator(&sys, m) * last.t).exp() * y0;
        let got = DVector::from_iterator(2 * n, last.u.rows[m].iter().chain(&last.v.rows[m]).copied());
        worst = worst.max((&got - &exact).norm() / exact.norm());
    }
    Ok(worst)
}

fn c13() -> Line {
    let (e, coarse) = match (expm_error(EXPM_DT), expm_error(10.0 * EXPM_DT)) {
        (Ok(e), Ok(c)) => (e, c),
        (Err(e), _) | (_, Err(e)) => return failed(e),
    };
    match run_scan(&config("validation_hole", &[])) {
        Ok(s) => {
            let d = &s.summary.dense_checks;
            let worst = d.iter().map(|c| c.relative_error).fold(0.0, f64::max);
            let ok = e <= EXPM_TOL && !d.is_empty() && worst <= guidewave_cli::DENSE_REL_TOL;
            line(ok, format!("stepper vs expm {e:.2e} at dt={EXPM_DT} ({coarse:.2e} at dt={}), power iteration vs dense SVD {worst:.2e} over {} points", 10.0 * EXPM_DT, d.len()))
        }
        Err(e) => failed(e),
    }
}

fn main() -> ExitCode {
    let runs = match golden_runs() {
        Ok(r) => r,
        Err(e) => {
            println!("golden runs failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    let lines = [c1(&runs), c2(&runs), c3(&runs), c4(&runs), c5(), c6(), c7(), c8(), c9(), c10(), c11(), c12(&runs), c13()];
    for (i, l) in lines.iter().enumerate() {
        println!("criterion {:>2}: {} {}", i + 1, if l.ok { "PASS" } else { "FAIL" }, l.detail);
    }
    let fails = lines.iter().filter(|l| !l.ok).count();
    println!("acceptance: {} of {} criteria pass", lines.len() - fails, lines.len());
    if fails == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
