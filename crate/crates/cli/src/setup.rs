//! Builds the numerical objects described by a config.

use crate::config::{DampingConfig, ExperimentConfig, Flavor, InitFamily, Shape, Slot, TimeConfig};
use crate::error::CliError;
use guidewave::discretize::{Absorption, Discretization, Grid1D};
use guidewave::evolve::{shapes, smooth, ModeSystem, RunSpec, Schedule, WaveState};
use guidewave::fit::{PredictionInput, Rational, Theorem};
use guidewave::linop::NormOptions;
use guidewave::resolvent::{ModeSelection, ScanOptions};
use guidewave::transverse::{eigenpair, BoundaryCondition, ModeField};
use guidewave::ModeSystem64;

/// Transverse eigenvalues, mass and mean-mode index of a flavor.
pub fn mode_layout(cfg: &ExperimentConfig) -> Result<(Vec<f64>, f64, Option<usize>), CliError> {
    let k = cfg.domain.modes;
    let l = cfg.domain.length;
    match cfg.flavor {
        Flavor::WaveNeumann | Flavor::WaveDirichlet => {
            if k == 0 {
                return Err(CliError::Config("domain.K: at least one mode is needed".into()));
            }
            let bc = if cfg.flavor == Flavor::WaveNeumann { BoundaryCondition::Neumann } else { BoundaryCondition::Dirichlet };
            let first = bc.first_mode();
            let lambdas = (first..first + k).map(|j| eigenpair(bc, l, j).map(|e| e.lambda)).collect::<Result<Vec<f64>, _>>()?;
            Ok((lambdas, 0.0, (bc == BoundaryCondition::Neumann).then_some(0)))
        }
        Flavor::WaveEuclidean => Ok((vec![0.0], 0.0, Some(0))),
        Flavor::KleinGordon { m } => {
            if !(m > 0.0) {
                return Err(CliError::Config(format!("flavor.m: mass must be positive, got {m}")));
            }
            Ok((vec![0.0], m * m, None))
        }
    }
}

pub fn discretization(cfg: &ExperimentConfig, box_factor: f64) -> Result<Discretization<f64>, CliError> {
    let g = &cfg.grid;
    let grid = Grid1D::new(g.half_width, g.n).map_err(|e| CliError::Config(format!("grid: {e}")))?;
    let grid = if box_factor == 1.0 { grid } else { grid.scaled(box_factor)? };
    let profile = cfg.damping.profile();
    profile.validate().map_err(|e| CliError::Config(format!("damping: {e}")))?;
    Ok(Discretization::new(grid, g.order, &Absorption::Profile(profile))?)
}

pub fn system(cfg: &ExperimentConfig, box_factor: f64) -> Result<ModeSystem64, CliError> {
    let (lambdas, mass2, p0_mode) = mode_layout(cfg)?;
    Ok(ModeSystem { disc: discretization(cfg, box_factor)?, lambdas, mass2, p0_mode })
}

fn shape(xs: &[f64], s: &Shape) -> Result<Vec<f64>, CliError> {
    Ok(match *s {
        Shape::Gaussian { center, width, amp } => {
            if !(width > 0.0) {
                return Err(CliError::Config(format!("init: Gaussian width must be positive, got {width}")));
            }
            shapes::gaussian(xs, center, width, amp)
        }
        Shape::PowerTail { q, taper_start, taper_end, amp } => {
            if !(taper_end > taper_start) {
                return Err(CliError::Config("init: power tail needs taper_end > taper_start".into()));
            }
            shapes::power_tail(xs, q, taper_start, taper_end, amp)
        }
    })
}

/// Initial state, smoothed as requested.
pub fn initial_state(cfg: &ExperimentConfig, sys: &ModeSystem64) -> Result<WaveState<f64>, CliError> {
    let init = cfg.init()?;
    let xs = &sys.disc.grid.xs;
    let n = xs.len();
    let k = sys.modes();
    let mut u = ModeField { nx: n, rows: vec![vec![0.0; n]; k] };
    let mut v = ModeField { nx: n, rows: vec![vec![0.0; n]; k] };
    let check = |m: usize| {
        if m >= k {
            Err(CliError::Config(format!("init: mode {m} is outside the {k} modes kept")))
        } else {
            Ok(())
        }
    };
    match &init.family {
        InitFamily::Gaussian { center, width, amp_u0, amp_u1, modes } => {
            for &m in modes {
                check(m)?;
                u.rows[m] = shape(xs, &Shape::Gaussian { center: *center, width: *width, amp: *amp_u0 })?;
                v.rows[m] = shape(xs, &Shape::Gaussian { center: *center, width: *width, amp: *amp_u1 })?;
            }
        }
        InitFamily::Modal { components } => {
            for c in components {
                check(c.mode)?;
                let add = shape(xs, &c.shape)?;
                let row = match c.field {
                    Slot::U0 => &mut u.rows[c.mode],
                    Slot::U1 => &mut v.rows[c.mode],
                };
                row.iter_mut().zip(add).for_each(|(r, a)| *r += a);
            }
        }
    }
    let mut state = WaveState::new(u, v)?;
    if let Some(s) = init.smoothing_k {
        smooth(sys, &mut state, s as usize)?;
    }
    Ok(state)
}

pub fn run_spec(t: &TimeConfig, delta1: f64, keep_snapshots: bool) -> RunSpec<f64> {
    RunSpec {
        dt: t.dt,
        t_end: t.t_end,
        schedule: Schedule { t0: t.t0, ratio: t.sample_ratio },
        delta1,
        local_radius: t.local_radius,
        keep_snapshots,
    }
}

pub fn scan_options(cfg: &ExperimentConfig) -> Result<ScanOptions, CliError> {
    let s = cfg.scan()?;
    Ok(ScanOptions {
        norm: NormOptions { method: s.norm.method, tol: s.norm.tol, max_iter: s.norm.max_iter, seed: cfg.seed },
        validate_fraction: s.validate_fraction,
        modes: s.mode_margin.map_or(ModeSelection::All, |margin| ModeSelection::Window { margin }),
        ..ScanOptions::default()
    })
}

/// Whether the configured data is compactly supported, up to Gaussian tails.
fn compact_data(cfg: &ExperimentConfig) -> bool {
    match cfg.init.as_ref().map(|i| &i.family) {
        Some(InitFamily::Gaussian { .. }) => true,
        Some(InitFamily::Modal { components }) => components.iter().all(|c| matches!(c.shape, Shape::Gaussian { .. })),
        None => false,
    }
}

/// Exponent predicted for one theorem under the config's weights.
pub fn predicted(cfg: &ExperimentConfig, thm: Theorem) -> Result<Rational, CliError> {
    let rho = match cfg.damping {
        DampingConfig::Constant { .. } => None,
        DampingConfig::LongRange { rho, .. } | DampingConfig::Hole { rho, .. } => Some(rho),
    };
    let smoothing = cfg.init.as_ref().and_then(|i| i.smoothing_k);
    let p = PredictionInput::from_weights(&cfg.weights, 1, rho, compact_data(cfg), smoothing)?;
    guidewave::fit::predict_exponent(thm, &p).map_err(|e| CliError::Config(format!("weights: {e}")))
}
