//! Reproducible experiment runner for the `guidewave` library.
//!
//! A JSON [`config::ExperimentConfig`] describes one experiment; each
//! subcommand runs it and writes CSV series and JSON reports into a
//! directory named after the experiment id and the config hash.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod setup;

pub use config::ExperimentConfig;
pub use error::CliError;

/// Largest relative gap between an iterative norm and its dense check that
/// `--assert` accepts.
pub const DENSE_REL_TOL: f64 = 0.01;
/// Bound on `max h ||R_h|| / min h ||R_h||` for a damped semiclassical scan.
pub const SEMICLASSICAL_SPREAD_MAX: f64 = 2.0;
/// Growth of the undamped control that `--assert` requires.
pub const CONTROL_GROWTH_MIN: f64 = 4.0;

/// Caps the global thread pool from `GUIDEWAVE_THREADS`, if set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("GUIDEWAVE_THREADS") else { return Ok(()) };
    let n = parse_threads(&v)?;
    // A second initialization in the same process is harmless.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn parse_threads(v: &str) -> Result<usize, CliError> {
    v.trim().parse().ok().filter(|&n: &usize| n > 0).ok_or_else(|| CliError::Config(format!("GUIDEWAVE_THREADS: {v:?} is not a positive integer")))
}
