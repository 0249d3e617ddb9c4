//! Damped waves in a straight wave guide `R x (0, L)`.
//!
//! The damping `a = a(x)` depends on the longitudinal variable only, so the
//! problem splits over the transverse eigenmodes into independent problems
//! on the line. Each is truncated to a box `[-X, X]` with Dirichlet caps and
//! discretized by finite differences. On top of that sit the time stepper,
//! the heat-equation model of the transverse mean, resolvent norm scans and
//! decay-rate fits.
//!
//! Everything is generic over the real scalar ([`Real`]: `f32` or `f64`);
//! the `*64` aliases below fix double precision.

pub mod banded;
pub mod dense;
pub mod discretize;
pub mod error;
pub mod evolve;
pub mod fit;
pub mod heat;
pub mod linop;
pub mod resolvent;
pub mod scalar;
pub mod sine;
pub mod transverse;

pub use error::{Error, Result};
pub use scalar::{Field, Real};

pub type Grid64 = discretize::Grid1D<f64>;
pub type Discretization64 = discretize::Discretization<f64>;
pub type DampingProfile64 = discretize::DampingProfile<f64>;
pub type ModeSystem64 = evolve::ModeSystem<f64>;
pub type WaveState64 = evolve::WaveState<f64>;
pub type EnergyRecord64 = evolve::EnergyRecord<f64>;
pub type TransverseBasis64 = transverse::TransverseBasis<f64>;
pub type HeatSolution64 = heat::HeatSolution<f64>;
pub type Complex64 = num_complex::Complex<f64>;

pub type Grid32 = discretize::Grid1D<f32>;
pub type ModeSystem32 = evolve::ModeSystem<f32>;
pub type WaveState32 = evolve::WaveState<f32>;
