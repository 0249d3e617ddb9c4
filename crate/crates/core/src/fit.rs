//! Decay-rate fits and the exponents predicted by the decay theorems.

use crate::discretize::WeightSpec;
use crate::error::{invalid, Error, Result};
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Minimum number of samples in a fit window.
pub const MIN_SAMPLES: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// `y ~ C t^p`
    Power,
    /// `y ~ C e^{r t}`
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub model: Model,
    /// Power `p` or rate `r`.
    pub exponent: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub samples: usize,
    /// Quadratic coefficient of a second least-squares fit; reported only.
    pub curvature: f64,
    /// Residual sum of squares of `log y`.
    pub rss: f64,
}

impl DecayFit {
    /// Akaike information criterion of the two-parameter fit of `log y`.
    pub fn aic(&self) -> f64 {
        let n = self.samples as f64;
        n * (self.rss.max(f64::MIN_POSITIVE) / n).ln() + 4.0
    }
}

fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    let stderr = if x.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    (slope, icpt, stderr, rss)
}

/// Quadratic coefficient of the least-squares parabola through `(x, y)`.
fn quadratic_coefficient(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let xs: Vec<f64> = x.iter().map(|a| a - mx).collect();
    let s = |p: i32| xs.iter().map(|a| a.powi(p)).sum::<f64>();
    let t = |p: i32| xs.iter().zip(y).map(|(a, b)| a.powi(p) * b).sum::<f64>();
    let m = nalgebra::Matrix3::new(n, s(1), s(2), s(1), s(2), s(3), s(2), s(3), s(4));
    let r = nalgebra::Vector3::new(t(0), t(1), t(2));
    m.lu().solve(&r).map_or(f64::NAN, |c| c[2])
}

fn windowed(ts: &[f64], ys: &[f64], window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    if ts.len() != ys.len() {
        return Err(Error::DimensionMismatch("time and value series differ in length".into()));
    }
    if window.0 < 1.0 || window.1 <= window.0 {
        return Err(invalid(format!("fit window must satisfy 1 <= t_min < t_max, got {window:?}")));
    }
    let mut t = Vec::new();
    let mut y = Vec::new();
    for (&a, &b) in ts.iter().zip(ys) {
        if a >= window.0 && a <= window.1 {
            if !(b > 0.0) {
                return Err(Error::NonPositive { t: a, value: b });
            }
            t.push(a);
            y.push(b.ln());
        }
    }
    if t.len() < MIN_SAMPLES {
        return Err(Error::FitWindow { lo: window.0, hi: window.1, points: t.len(), required: MIN_SAMPLES });
    }
    Ok((t, y))
}

/// Least squares on `(log t, log y)` over the window.
pub fn fit_power(ts: &[f64], ys: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (t, y) = windowed(ts, ys, window)?;
    let lt: Vec<f64> = t.iter().map(|a| a.ln()).collect();
    let (slope, icpt, stderr, rss) = line_fit(&lt, &y);
    Ok(DecayFit { model: Model::Power, exponent: slope, stderr, intercept: icpt, window, samples: t.len(), curvature: quadratic_coefficient(&lt, &y), rss })
}

/// Least squares on `(t, log y)` over the window.
pub fn fit_exponential(ts: &[f64], ys: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (t, y) = windowed(ts, ys, window)?;
    let (slope, icpt, stderr, rss) = line_fit(&t, &y);
    Ok(DecayFit { model: Model::Exponential, exponent: slope, stderr, intercept: icpt, window, samples: t.len(), curvature: quadratic_coefficient(&t, &y), rss })
}

/// Slope and its standard error of `log y` against `log x`, for short
/// scans where the decay-fit window rules do not apply.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid("a slope needs at least two paired points"));
    }
    if let Some((&x, &y)) = xs.iter().zip(ys).find(|(&x, &y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::NonPositive { t: x, value: y });
    }
    let lx: Vec<f64> = xs.iter().map(|a| a.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|a| a.ln()).collect();
    let (slope, _, stderr, _) = line_fit(&lx, &ly);
    Ok((slope, stderr))
}

pub type Rational = Ratio<i64>;

/// Rational approximation with a bounded denominator.
pub fn rational(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(invalid(format!("{x} has no rational approximation")));
    }
    let den = 10_000i64;
    Ok(Ratio::new((x * den as f64).round() as i64, den))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// Weighted decay of `grad u`.
    EnergyGrad,
    /// Weighted decay of `u_t`.
    EnergyDt,
    /// `grad u - grad v` against the heat model.
    DiffGrad,
    /// `u_t - v_t` against the heat model.
    DiffDt,
    /// Dirichlet guide: `t^{-k/2}` for data in the domain of `A^k`.
    DirichletHighFreq,
}

/// Exponents and data entering a prediction, in exact arithmetic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PredictionInput {
    pub s1: Rational,
    pub s2: Rational,
    pub s: Rational,
    pub s_tilde: Rational,
    pub kappa: Rational,
    pub delta1: Rational,
    /// `None` for compactly supported data (any `delta2` works).
    pub delta2: Option<Rational>,
    /// `None` when the damping is constant outside a compact set.
    pub rho: Option<Rational>,
    /// Space dimension of the longitudinal variable.
    pub dim: i64,
    /// Number of smoothing steps `k`; adds the `t^{-k/2}` high-frequency track.
    pub smoothing: Option<u32>,
}

impl PredictionInput {
    pub fn zero(dim: i64) -> Self {
        let z = Rational::zero();
        Self { s1: z, s2: z, s: z, s_tilde: z, kappa: Ratio::new(6, 5), delta1: z, delta2: None, rho: None, dim, smoothing: None }
    }
}

impl PredictionInput {
    /// Exact exponents from a set of weights. `compact` drops the
    /// constraint on `delta2`.
    pub fn from_weights(w: &WeightSpec, dim: i64, rho: Option<f64>, compact: bool, smoothing: Option<u32>) -> Result<Self> {
        Ok(Self {
            s1: rational(w.s1)?,
            s2: rational(w.s2)?,
            s: rational(w.s)?,
            s_tilde: rational(w.s_tilde)?,
            kappa: rational(w.kappa)?,
            delta1: rational(w.delta1)?,
            delta2: if compact { None } else { Some(rational(w.delta2)?) },
            rho: rho.map(rational).transpose()?,
            dim,
            smoothing,
        })
    }
}

fn min_opt(a: Rational, b: Option<Rational>) -> Rational {
    b.map_or(a, |b| a.min(b))
}

/// Predicted decay exponent, after checking the hypotheses of the theorem.
pub fn predict_exponent(thm: Theorem, p: &PredictionInput) -> Result<Rational> {
    let one = Rational::from_integer(1);
    let two = Rational::from_integer(2);
    let zero = Rational::zero();
    let d = Rational::from_integer(p.dim);
    let half_d = d / two;
    let mut bad = Vec::new();
    if thm == Theorem::DirichletHighFreq {
        let k = p.smoothing.ok_or_else(|| invalid("the Dirichlet rate needs the smoothing order k"))?;
        if k == 0 {
            return Err(Error::Hypothesis(vec!["k >= 1".into()]));
        }
        return Ok(Rational::new(-(k as i64), 2));
    }
    for (name, v) in [("s1", p.s1), ("s2", p.s2)] {
        if v < zero || v > half_d {
            bad.push(format!("{name} in [0, d/2]"));
        }
    }
    if p.kappa <= one {
        bad.push("kappa > 1".into());
    }
    let (low, w1, w2) = match thm {
        Theorem::EnergyGrad | Theorem::EnergyDt => {
            if p.s > one {
                bad.push("s <= 1".into());
            }
            if p.s < zero || p.s >= min_opt(d, p.rho) {
                bad.push("s < min(d, rho)".into());
            }
            let low = if thm == Theorem::EnergyGrad { -(one + p.s1 + p.s2 + p.s) / two } else { -(two + p.s1 + p.s2) / two };
            (low, p.kappa * p.s1 + p.s, p.kappa * p.s2 + p.s)
        }
        Theorem::DiffGrad | Theorem::DiffDt => {
            if p.s_tilde < zero || p.s_tilde >= min_opt(two.min(d), p.rho) {
                bad.push("s~ < min(2, d, rho)".into());
            }
            let base = if thm == Theorem::DiffGrad { one } else { two };
            (-(base + p.s1 + p.s2 + p.s_tilde) / two, p.kappa * p.s1, p.kappa * p.s2)
        }
        Theorem::DirichletHighFreq => unreachable!(),
    };
    if p.delta1 < w1 {
        bad.push(format!("delta1 >= {w1}"));
    }
    if p.delta2.is_some_and(|d2| d2 < w2) {
        bad.push(format!("delta2 >= {w2}"));
    }
    if !bad.is_empty() {
        return Err(Error::Hypothesis(bad));
    }
    Ok(match p.smoothing {
        Some(k) if k > 0 => low.max(Rational::new(-(k as i64), 2)),
        _ => low,
    })
}

pub fn to_f64(r: Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Informative,
}

/// One-sided check `exponent <= predicted + tol`, two-sided when `sharp`.
pub fn verdict(fit: &DecayFit, predicted: f64, tol: f64, sharp: bool) -> Verdict {
    let upper = fit.exponent <= predicted + tol;
    let close = (fit.exponent - predicted).abs() <= tol;
    if upper && (!sharp || close) {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}
