//! One-dimensional heat flow `v_t = v_xx`, the large-time model of the
//! transverse mean of the damped wave.

use crate::discretize::{central_derivative, Grid1D};
use crate::error::{invalid, Error, Result};
use crate::evolve::{ModeSystem, WaveState};
use crate::linop::{lanczos_norm, DenseOp};
use crate::scalar::{japanese, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeatDerivative {
    None,
    Dx,
    Laplacian,
}

/// Heat kernel `(4 pi t)^{-1/2} exp(-x^2 / 4t)` or one of its derivatives.
pub fn kernel<T: Real>(t: T, x: T, d: HeatDerivative) -> T {
    let k = (T::lit(4.0) * T::PI() * t).sqrt().recip() * (-x * x / (T::lit(4.0) * t)).exp();
    match d {
        HeatDerivative::None => k,
        HeatDerivative::Dx => -x / (T::lit(2.0) * t) * k,
        HeatDerivative::Laplacian => (x * x / (T::lit(4.0) * t * t) - T::lit(0.5) / t) * k,
    }
}

/// `(d^beta e^{t Lap} w0)(x_i)` by trapezoidal quadrature against the kernel.
pub fn heat_apply<T: Real>(grid: &Grid1D<T>, w0: &[T], t: T, d: HeatDerivative) -> Result<Vec<T>> {
    if !(t > T::zero()) {
        return Err(invalid(format!("heat time must be positive, got {t}")));
    }
    if w0.len() != grid.n {
        return Err(Error::DimensionMismatch(format!("{} heat samples for {} nodes", w0.len(), grid.n)));
    }
    // exp(-r^2/4t) < 1e-300 beyond this distance
    let reach = T::lit(52.6) * t.sqrt();
    let span = (reach / grid.h).ceil().to_usize().unwrap_or(grid.n).min(grid.n);
    let n = grid.n;
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(span);
            let hi = (i + span).min(n - 1);
            (lo..=hi).map(|j| kernel(t, grid.xs[i] - grid.xs[j], d) * w0[j]).sum::<T>() * grid.h
        })
        .collect())
}

/// Heat flow started from the transverse mean `P0(a u0 + u1)`.
#[derive(Clone, Debug)]
pub struct HeatSolution<T> {
    pub grid: Grid1D<T>,
    /// Coefficient of the constant transverse mode of the initial data.
    pub w0: Vec<T>,
}

impl<T: Real> HeatSolution<T> {
    /// Heat data of a wave state; needs a constant transverse mode.
    pub fn from_wave(sys: &ModeSystem<T>, initial: &WaveState<T>) -> Result<Self> {
        let m = sys.p0_mode.ok_or(Error::ProjectionUndefined)?;
        let a = &sys.disc.damping;
        let w0 = initial.u.rows[m].iter().zip(&initial.v.rows[m]).zip(a).map(|((&u0, &u1), &a)| a * u0 + u1).collect();
        Ok(Self { grid: sys.disc.grid.clone(), w0 })
    }

    pub fn eval(&self, t: T, d: HeatDerivative) -> Result<Vec<T>> {
        heat_apply(&self.grid, &self.w0, t, d)
    }

    pub fn mass(&self) -> T {
        self.w0.iter().copied().sum::<T>() * self.grid.h
    }
}

/// Weighted distances between a damped wave and its heat model at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparisonRecord<T> {
    pub t: T,
    pub norm_grad_diff: T,
    pub norm_dt_diff: T,
    pub norm_grad_v: T,
    pub norm_dt_v: T,
}

impl<T: Real> ComparisonRecord<T> {
    pub fn ratio_grad(&self) -> T {
        self.norm_grad_diff / self.norm_grad_v
    }

    pub fn ratio_dt(&self) -> T {
        self.norm_dt_diff / self.norm_dt_v
    }
}

/// `||<x>^{-delta1}(grad u - grad v)||` and `||<x>^{-delta1}(u_t - Lap v)||`
/// along the snapshots, which must sit exactly at `times`.
pub fn compare<T: Real>(
    sys: &ModeSystem<T>,
    snapshots: &[WaveState<T>],
    times: &[T],
    heat: &HeatSolution<T>,
    delta1: T,
) -> Result<Vec<ComparisonRecord<T>>> {
    let m0 = sys.p0_mode.ok_or(Error::ProjectionUndefined)?;
    if snapshots.len() != times.len() || snapshots.iter().zip(times).any(|(s, &t)| (s.t - t).abs() > T::lit(1e-9) * t.max(T::one())) {
        return Err(invalid("snapshot times do not match the comparison schedule"));
    }
    let grid = &sys.disc.grid;
    let h = grid.h;
    let w: Vec<T> = grid.xs.iter().map(|&x| japanese(x).powf(-T::lit(2.0) * delta1)).collect();
    let wsum = |f: &[T]| f.iter().zip(&w).map(|(&a, &b)| a * a * b).sum::<T>() * h;
    let mut out = Vec::new();
    for s in snapshots {
        if !(s.t > T::zero()) {
            continue;
        }
        let vx = heat.eval(s.t, HeatDerivative::Dx)?;
        let vxx = heat.eval(s.t, HeatDerivative::Laplacian)?;
        let mut g = T::zero();
        let mut d = T::zero();
        for m in 0..sys.modes() {
            let ux = central_derivative(&s.u.rows[m], h, sys.disc.order);
            let ut = &s.v.rows[m];
            if m == m0 {
                let gd: Vec<T> = ux.iter().zip(&vx).map(|(&a, &b)| a - b).collect();
                let dd: Vec<T> = ut.iter().zip(&vxx).map(|(&a, &b)| a - b).collect();
                g += wsum(&gd);
                d += wsum(&dd);
            } else {
                g += wsum(&ux) + sys.lambdas[m] * wsum(&s.u.rows[m]);
                d += wsum(ut);
            }
        }
        out.push(ComparisonRecord { t: s.t, norm_grad_diff: g.sqrt(), norm_dt_diff: d.sqrt(), norm_grad_v: wsum(&vx).sqrt(), norm_dt_v: wsum(&vxx).sqrt() });
    }
    Ok(out)
}

/// Which weighted heat operator to measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HeatFlavor {
    /// `<x>^{-k s1 - s} d^beta e^{t Lap} <x>^{-k s2 - s}` with `beta` in {0, 1}.
    Derivative { beta: u8, s: f64 },
    /// `<x>^{-k s1} Lap e^{t Lap} <x>^{-k s2}`.
    Laplacian,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatNormQuery {
    pub t: f64,
    pub flavor: HeatFlavor,
    pub s1: f64,
    pub s2: f64,
    pub kappa: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatWindow {
    /// Half-width is at least `factor * sqrt(t)`.
    pub factor: f64,
    pub min_half_width: f64,
    pub points: usize,
}

impl Default for HeatWindow {
    fn default() -> Self {
        Self { factor: 10.0, min_half_width: 0.0, points: 2000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatNormEstimate {
    pub t: f64,
    pub norm: f64,
    pub half_width: f64,
    pub points: usize,
    pub leaked_mass: f64,
}

/// Complementary error function (rational Chebyshev fit, relative error < 1.2e-7).
pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07 + t * (-1.135_203_98 + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77))))))));
    let r = t * poly.exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// Leaked kernel mass above which a window is rejected.
pub const WINDOW_MASS_LIMIT: f64 = 1e-8;

/// Operator norm of a weighted heat propagator, from the dense windowed
/// kernel matrix.
pub fn heat_weighted_norm<T: Real>(q: &HeatNormQuery, win: &HeatWindow) -> Result<HeatNormEstimate> {
    let ok_s = |s: f64| (0.0..=0.5).contains(&s);
    if !(q.t > 0.0) || !ok_s(q.s1) || !ok_s(q.s2) || !(q.kappa > 1.0) {
        return Err(invalid(format!("heat norm needs t > 0, s1, s2 in [0, 1/2], kappa > 1: {q:?}")));
    }
    let (deriv, left, right) = match q.flavor {
        HeatFlavor::Derivative { beta, s } => {
            if beta > 1 || !(0.0..=beta as f64).contains(&s) {
                return Err(invalid(format!("need beta in {{0, 1}} and s in [0, beta], got beta={beta}, s={s}")));
            }
            let d = if beta == 0 { HeatDerivative::None } else { HeatDerivative::Dx };
            (d, q.kappa * q.s1 + s, q.kappa * q.s2 + s)
        }
        HeatFlavor::Laplacian => (HeatDerivative::Laplacian, q.kappa * q.s1, q.kappa * q.s2),
    };
    let xw = (win.factor * q.t.sqrt()).max(win.min_half_width);
    let leaked = erfc(xw / (2.0 * q.t.sqrt()));
    if leaked > WINDOW_MASS_LIMIT {
        return Err(Error::WindowTooSmall { mass: leaked, limit: WINDOW_MASS_LIMIT });
    }
    let n = win.points.max(16);
    let h = 2.0 * xw / (n - 1) as f64;
    let xs: Vec<T> = (0..n).map(|i| T::lit(-xw + i as f64 * h)).collect();
    let wl: Vec<T> = xs.iter().map(|&x| japanese(x).powf(-T::lit(left))).collect();
    let wr: Vec<T> = xs.iter().map(|&x| japanese(x).powf(-T::lit(right))).collect();
    let t = T::lit(q.t);
    let hh = T::lit(h);
    let mut data = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            data.push(wl[i] * kernel(t, xs[i] - xs[j], deriv) * wr[j] * hh);
        }
    }
    let op = DenseOp { rows: n, cols: n, data };
    let est = lanczos_norm(&op, 200, 1e-10, 7)?;
    Ok(HeatNormEstimate { t: q.t, norm: est.norm.as_f64(), half_width: xw, points: n, leaked_mass: leaked })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_closed_form() {
        let g = Grid1D::<f64>::new(60.0, 1199).unwrap();
        let w0: Vec<f64> = g.xs.iter().map(|x| (-x * x / 4.0).exp()).collect();
        for t in [0.5, 3.0] {
            let v = heat_apply(&g, &w0, t, HeatDerivative::None).unwrap();
            for (x, v) in g.xs.iter().zip(&v) {
                let exact = (1.0f64 + t).powf(-0.5) * (-x * x / (4.0 * (1.0 + t))).exp();
                assert!((v - exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn erfc_reference_values() {
        assert!((erfc(0.0) - 1.0).abs() < 1e-7);
        assert!((erfc(1.0) - 0.157_299_207_050_285_1).abs() < 1e-7);
        assert!((erfc(5.0) / 1.537_459_794_428_035e-12 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn small_window_is_rejected() {
        let q = HeatNormQuery { t: 4.0, flavor: HeatFlavor::Derivative { beta: 0, s: 0.0 }, s1: 0.0, s2: 0.0, kappa: 1.2 };
        let win = HeatWindow { factor: 4.0, min_half_width: 0.0, points: 100 };
        assert!(matches!(heat_weighted_norm::<f64>(&q, &win), Err(Error::WindowTooSmall { .. })));
    }
}
