//! Resolvents of the mode operators and of the first-order wave generator.
//!
//! For transverse mode `k` the scalar resolvent is
//! `R_k(z) = (-L + lambda_k + m^2 - i z a - z^2)^{-1}`, and the generator
//! `A(u, w) = (w, (-L + lambda_k + m^2) u - i a w)` has
//! `(A - z)^{-1}(f, g) = (u, f + z u)` with `u = R_k(z)((i a + z) f + g)`.
//! All mode operators are complex symmetric, so `R^* y = conj(R conj(y))`.

use crate::banded::BandLu;
use crate::dense::dense_norm;
use crate::discretize::{Discretization, SpectralPower};
use crate::error::{invalid, Error, Result};
use crate::evolve::ModeSystem;
use crate::linop::{estimate_norm, LinearOp, NormEstimate, NormMethod, NormOptions};
use crate::scalar::{japanese, norm, Field, Real};
use num_complex::Complex;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

type C<T> = Complex<T>;

fn c<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

fn conj_vec<T: Real>(x: &[C<T>]) -> Vec<C<T>> {
    x.iter().map(|v| v.conj()).collect()
}

/// Relative residual accepted by [`rn_solve`] in double precision.
pub const RESIDUAL_TOL: f64 = 1e-10;

fn residual_tol<T: Real>() -> f64 {
    RESIDUAL_TOL * (T::epsilon().as_f64() / f64::EPSILON)
}

/// Factored mode operator at a fixed spectral parameter.
#[derive(Clone, Debug)]
pub struct ModeResolvent<T: Real> {
    pub z: C<T>,
    pub lambda: T,
    lu: BandLu<C<T>>,
}

impl<T: Real> ModeResolvent<T> {
    pub fn new(disc: &Discretization<T>, lambda: T, mass2: T, z: C<T>) -> Result<Self> {
        let op = disc.mode_operator(lambda, mass2, z);
        let lu = op.matrix.factor()?;
        Ok(Self { z, lambda, lu })
    }

    pub fn for_mode(sys: &ModeSystem<T>, m: usize, z: C<T>) -> Result<Self> {
        Self::new(&sys.disc, sys.lambdas[m], sys.mass2, z)
    }

    pub fn condition_estimate(&self) -> f64 {
        self.lu.condition_estimate()
    }

    pub fn solve(&self, rhs: &[C<T>]) -> Vec<C<T>> {
        self.lu.solve(rhs)
    }

    pub fn solve_adjoint(&self, rhs: &[C<T>]) -> Vec<C<T>> {
        conj_vec(&self.lu.solve(&conj_vec(rhs)))
    }
}

/// `R_k(z) rhs`, verified by recomputing the residual.
pub fn rn_solve<T: Real>(sys: &ModeSystem<T>, m: usize, z: C<T>, rhs: &[C<T>]) -> Result<Vec<C<T>>> {
    if m >= sys.modes() || rhs.len() != sys.disc.n() {
        return Err(Error::DimensionMismatch(format!("mode {m} / {} samples", rhs.len())));
    }
    let op = sys.disc.mode_operator(sys.lambdas[m], sys.mass2, z);
    let lu = op.matrix.factor()?;
    let x = lu.solve(rhs);
    let r: Vec<C<T>> = op.matrix.mul_vec(&x).iter().zip(rhs).map(|(a, b)| *a - *b).collect();
    let rel = (norm(&r) / norm(rhs).max(T::min_positive_value())).as_f64();
    if !(rel <= residual_tol::<T>()) {
        return Err(Error::Residual { residual: rel, tolerance: residual_tol::<T>(), condition: lu.condition_estimate() });
    }
    Ok(x)
}

/// `(A - z)^{-1}(f, g)` for one mode.
pub fn wave_resolvent_apply<T: Real>(res: &ModeResolvent<T>, damping: &[T], f: &[C<T>], g: &[C<T>]) -> (Vec<C<T>>, Vec<C<T>>) {
    let z = res.z;
    let i = c(T::zero(), T::one());
    let rhs: Vec<C<T>> = f.iter().zip(g).zip(damping).map(|((&f, &g), &a)| (i * a + z) * f + g).collect();
    let u = res.solve(&rhs);
    let w = f.iter().zip(&u).map(|(&f, &u)| f + z * u).collect();
    (u, w)
}

/// `(A - z)(u, w)` for one mode.
pub fn wave_operator_apply<T: Real>(sys: &ModeSystem<T>, m: usize, z: C<T>, u: &[C<T>], w: &[C<T>]) -> (Vec<C<T>>, Vec<C<T>>) {
    let i = c(T::zero(), T::one());
    let lap = sys.disc.laplacian.map(|v| c(v, T::zero()));
    let lu = lap.mul_vec(u);
    let shift = sys.lambdas[m] + sys.mass2;
    let f = w.iter().zip(u).map(|(&w, &u)| w - z * u).collect();
    let g = (0..u.len()).map(|j| -lu[j] + u[j] * shift - i * w[j] * sys.disc.damping[j] - z * w[j]).collect();
    (f, g)
}

/// `S^{beta1} R_k(z) S^{beta2}` with `S = (1 + lambda_k - L)^{1/2}`.
pub struct ScaledResolvent<'a, T: Real> {
    pub res: &'a ModeResolvent<T>,
    pub left: Option<SpectralPower<T>>,
    pub right: Option<SpectralPower<T>>,
}

impl<T: Real> LinearOp<C<T>> for ScaledResolvent<'_, T> {
    fn nrows(&self) -> usize {
        self.res.lu.dim()
    }
    fn ncols(&self) -> usize {
        self.res.lu.dim()
    }
    fn apply(&self, x: &[C<T>], y: &mut [C<T>]) {
        let mut t = x.to_vec();
        if let Some(p) = &self.right {
            p.apply(&mut t);
        }
        let mut t = self.res.solve(&t);
        if let Some(p) = &self.left {
            p.apply(&mut t);
        }
        y.copy_from_slice(&t);
    }
    fn apply_adjoint(&self, y: &[C<T>], x: &mut [C<T>]) {
        let mut t = y.to_vec();
        if let Some(p) = &self.left {
            p.apply(&mut t);
        }
        let mut t = self.res.solve_adjoint(&t);
        if let Some(p) = &self.right {
            p.apply(&mut t);
        }
        x.copy_from_slice(&t);
    }
}

fn sobolev<T: Real>(disc: &Discretization<T>, lambda: T, beta: u8) -> Option<SpectralPower<T>> {
    (beta != 0).then(|| SpectralPower::new(disc, T::one() + lambda, T::lit(0.5 * beta as f64)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PowerIteration,
    Lanczos,
    DenseSvd,
}

impl From<NormMethod> for Method {
    fn from(m: NormMethod) -> Self {
        match m {
            NormMethod::PowerIteration => Method::PowerIteration,
            NormMethod::Lanczos => Method::Lanczos,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointFlag {
    Ok,
    /// The norm moved by more than the guard tolerance when the box grew.
    TruncationLimited,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanPoint {
    pub z: C<f64>,
    pub beta1: u8,
    pub beta2: u8,
    pub norm_est: f64,
    pub method: Method,
    /// Relative change of the norm estimate at termination (0 for dense).
    pub residual: f64,
    /// Row of the mode attaining the maximum.
    pub mode: usize,
    pub flag: PointFlag,
    /// Relative change under box enlargement, NaN when not guarded.
    pub truncation_change: f64,
}

/// Which modes enter the maximum over the guide.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSelection {
    All,
    /// Modes with `lambda_k <= |z|^2 + margin`; higher modes are coercive.
    Window { margin: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanOptions {
    pub norm: NormOptions,
    /// Fraction of points re-estimated by dense SVD.
    pub validate_fraction: f64,
    /// Dense validation is skipped above this many nodes.
    pub validate_max_n: usize,
    pub modes: ModeSelection,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { norm: NormOptions::default(), validate_fraction: 0.1, validate_max_n: 1024, modes: ModeSelection::All }
    }
}

fn selected_modes<T: Real>(sys: &ModeSystem<T>, z: C<T>, sel: ModeSelection) -> Vec<usize> {
    let cap = match sel {
        ModeSelection::All => f64::INFINITY,
        ModeSelection::Window { margin } => z.norm_sqr().as_f64() + margin,
    };
    let mut v: Vec<usize> = (0..sys.modes()).filter(|&m| sys.lambdas[m].as_f64() <= cap).collect();
    if v.is_empty() {
        v.push(0);
    }
    v
}

/// Largest norm over the selected modes of an operator family.
fn maximize_over_modes<T, F>(modes: &[usize], f: F) -> Result<(usize, NormEstimate<T>)>
where
    T: Real,
    F: Fn(usize) -> Result<NormEstimate<T>> + Sync,
{
    let ests: Vec<(usize, NormEstimate<T>)> =
        modes.par_iter().map(|&m| f(m).map(|e| (m, e))).collect::<Result<_>>()?;
    Ok(ests.into_iter().fold(None, |best: Option<(usize, NormEstimate<T>)>, cur| match best {
        Some(b) if b.1.norm >= cur.1.norm => Some(b),
        _ => Some(cur),
    })
    .expect("at least one mode"))
}

/// `max_k ||R_k(z)||_{H^{-beta2} -> H^{beta1}}` for each `z`.
pub fn norm_scan<T: Real>(sys: &ModeSystem<T>, zs: &[C<T>], beta1: u8, beta2: u8, opts: &ScanOptions) -> Result<Vec<ScanPoint>> {
    if beta1 > 1 || beta2 > 1 {
        return Err(invalid("Sobolev indices must be 0 or 1"));
    }
    let mut out = Vec::with_capacity(zs.len());
    let mut argmax = Vec::with_capacity(zs.len());
    for &z in zs {
        let modes = selected_modes(sys, z, opts.modes);
        let (m, est) = maximize_over_modes(&modes, |m| {
            let res = ModeResolvent::for_mode(sys, m, z)?;
            let op = ScaledResolvent { res: &res, left: sobolev(&sys.disc, sys.lambdas[m], beta1), right: sobolev(&sys.disc, sys.lambdas[m], beta2) };
            estimate_norm(&op, &opts.norm)
        })?;
        argmax.push(m);
        out.push(ScanPoint {
            z: z.to_c64(),
            beta1,
            beta2,
            norm_est: est.norm.as_f64(),
            method: opts.norm.method.into(),
            residual: est.residual.as_f64(),
            mode: m,
            flag: PointFlag::Ok,
            truncation_change: f64::NAN,
        });
    }
    if opts.validate_fraction > 0.0 && sys.disc.n() <= opts.validate_max_n && !zs.is_empty() {
        let count = ((zs.len() as f64 * opts.validate_fraction).ceil() as usize).clamp(1, zs.len());
        let mut rng = ChaCha8Rng::seed_from_u64(opts.norm.seed ^ 0xd15c);
        let mut picks: Vec<usize> = sample(&mut rng, zs.len(), count).into_vec();
        picks.sort_unstable();
        for j in picks {
            let m = argmax[j];
            let res = ModeResolvent::for_mode(sys, m, zs[j])?;
            let op = ScaledResolvent { res: &res, left: sobolev(&sys.disc, sys.lambdas[m], beta1), right: sobolev(&sys.disc, sys.lambdas[m], beta2) };
            out.push(ScanPoint { norm_est: dense_norm(&op), method: Method::DenseSvd, residual: 0.0, ..out[j] });
        }
    }
    Ok(out)
}

/// Relative change allowed when the box grows by [`GUARD_FACTOR`].
pub const GUARD_TOL: f64 = 0.05;
pub const GUARD_FACTOR: f64 = 1.5;

/// Marks points whose norm changes by more than `tol` between `base` and
/// the same problem on an enlarged box.
pub fn guard_truncation(base: &mut [ScanPoint], enlarged: &[ScanPoint], tol: f64) {
    for p in base.iter_mut() {
        if let Some(q) = enlarged.iter().find(|q| q.z == p.z && q.method == p.method && q.beta1 == p.beta1 && q.beta2 == p.beta2) {
            let change = (q.norm_est - p.norm_est).abs() / p.norm_est.abs().max(f64::MIN_POSITIVE);
            p.truncation_change = change;
            if !(change <= tol) {
                p.flag = PointFlag::TruncationLimited;
            }
        }
    }
}

/// `diag(G, I) (A - z)^{-1} diag(G^{-1}, I)` with `G = (lambda_k + m^2 - L)^{1/2}`:
/// the generator resolvent in the energy norm `||G u||^2 + ||w||^2`.
pub struct EnergyResolvent<'a, T: Real> {
    res: &'a ModeResolvent<T>,
    damping: &'a [T],
    g: SpectralPower<T>,
    g_inv: SpectralPower<T>,
}

impl<'a, T: Real> EnergyResolvent<'a, T> {
    pub fn new(sys: &'a ModeSystem<T>, m: usize, res: &'a ModeResolvent<T>) -> Self {
        let st = sys.disc.sine_transform();
        let shift = sys.lambdas[m] + sys.mass2;
        Self {
            res,
            damping: &sys.disc.damping,
            g: SpectralPower::with_transform(st.clone(), &sys.disc.mu, shift, T::lit(0.5)),
            g_inv: SpectralPower::with_transform(st, &sys.disc.mu, shift, T::lit(-0.5)),
        }
    }

    fn n(&self) -> usize {
        self.damping.len()
    }
}

impl<T: Real> LinearOp<C<T>> for EnergyResolvent<'_, T> {
    fn nrows(&self) -> usize {
        2 * self.n()
    }
    fn ncols(&self) -> usize {
        2 * self.n()
    }
    fn apply(&self, x: &[C<T>], y: &mut [C<T>]) {
        let n = self.n();
        let mut f = x[..n].to_vec();
        self.g_inv.apply(&mut f);
        let (mut u, w) = wave_resolvent_apply(self.res, self.damping, &f, &x[n..]);
        self.g.apply(&mut u);
        y[..n].copy_from_slice(&u);
        y[n..].copy_from_slice(&w);
    }
    fn apply_adjoint(&self, y: &[C<T>], x: &mut [C<T>]) {
        let n = self.n();
        let z = self.res.z.conj();
        let i = c(T::zero(), T::one());
        let mut p = y[..n].to_vec();
        self.g.apply(&mut p);
        let q = &y[n..];
        let rhs: Vec<C<T>> = p.iter().zip(q).map(|(&p, &q)| p + z * q).collect();
        let r = self.res.solve_adjoint(&rhs);
        let mut first: Vec<C<T>> = (0..n).map(|j| (z - i * self.damping[j]) * r[j] + q[j]).collect();
        self.g_inv.apply(&mut first);
        x[..n].copy_from_slice(&first);
        x[n..].copy_from_slice(&r);
    }
}

/// `max_k ||(A_k - z)^{-1}||` in the energy norm.
pub fn energy_resolvent_norm<T: Real>(sys: &ModeSystem<T>, z: C<T>, opts: &ScanOptions) -> Result<ScanPoint> {
    let modes = selected_modes(sys, z, opts.modes);
    let (m, est) = maximize_over_modes(&modes, |m| {
        let res = ModeResolvent::for_mode(sys, m, z)?;
        estimate_norm(&EnergyResolvent::new(sys, m, &res), &opts.norm)
    })?;
    Ok(ScanPoint {
        z: z.to_c64(),
        beta1: 1,
        beta2: 1,
        norm_est: est.norm.as_f64(),
        method: opts.norm.method.into(),
        residual: est.residual.as_f64(),
        mode: m,
        flag: PointFlag::Ok,
        truncation_change: f64::NAN,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapPoint {
    pub tau: f64,
    pub gamma: f64,
    /// Largest energy-norm resolvent along `tau - i eta`, `0 <= eta <= gamma tau^-2`.
    pub max_norm: f64,
    pub bound: f64,
    pub failed_solves: usize,
    pub member: bool,
}

/// Probes the segment below `tau` down to the curve `Im z = -gamma tau^{-2}`:
/// membership holds when every solve succeeds and the norm stays below `c tau^2`.
pub fn spectral_gap_probe<T: Real>(sys: &ModeSystem<T>, taus: &[f64], gamma: f64, c_bound: f64, samples: usize, opts: &ScanOptions) -> Result<Vec<GapPoint>> {
    if samples < 2 || !(gamma > 0.0) {
        return Err(invalid("gap probe needs gamma > 0 and at least two samples"));
    }
    taus.iter()
        .map(|&tau| {
            if tau.abs() < 1.0 {
                return Err(invalid("gap probe is stated for |tau| >= 1"));
            }
            let depth = gamma / (tau * tau);
            let mut max_norm = 0.0f64;
            let mut failed = 0;
            for s in 0..samples {
                let eta = depth * s as f64 / (samples - 1) as f64;
                match energy_resolvent_norm(sys, c(T::lit(tau), T::lit(-eta)), opts) {
                    Ok(p) if p.norm_est.is_finite() => max_norm = max_norm.max(p.norm_est),
                    _ => failed += 1,
                }
            }
            let bound = c_bound * tau * tau;
            Ok(GapPoint { tau, gamma, max_norm, bound, failed_solves: failed, member: failed == 0 && max_norm <= bound })
        })
        .collect()
}

/// Heat resolvent `(-L - i z)^{-1}` of the transverse-mean mode.
#[derive(Clone, Debug)]
pub struct HeatResolvent<T: Real> {
    pub z: C<T>,
    lu: BandLu<C<T>>,
}

impl<T: Real> HeatResolvent<T> {
    pub fn new(disc: &Discretization<T>, z: C<T>) -> Result<Self> {
        let i = c(T::zero(), T::one());
        let mut m = disc.laplacian.map(|v| c(-v, T::zero()));
        m.add_diagonal(&vec![-i * z; disc.n()]);
        Ok(Self { z, lu: m.factor()? })
    }

    pub fn solve(&self, rhs: &[C<T>]) -> Vec<C<T>> {
        self.lu.solve(rhs)
    }

    pub fn solve_adjoint(&self, rhs: &[C<T>]) -> Vec<C<T>> {
        conj_vec(&self.lu.solve(&conj_vec(rhs)))
    }

    /// Both rows of the heat-model resolvent applied to the mean-mode data
    /// `(f, g)`: `(H(i a f + g), z H(i a f + g))`.
    pub fn model_apply(&self, damping: &[T], f: &[C<T>], g: &[C<T>]) -> (Vec<C<T>>, Vec<C<T>>) {
        let i = c(T::zero(), T::one());
        let rhs: Vec<C<T>> = f.iter().zip(g).zip(damping).map(|((&f, &g), &a)| i * a * f + g).collect();
        let first = self.solve(&rhs);
        let second = first.iter().map(|&v| self.z * v).collect();
        (first, second)
    }
}

/// Block `j` (1..=4) of `Theta(z) = (A - z)^{-1} - R_Heat(z)` on one mode,
/// weighted as `<x>^{-delta1} grad Theta_j <x>^{-delta2}` for `j <= 2` and
/// `<x>^{-delta1} Theta_j <x>^{-delta2}` otherwise.
pub struct ThetaBlock<'a, T: Real> {
    pub block: u8,
    res: &'a ModeResolvent<T>,
    heat: Option<&'a HeatResolvent<T>>,
    sys: &'a ModeSystem<T>,
    lambda_sqrt: T,
    w_nodes: Vec<T>,
    w_cells: Vec<T>,
    w_in: Vec<T>,
}

impl<'a, T: Real> ThetaBlock<'a, T> {
    pub fn new(sys: &'a ModeSystem<T>, m: usize, block: u8, res: &'a ModeResolvent<T>, heat: Option<&'a HeatResolvent<T>>, delta1: T, delta2: T) -> Result<Self> {
        if !(1..=4).contains(&block) {
            return Err(invalid("Theta blocks are numbered 1..=4"));
        }
        let heat = if sys.p0_mode == Some(m) { heat } else { None };
        let grid = &sys.disc.grid;
        let w = |x: T, d: T| japanese(x).powf(-d);
        Ok(Self {
            block,
            res,
            heat,
            sys,
            lambda_sqrt: sys.lambdas[m].sqrt(),
            w_nodes: grid.xs.iter().map(|&x| w(x, delta1)).collect(),
            w_cells: grid.edge_midpoints().iter().map(|&x| w(x, delta1)).collect(),
            w_in: grid.xs.iter().map(|&x| w(x, delta2)).collect(),
        })
    }

    fn n(&self) -> usize {
        self.w_in.len()
    }

    fn gradient_output(&self) -> bool {
        self.block <= 2
    }

    /// Unweighted `Theta_j x`.
    fn theta(&self, x: &[C<T>], adjoint: bool) -> Vec<C<T>> {
        let n = self.n();
        let i = c(T::zero(), T::one());
        let a = &self.sys.disc.damping;
        let z = if adjoint { self.res.z.conj() } else { self.res.z };
        let solve = |v: &[C<T>]| if adjoint { self.res.solve_adjoint(v) } else { self.res.solve(v) };
        let hsolve = |h: &HeatResolvent<T>, v: &[C<T>]| if adjoint { h.solve_adjoint(v) } else { h.solve(v) };
        // adjoint of multiplication by (i a + z) is (-i a + conj z), of i a is -i a
        let ia = |j: usize| if adjoint { -i * a[j] } else { i * a[j] };
        match (self.block, adjoint) {
            (1, false) | (3, false) => {
                let ru = solve(&(0..n).map(|j| (ia(j) + z) * x[j]).collect::<Vec<_>>());
                let hu = self.heat.map(|h| hsolve(h, &(0..n).map(|j| ia(j) * x[j]).collect::<Vec<_>>()));
                (0..n)
                    .map(|j| {
                        let hj = hu.as_ref().map_or(C::new(T::zero(), T::zero()), |h| h[j]);
                        if self.block == 1 {
                            ru[j] - hj
                        } else {
                            x[j] + z * (ru[j] - hj)
                        }
                    })
                    .collect()
            }
            (1, true) | (3, true) => {
                let y: Vec<C<T>> = if self.block == 1 { x.to_vec() } else { x.iter().map(|&v| z * v).collect() };
                let r = solve(&y);
                let hh = self.heat.map(|h| hsolve(h, &y));
                (0..n)
                    .map(|j| {
                        let hj = hh.as_ref().map_or(C::new(T::zero(), T::zero()), |h| h[j]);
                        let base = (ia(j) + z) * r[j] - ia(j) * hj;
                        if self.block == 1 {
                            base
                        } else {
                            x[j] + base
                        }
                    })
                    .collect()
            }
            (b, _) => {
                let r = solve(x);
                let hh = self.heat.map(|h| hsolve(h, x));
                let scale = if b == 4 { z } else { C::new(T::one(), T::zero()) };
                (0..n).map(|j| scale * (r[j] - hh.as_ref().map_or(C::new(T::zero(), T::zero()), |h| h[j]))).collect()
            }
        }
    }
}

impl<T: Real> LinearOp<C<T>> for ThetaBlock<'_, T> {
    fn nrows(&self) -> usize {
        if self.gradient_output() {
            2 * self.n() + 1
        } else {
            self.n()
        }
    }
    fn ncols(&self) -> usize {
        self.n()
    }
    fn apply(&self, x: &[C<T>], y: &mut [C<T>]) {
        let n = self.n();
        let xin: Vec<C<T>> = x.iter().zip(&self.w_in).map(|(&v, &w)| v * w).collect();
        let t = self.theta(&xin, false);
        if self.gradient_output() {
            let g = self.sys.disc.gradient.apply_complex(&t);
            for e in 0..=n {
                y[e] = g[e] * self.w_cells[e];
            }
            for j in 0..n {
                y[n + 1 + j] = t[j] * self.lambda_sqrt * self.w_nodes[j];
            }
        } else {
            for j in 0..n {
                y[j] = t[j] * self.w_nodes[j];
            }
        }
    }
    fn apply_adjoint(&self, y: &[C<T>], x: &mut [C<T>]) {
        let n = self.n();
        let pre: Vec<C<T>> = if self.gradient_output() {
            let cells: Vec<C<T>> = (0..=n).map(|e| y[e] * self.w_cells[e]).collect();
            let gt = self.sys.disc.gradient.apply_transpose_complex(&cells);
            (0..n).map(|j| gt[j] + y[n + 1 + j] * self.lambda_sqrt * self.w_nodes[j]).collect()
        } else {
            (0..n).map(|j| y[j] * self.w_nodes[j]).collect()
        };
        let t = self.theta(&pre, true);
        for j in 0..n {
            x[j] = t[j] * self.w_in[j];
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaPoint {
    pub z: C<f64>,
    /// Weighted norms of the four blocks.
    pub norms: [f64; 4],
}

/// Weighted norms of the four blocks of `Theta(z)`, maximized over modes.
pub fn theta_probe<T: Real>(sys: &ModeSystem<T>, zs: &[C<T>], delta1: T, delta2: T, opts: &ScanOptions) -> Result<Vec<ThetaPoint>> {
    if sys.p0_mode.is_none() {
        return Err(Error::ProjectionUndefined);
    }
    zs.iter()
        .map(|&z| {
            if !(z.im > T::zero()) {
                return Err(invalid("Theta is probed in the upper half-plane"));
            }
            let heat = HeatResolvent::new(&sys.disc, z)?;
            let mut norms = [0.0; 4];
            for (b, slot) in norms.iter_mut().enumerate() {
                let modes: Vec<usize> = (0..sys.modes()).collect();
                let (_, est) = maximize_over_modes(&modes, |m| {
                    let res = ModeResolvent::for_mode(sys, m, z)?;
                    let op = ThetaBlock::new(sys, m, b as u8 + 1, &res, Some(&heat), delta1, delta2)?;
                    estimate_norm(&op, &opts.norm)
                })?;
                *slot = est.norm.as_f64();
            }
            Ok(ThetaPoint { z: z.to_c64(), norms })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SemiclassicalPoint {
    pub h: f64,
    /// `||(-h^2 L - i h a - 1)^{-1}||`.
    pub norm: f64,
    /// `h` times the norm; bounded when the damping controls trapping.
    pub scaled: f64,
}

/// Semiclassical resolvent on the line, through
/// `-h^2 L - i h a - 1 = h^2 (-L - i tau a - tau^2)` with `tau = 1/h`.
pub fn semiclassical_scan<T: Real>(disc: &Discretization<T>, hs: &[f64], opts: &NormOptions) -> Result<Vec<SemiclassicalPoint>> {
    hs.iter()
        .map(|&h| {
            if !(h > 0.0) {
                return Err(invalid("semiclassical parameter must be positive"));
            }
            let res = ModeResolvent::new(disc, T::zero(), T::zero(), c(T::lit(1.0 / h), T::zero()))?;
            let op = ScaledResolvent { res: &res, left: None, right: None };
            let est = estimate_norm(&op, opts)?;
            let norm = est.norm.as_f64() / (h * h);
            Ok(SemiclassicalPoint { h, norm, scaled: h * norm })
        })
        .collect()
}

/// Undamped box Laplacian: `-h^2 L - E` at the box eigenvalue `E` nearest 1,
/// lifted by `i h^2` so the resolvent exists. Without damping nothing
/// prevents trapping, and `h` times the norm grows like `1/h`.
pub fn trapped_control<T: Real>(disc: &Discretization<T>, hs: &[f64], opts: &NormOptions) -> Result<Vec<SemiclassicalPoint>> {
    if disc.damping.iter().any(|&a| a != T::zero()) {
        return Err(invalid("the trapped control needs a = 0"));
    }
    hs.iter()
        .map(|&h| {
            let tau2 = 1.0 / (h * h);
            let mu = disc.mu.iter().map(|m| m.as_f64()).min_by(|a, b| (a - tau2).abs().total_cmp(&(b - tau2).abs())).unwrap_or(tau2);
            // -L - z^2 with z^2 = mu + i, so that h^2(-L - z^2) = -h^2 L - (h^2 mu + i h^2)
            let z = C::new(T::lit(mu), T::one()).sqrt();
            let res = ModeResolvent::new(disc, T::zero(), T::zero(), z)?;
            let est = estimate_norm(&ScaledResolvent { res: &res, left: None, right: None }, opts)?;
            let norm = est.norm.as_f64() / (h * h);
            Ok(SemiclassicalPoint { h, norm, scaled: h * norm })
        })
        .collect()
}
