//! Mode-by-mode time integration of `u_tt - Lap u + m^2 u + a(x) u_t = 0`.
//!
//! Each transverse mode is advanced with the implicit midpoint rule, which
//! satisfies the discrete energy identity
//! `E^{n+1} - E^n = -2 dt h sum a |v^{n+1/2}|^2` exactly, so the scheme is a
//! contraction for any `dt > 0`.

use crate::banded::{BandLu, BandMatrix};
use crate::discretize::{central_derivative, Discretization};
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::transverse::ModeField;
use rayon::prelude::*;

/// Discretized guide (or line) problem: one longitudinal operator per mode.
#[derive(Clone, Debug)]
pub struct ModeSystem<T: Real> {
    pub disc: Discretization<T>,
    /// Transverse eigenvalues of the retained modes.
    pub lambdas: Vec<T>,
    /// Klein-Gordon mass squared (zero for the wave equation).
    pub mass2: T,
    /// Row holding the transverse constant mode, if the geometry has one.
    pub p0_mode: Option<usize>,
}

impl<T: Real> ModeSystem<T> {
    pub fn modes(&self) -> usize {
        self.lambdas.len()
    }

    pub fn shift(&self, m: usize) -> T {
        self.lambdas[m] + self.mass2
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveState<T> {
    pub t: T,
    pub u: ModeField<T>,
    /// Time derivative `u_t`.
    pub v: ModeField<T>,
}

impl<T: Real> WaveState<T> {
    pub fn new(u: ModeField<T>, v: ModeField<T>) -> Result<Self> {
        if u.modes() != v.modes() || u.nx != v.nx {
            return Err(Error::DimensionMismatch("u and u_t have different shapes".into()));
        }
        Ok(Self { t: T::zero(), u, v })
    }

    fn check(&self, sys: &ModeSystem<T>) -> Result<()> {
        if self.u.modes() != sys.modes() || self.u.nx != sys.disc.n() || self.v.nx != sys.disc.n() {
            return Err(Error::DimensionMismatch(format!(
                "state has {} modes on {} nodes, system has {} on {}",
                self.u.modes(),
                self.u.nx,
                sys.modes(),
                sys.disc.n()
            )));
        }
        Ok(())
    }
}

/// Replaces `(u, u_t)` by the real representative of `(A - i)^{-1}(u, i u_t)`,
/// `k` times. This puts the data in the domain of `A^k`.
pub fn smooth<T: Real>(sys: &ModeSystem<T>, state: &mut WaveState<T>, k: usize) -> Result<()> {
    state.check(sys)?;
    for m in 0..sys.modes() {
        let mut op = sys.disc.laplacian.map(|v| -v);
        let d: Vec<T> = sys.disc.damping.iter().map(|&a| sys.shift(m) + a + T::one()).collect();
        op.add_diagonal(&d);
        let lu = op.factor()?;
        for _ in 0..k {
            let (u0, u1) = (&state.u.rows[m], &state.v.rows[m]);
            let mut p: Vec<T> = u0.iter().zip(u1).zip(&sys.disc.damping).map(|((&a0, &a1), &a)| (a + T::one()) * a0 + a1).collect();
            lu.solve_in_place(&mut p);
            let v_new: Vec<T> = p.iter().zip(u0).map(|(&p, &u)| p - u).collect();
            state.u.rows[m] = p;
            state.v.rows[m] = v_new;
        }
    }
    Ok(())
}

/// Prefactored implicit-midpoint step for one mode.
#[derive(Clone, Debug)]
pub struct ModeStepper<T: Real> {
    lu: BandLu<T>,
    dt: T,
    shift: T,
}

/// Energy bookkeeping for one step of one mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepBalance<T> {
    pub energy_before: T,
    pub energy_after: T,
    pub dissipation: T,
}

impl<T: Real> StepBalance<T> {
    /// `E^{n+1} - E^n + D^n`, zero up to round-off.
    pub fn residual(&self) -> T {
        self.energy_after - self.energy_before + self.dissipation
    }
}

impl<T: Real> ModeStepper<T> {
    pub fn new(sys: &ModeSystem<T>, mode: usize, dt: T) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        let c = dt * dt / T::lit(4.0);
        let shift = sys.shift(mode);
        let mut s: BandMatrix<T> = sys.disc.laplacian.map(|v| -v * c);
        let d: Vec<T> = sys.disc.damping.iter().map(|&a| T::one() + dt * T::lit(0.5) * a + c * shift).collect();
        s.add_diagonal(&d);
        let lu = s.factor().map_err(|e| Error::StepSolve { mode, dt: dt.as_f64(), reason: e.to_string() })?;
        Ok(Self { lu, dt, shift })
    }

    fn energy(&self, disc: &Discretization<T>, u: &[T], lu_u: &[T], v: &[T]) -> T {
        let mut e = T::zero();
        for i in 0..u.len() {
            e += u[i] * (self.shift * u[i] - lu_u[i]) + v[i] * v[i];
        }
        e * disc.grid.h
    }

    /// Advances `(u, v)` by one step. `lu_u` must hold `L u` on entry and
    /// holds `L u` of the new state on exit.
    pub fn advance(&self, disc: &Discretization<T>, u: &mut [T], v: &mut [T], lu_u: &mut [T]) -> StepBalance<T> {
        let half = self.dt * T::lit(0.5);
        let before = self.energy(disc, u, lu_u, v);
        let mut vbar: Vec<T> = (0..u.len()).map(|i| v[i] + half * (lu_u[i] - self.shift * u[i])).collect();
        self.lu.solve_in_place(&mut vbar);
        let mut diss = T::zero();
        for i in 0..u.len() {
            u[i] += self.dt * vbar[i];
            v[i] = T::lit(2.0) * vbar[i] - v[i];
            diss += disc.damping[i] * vbar[i] * vbar[i];
        }
        disc.laplacian.matvec(u, lu_u);
        let after = self.energy(disc, u, lu_u, v);
        StepBalance { energy_before: before, energy_after: after, dissipation: T::lit(2.0) * self.dt * disc.grid.h * diss }
    }
}

/// Full-state stepper holding one factored system per mode.
#[derive(Clone, Debug)]
pub struct Stepper<T: Real> {
    pub dt: T,
    modes: Vec<ModeStepper<T>>,
}

impl<T: Real> Stepper<T> {
    pub fn new(sys: &ModeSystem<T>, dt: T) -> Result<Self> {
        let modes = (0..sys.modes()).map(|m| ModeStepper::new(sys, m, dt)).collect::<Result<_>>()?;
        Ok(Self { dt, modes })
    }

    /// One step of every mode; returns the summed energy balance.
    pub fn step(&self, sys: &ModeSystem<T>, state: &mut WaveState<T>) -> Result<StepBalance<T>> {
        state.check(sys)?;
        let mut total = StepBalance { energy_before: T::zero(), energy_after: T::zero(), dissipation: T::zero() };
        for (m, st) in self.modes.iter().enumerate() {
            let mut lu = sys.disc.laplacian.mul_vec(&state.u.rows[m]);
            let b = st.advance(&sys.disc, &mut state.u.rows[m], &mut state.v.rows[m], &mut lu);
            total.energy_before += b.energy_before;
            total.energy_after += b.energy_after;
            total.dissipation += b.dissipation;
        }
        state.t += self.dt;
        Ok(total)
    }
}

/// Energy diagnostics at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyRecord<T> {
    pub t: T,
    pub total: T,
    /// Energy in `|x| <= R`.
    pub local: T,
    /// `grad_w^2 + dtu_w^2`.
    pub weighted: T,
    /// `||<x>^{-delta1} grad u||`.
    pub grad_w: T,
    /// `||<x>^{-delta1} u_t||`.
    pub dtu_w: T,
    /// Energy of the transverse mean (NaN without a constant mode).
    pub p0: T,
    pub p0_perp: T,
    pub dissipation_cum: T,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct ModeSample<T> {
    total: T,
    local: T,
    grad_w2: T,
    dtu_w2: T,
    diss: T,
}

fn mode_sample<T: Real>(sys: &ModeSystem<T>, m: usize, u: &[T], v: &[T], delta1: T, radius: T, diss: T) -> ModeSample<T> {
    let disc = &sys.disc;
    let h = disc.grid.h;
    let shift = sys.shift(m);
    let gu = disc.gradient.apply(u);
    let mids = disc.grid.edge_midpoints();
    let mut grad2 = T::zero();
    let mut local = T::zero();
    for (g, x) in gu.iter().zip(&mids) {
        grad2 += *g * *g;
        if x.abs() <= radius {
            local += *g * *g;
        }
    }
    let du = central_derivative(u, h, disc.order);
    let mut rest = T::zero();
    let mut gw = T::zero();
    let mut vw = T::zero();
    for i in 0..u.len() {
        let x = disc.grid.xs[i];
        let pt = shift * u[i] * u[i] + v[i] * v[i];
        rest += pt;
        if x.abs() <= radius {
            local += pt;
        }
        let w = (T::one() + x * x).powf(-delta1);
        gw += w * (du[i] * du[i] + sys.lambdas[m] * u[i] * u[i]);
        vw += w * v[i] * v[i];
    }
    ModeSample { total: (grad2 + rest) * h, local: local * h, grad_w2: gw * h, dtu_w2: vw * h, diss }
}

fn combine<T: Real>(sys: &ModeSystem<T>, t: T, samples: &[ModeSample<T>]) -> EnergyRecord<T> {
    let mut r = EnergyRecord {
        t,
        total: T::zero(),
        local: T::zero(),
        weighted: T::zero(),
        grad_w: T::zero(),
        dtu_w: T::zero(),
        p0: T::zero(),
        p0_perp: T::zero(),
        dissipation_cum: T::zero(),
    };
    let mut g2 = T::zero();
    let mut v2 = T::zero();
    for (m, s) in samples.iter().enumerate() {
        r.total += s.total;
        r.local += s.local;
        g2 += s.grad_w2;
        v2 += s.dtu_w2;
        r.dissipation_cum += s.diss;
        if sys.p0_mode == Some(m) {
            r.p0 += s.total;
        } else {
            r.p0_perp += s.total;
        }
    }
    if sys.p0_mode.is_none() {
        r.p0 = T::nan();
        r.p0_perp = T::nan();
    }
    r.weighted = g2 + v2;
    r.grad_w = g2.sqrt();
    r.dtu_w = v2.sqrt();
    r
}

/// Energy diagnostics of a state.
pub fn energy<T: Real>(sys: &ModeSystem<T>, state: &WaveState<T>, delta1: T, radius: T) -> Result<EnergyRecord<T>> {
    state.check(sys)?;
    let samples: Vec<_> = (0..sys.modes())
        .map(|m| mode_sample(sys, m, &state.u.rows[m], &state.v.rows[m], delta1, radius, T::zero()))
        .collect();
    Ok(combine(sys, state.t, &samples))
}

/// Geometric sampling `t_j = t0 r^j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule<T> {
    pub t0: T,
    pub ratio: T,
}

impl<T: Real> Schedule<T> {
    /// Step indices sampled up to `steps`; always includes 0 and `steps`.
    pub fn step_indices(&self, dt: T, steps: usize) -> Result<Vec<usize>> {
        if !(self.t0 > T::zero()) || !(self.ratio > T::one()) {
            return Err(invalid("sampling needs t0 > 0 and ratio > 1"));
        }
        let mut out = vec![0usize];
        let mut t = self.t0;
        let t_end = dt * T::from_usize_lossy(steps);
        while t <= t_end {
            let n = (t / dt).round().to_usize().unwrap_or(steps).min(steps);
            if n > *out.last().unwrap() {
                out.push(n);
            }
            t = t * self.ratio;
        }
        if *out.last().unwrap() != steps {
            out.push(steps);
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSpec<T> {
    pub dt: T,
    pub t_end: T,
    pub schedule: Schedule<T>,
    /// Weight exponent of the decaying weight `<x>^{-delta1}`.
    pub delta1: T,
    /// Radius of the local energy.
    pub local_radius: T,
    pub keep_snapshots: bool,
}

/// Worst violations of the discrete energy identity over a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityReport<T> {
    pub initial_energy: T,
    pub steps: usize,
    /// `max_n |E^{n+1} - E^n + D^n|`.
    pub max_step_residual: T,
    /// `max_n |E^n - E^0 + sum_{j<n} D^j|`.
    pub max_drift: T,
}

#[derive(Clone, Debug)]
pub struct RunOutput<T> {
    pub records: Vec<EnergyRecord<T>>,
    pub snapshots: Vec<WaveState<T>>,
    pub identity: IdentityReport<T>,
}

struct ModeRun<T> {
    samples: Vec<ModeSample<T>>,
    u: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    residual: Vec<T>,
    drift: Vec<T>,
}

/// Integrates from `initial` to `t_end`, sampling on the schedule.
pub fn run<T: Real>(sys: &ModeSystem<T>, initial: &WaveState<T>, spec: &RunSpec<T>) -> Result<RunOutput<T>> {
    initial.check(sys)?;
    if !(spec.t_end > T::zero()) {
        return Err(invalid("t_end must be positive"));
    }
    let steps = (spec.t_end / spec.dt).round().to_usize().ok_or_else(|| invalid("step count overflow"))?.max(1);
    let idx = spec.schedule.step_indices(spec.dt, steps)?;
    let keep = spec.keep_snapshots;
    let runs: Vec<ModeRun<T>> = (0..sys.modes())
        .into_par_iter()
        .map(|m| -> Result<ModeRun<T>> {
            let st = ModeStepper::new(sys, m, spec.dt)?;
            let mut u = initial.u.rows[m].clone();
            let mut v = initial.v.rows[m].clone();
            let mut lu = sys.disc.laplacian.mul_vec(&u);
            let mut out = ModeRun { samples: Vec::new(), u: Vec::new(), v: Vec::new(), residual: Vec::with_capacity(steps), drift: Vec::with_capacity(steps) };
            let mut diss = T::zero();
            let mut e0 = None;
            let mut next = 0;
            for n in 0..=steps {
                if next < idx.len() && idx[next] == n {
                    out.samples.push(mode_sample(sys, m, &u, &v, spec.delta1, spec.local_radius, diss));
                    if keep {
                        out.u.push(u.clone());
                        out.v.push(v.clone());
                    }
                    next += 1;
                }
                if n == steps {
                    break;
                }
                let b = st.advance(&sys.disc, &mut u, &mut v, &mut lu);
                let e0 = *e0.get_or_insert(b.energy_before);
                diss += b.dissipation;
                out.residual.push(b.residual());
                out.drift.push(b.energy_after - e0 + diss);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let initial_energy = runs.iter().map(|r| r.samples[0].total).sum::<T>();
    let mut max_res = T::zero();
    let mut max_drift = T::zero();
    for n in 0..steps {
        let r: T = runs.iter().map(|r| r.residual[n]).sum();
        let d: T = runs.iter().map(|r| r.drift[n]).sum();
        max_res = max_res.max(r.abs());
        max_drift = max_drift.max(d.abs());
    }
    let mut records = Vec::with_capacity(idx.len());
    let mut snapshots = Vec::new();
    for (j, &n) in idx.iter().enumerate() {
        let t = spec.dt * T::from_usize_lossy(n);
        let samples: Vec<_> = runs.iter().map(|r| r.samples[j]).collect();
        records.push(combine(sys, t, &samples));
        if keep {
            let u = ModeField { nx: sys.disc.n(), rows: runs.iter().map(|r| r.u[j].clone()).collect() };
            let v = ModeField { nx: sys.disc.n(), rows: runs.iter().map(|r| r.v[j].clone()).collect() };
            snapshots.push(WaveState { t, u, v });
        }
    }
    Ok(RunOutput {
        records,
        snapshots,
        identity: IdentityReport { initial_energy, steps, max_step_residual: max_res, max_drift },
    })
}

/// Initial-data shapes.
pub mod shapes {
    use crate::scalar::{japanese, Real};

    /// `amp exp(-((x - center)/width)^2)`.
    pub fn gaussian<T: Real>(xs: &[T], center: T, width: T, amp: T) -> Vec<T> {
        xs.iter().map(|&x| amp * (-((x - center) / width).powi(2)).exp()).collect()
    }

    /// `amp <x>^{-q}` cut off by a `cos^2` taper between `taper_start` and `taper_end`.
    pub fn power_tail<T: Real>(xs: &[T], q: T, taper_start: T, taper_end: T, amp: T) -> Vec<T> {
        xs.iter()
            .map(|&x| {
                let r = x.abs();
                let taper = if r <= taper_start {
                    T::one()
                } else if r >= taper_end {
                    T::zero()
                } else {
                    let s = (r - taper_start) / (taper_end - taper_start);
                    (s * T::FRAC_PI_2()).cos().powi(2)
                };
                amp * japanese(x).powf(-q) * taper
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{Absorption, DampingProfile, Grid1D, StencilOrder};

    fn system(a: f64, modes: usize) -> ModeSystem<f64> {
        let g = Grid1D::new(20.0, 255).unwrap();
        let disc = Discretization::new(g, StencilOrder::Fourth, &Absorption::Profile(DampingProfile::Constant { value: a })).unwrap();
        ModeSystem { disc, lambdas: (0..modes).map(|k| (k * k) as f64).collect(), mass2: 0.0, p0_mode: Some(0) }
    }

    fn gaussian_state(sys: &ModeSystem<f64>) -> WaveState<f64> {
        let xs = &sys.disc.grid.xs;
        let rows: Vec<Vec<f64>> = (0..sys.modes()).map(|k| shapes::gaussian(xs, 0.5 * k as f64, 2.0, 1.0)).collect();
        let vrows: Vec<Vec<f64>> = (0..sys.modes()).map(|k| shapes::gaussian(xs, -1.0, 1.0 + k as f64, 0.5)).collect();
        WaveState::new(ModeField { nx: xs.len(), rows }, ModeField { nx: xs.len(), rows: vrows }).unwrap()
    }

    #[test]
    fn full_step_matches_mode_runs() {
        let sys = system(1.0, 3);
        let init = gaussian_state(&sys);
        let mut st = init.clone();
        let stepper = Stepper::new(&sys, 0.1).unwrap();
        for _ in 0..50 {
            let b = stepper.step(&sys, &mut st).unwrap();
            assert!(b.residual().abs() < 1e-12 * b.energy_before);
        }
        let spec = RunSpec { dt: 0.1, t_end: 5.0, schedule: Schedule { t0: 1.0, ratio: 2.0 }, delta1: 0.0, local_radius: 1e9, keep_snapshots: true };
        let out = run(&sys, &init, &spec).unwrap();
        let last = out.snapshots.last().unwrap();
        assert!((last.t - 5.0).abs() < 1e-12);
        assert_eq!(last.u, st.u);
        let e = energy(&sys, &st, 0.0, 1e9).unwrap();
        assert!((e.total - out.records.last().unwrap().total).abs() < 1e-14);
        assert!((e.local - e.total).abs() < 1e-12 * e.total);
    }

    #[test]
    fn smoothing_satisfies_the_resolvent_equation() {
        let sys = system(1.0, 2);
        let init = gaussian_state(&sys);
        let mut s = init.clone();
        smooth(&sys, &mut s, 1).unwrap();
        // (-L + lambda + a + 1) p = (a + 1) u0 + u1 and u_t = p - u0, with a = 1
        for m in 0..2 {
            let p = &s.u.rows[m];
            let lp = sys.disc.laplacian.mul_vec(p);
            for i in 0..p.len() {
                let lhs = -lp[i] + sys.lambdas[m] * p[i] + 2.0 * p[i];
                let rhs = 2.0 * init.u.rows[m][i] + init.v.rows[m][i];
                assert!((lhs - rhs).abs() < 1e-10);
                assert!((s.v.rows[m][i] - (p[i] - init.u.rows[m][i])).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn schedule_is_geometric_and_closed() {
        let s = Schedule { t0: 1.0, ratio: 2.0 };
        assert_eq!(s.step_indices(0.5, 20).unwrap(), vec![0, 2, 4, 8, 16, 20]);
    }
}
