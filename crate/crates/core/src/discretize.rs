//! Longitudinal discretization on the truncated box `[-X, X]`.
//!
//! Unknowns live on the `N` interior nodes `x_i = -X + (i+1) h`, `h = 2X/(N+1)`,
//! with homogeneous Dirichlet caps at `x = +-X`. The fourth-order stencil is
//! closed by odd reflection about each cap, so both stencils are symmetric,
//! negative definite, and diagonalized by the type-I sine transform.

use crate::banded::BandMatrix;
use crate::error::{invalid, Error, Result};
use crate::scalar::{japanese, Real};
use crate::sine::SineTransform;
use crate::transverse::GuideField;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq)]
pub struct Grid1D<T> {
    pub half_width: T,
    pub n: usize,
    pub h: T,
    pub xs: Vec<T>,
}

impl<T: Real> Grid1D<T> {
    pub fn new(half_width: T, n: usize) -> Result<Self> {
        if !(half_width > T::zero()) || n < 8 {
            return Err(invalid(format!("grid needs X > 0 and N >= 8, got X={half_width}, N={n}")));
        }
        let h = T::lit(2.0) * half_width / T::from_usize_lossy(n + 1);
        let xs = (0..n).map(|i| -half_width + T::from_usize_lossy(i + 1) * h).collect();
        Ok(Self { half_width, n, h, xs })
    }

    /// Same spacing on a box scaled by `factor`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        let x = self.half_width * factor;
        let n = (T::lit(2.0) * x / self.h).round().to_usize().unwrap_or(self.n).max(self.n + 1) - 1;
        Self::new(x, n)
    }

    /// Midpoints of the `N+1` cells between consecutive nodes (caps included).
    pub fn edge_midpoints(&self) -> Vec<T> {
        (0..=self.n).map(|e| -self.half_width + (T::from_usize_lossy(e) + T::lit(0.5)) * self.h).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StencilOrder {
    Second,
    #[default]
    Fourth,
}

impl StencilOrder {
    /// Half-bandwidth of the Laplacian stencil.
    pub fn reach(self) -> usize {
        match self {
            Self::Second => 1,
            Self::Fourth => 2,
        }
    }
}

/// Damping profiles `a(x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DampingProfile<T> {
    Constant { value: T },
    /// `1 - (1 - floor) <x>^{-rho}`: tends to 1 with long-range decay rate `rho`.
    LongRange { rho: T, floor: T },
    /// Undamped interval `|x| <= radius`, smoothstep ramp of the given width,
    /// then the long-range profile.
    Hole { radius: T, width: T, rho: T, floor: T },
}

fn smoothstep<T: Real>(s: T) -> (T, T) {
    let s = s.max(T::zero()).min(T::one());
    (s * s * (T::lit(3.0) - T::lit(2.0) * s), T::lit(6.0) * s * (T::one() - s))
}

impl<T: Real> DampingProfile<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Constant { value } => value >= T::zero() && value.is_finite(),
            Self::LongRange { rho, floor } => rho > T::zero() && floor >= T::zero() && floor <= T::one(),
            Self::Hole { radius, width, rho, floor } => {
                radius >= T::zero() && width > T::zero() && rho > T::zero() && floor >= T::zero() && floor <= T::one()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid damping profile {self:?}")))
        }
    }

    /// `(a(x), a'(x))`.
    pub fn eval_with_derivative(&self, x: T) -> (T, T) {
        match *self {
            Self::Constant { value } => (value, T::zero()),
            Self::LongRange { rho, floor } => long_range(x, rho, floor),
            Self::Hole { radius, width, rho, floor } => {
                let (e, de) = long_range(x, rho, floor);
                let (r, dr) = smoothstep((x.abs() - radius) / width);
                let dr = dr / width * x.signum();
                (r * e, dr * e + r * de)
            }
        }
    }

    pub fn eval(&self, x: T) -> T {
        self.eval_with_derivative(x).0
    }

    pub fn samples(&self, grid: &Grid1D<T>) -> Vec<T> {
        grid.xs.iter().map(|&x| self.eval(x)).collect()
    }

    /// Limit at infinity.
    pub fn far_field(&self) -> T {
        match *self {
            Self::Constant { value } => value,
            _ => T::one(),
        }
    }

    /// Long-range decay rate; `None` when `a` is constant outside a compact set.
    pub fn rho(&self) -> Option<T> {
        match *self {
            Self::Constant { .. } => None,
            Self::LongRange { rho, .. } | Self::Hole { rho, .. } => Some(rho),
        }
    }

    /// Empirical `(C0, C1)` in `|a - a_inf| <= C0 <x>^{-rho}`,
    /// `|a'| <= C1 <x>^{-rho-1}`, measured on the grid.
    pub fn decay_constants(&self, grid: &Grid1D<T>) -> (T, T) {
        let Some(rho) = self.rho() else { return (T::zero(), T::zero()) };
        let ainf = self.far_field();
        grid.xs.iter().fold((T::zero(), T::zero()), |(c0, c1), &x| {
            let (a, da) = self.eval_with_derivative(x);
            let w = japanese(x);
            (c0.max((a - ainf).abs() * w.powf(rho)), c1.max(da.abs() * w.powf(rho + T::one())))
        })
    }

    /// Minimum of `a` over the outer quarter of the box.
    pub fn outer_layer_minimum(&self, grid: &Grid1D<T>) -> T {
        let cut = grid.half_width * T::lit(0.75);
        grid.xs.iter().filter(|x| x.abs() >= cut).map(|&x| self.eval(x)).fold(T::infinity(), T::min)
    }
}

fn long_range<T: Real>(x: T, rho: T, floor: T) -> (T, T) {
    let w2 = T::one() + x * x;
    let p = w2.powf(-rho * T::lit(0.5));
    let amp = T::one() - floor;
    (T::one() - amp * p, amp * rho * x * p / w2)
}

/// Damping as seen by the mode decomposition.
#[derive(Clone, Debug, PartialEq)]
pub enum Absorption<T> {
    Profile(DampingProfile<T>),
    /// Samples on the longitudinal grid.
    Sampled(Vec<T>),
    /// Samples on the full `x-y` grid; accepted only if independent of `y`.
    Guide(GuideField<T>),
}

impl<T: Real> Absorption<T> {
    /// Longitudinal samples, rejecting transverse dependence.
    pub fn x_samples(&self, grid: &Grid1D<T>) -> Result<Vec<T>> {
        match self {
            Self::Profile(p) => {
                p.validate()?;
                Ok(p.samples(grid))
            }
            Self::Sampled(v) if v.len() == grid.n => Ok(v.clone()),
            Self::Sampled(v) => Err(Error::DimensionMismatch(format!("{} damping samples for {} nodes", v.len(), grid.n))),
            Self::Guide(f) => {
                if f.nx != grid.n {
                    return Err(Error::DimensionMismatch(format!("{} damping rows for {} nodes", f.nx, grid.n)));
                }
                let mut dev = T::zero();
                let mut scale = T::zero();
                let mut out = Vec::with_capacity(f.nx);
                for i in 0..f.nx {
                    let row = &f.data[i * f.ny..(i + 1) * f.ny];
                    let first = row[0];
                    for &v in row {
                        dev = dev.max((v - first).abs());
                        scale = scale.max(v.abs());
                    }
                    out.push(first);
                }
                if dev > T::lit(1e-12) * scale.max(T::one()) {
                    return Err(Error::TransverseDamping { deviation: dev.as_f64() });
                }
                Ok(out)
            }
        }
    }
}

/// Weight exponents of the decay estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub delta1: f64,
    pub delta2: f64,
    pub s1: f64,
    pub s2: f64,
    pub s: f64,
    /// Extra decay of the wave-heat difference.
    pub s_tilde: f64,
    pub kappa: f64,
}

/// Extended sample with the cap closure: zero at the caps, odd reflection beyond.
fn ext<T: Real>(u: &[T], i: isize) -> T {
    let n = u.len() as isize;
    match i {
        i if i >= 0 && i < n => u[i as usize],
        -1 => T::zero(),
        i if i == n => T::zero(),
        i if i < -1 => -u[(-2 - i) as usize],
        i => -u[(2 * n - i) as usize],
    }
}

/// Discrete `d^2/dx^2` with cap closure.
pub fn laplacian_1d<T: Real>(grid: &Grid1D<T>, order: StencilOrder) -> BandMatrix<T> {
    let n = grid.n;
    let r = order.reach();
    let mut m = BandMatrix::zeros(n, r, r);
    let ih2 = T::one() / (grid.h * grid.h);
    match order {
        StencilOrder::Second => {
            for i in 0..n {
                m.set(i, i, -T::lit(2.0) * ih2);
                if i + 1 < n {
                    m.set(i, i + 1, ih2);
                    m.set(i + 1, i, ih2);
                }
            }
        }
        StencilOrder::Fourth => {
            let c = ih2 / T::lit(12.0);
            for i in 0..n {
                m.set(i, i, -T::lit(30.0) * c);
                if i + 1 < n {
                    m.set(i, i + 1, T::lit(16.0) * c);
                    m.set(i + 1, i, T::lit(16.0) * c);
                }
                if i + 2 < n {
                    m.set(i, i + 2, -c);
                    m.set(i + 2, i, -c);
                }
            }
            // reflected neighbour u_{-2} = -u_0 folds into the first and last diagonal entries
            m.set(0, 0, -T::lit(29.0) * c);
            m.set(n - 1, n - 1, -T::lit(29.0) * c);
        }
    }
    m
}

/// Eigenvalues `mu_j > 0` of `-L`, aligned with the sine-transform output.
pub fn laplacian_eigenvalues<T: Real>(grid: &Grid1D<T>, order: StencilOrder) -> Vec<T> {
    let n = grid.n;
    let ih2 = T::one() / (grid.h * grid.h);
    (1..=n)
        .map(|j| {
            let s = (T::from_usize_lossy(j) * T::PI() / T::from_usize_lossy(2 * (n + 1))).sin();
            let s2 = s * s;
            match order {
                StencilOrder::Second => T::lit(4.0) * ih2 * s2,
                StencilOrder::Fourth => T::lit(4.0) * ih2 * s2 * (T::one() + s2 / T::lit(3.0)),
            }
        })
        .collect()
}

/// Central first derivative of matching order, with cap closure.
pub fn central_derivative<T: Real>(u: &[T], h: T, order: StencilOrder) -> Vec<T> {
    let n = u.len() as isize;
    (0..n)
        .map(|i| match order {
            StencilOrder::Second => (ext(u, i + 1) - ext(u, i - 1)) / (T::lit(2.0) * h),
            StencilOrder::Fourth => {
                (T::lit(8.0) * (ext(u, i + 1) - ext(u, i - 1)) - (ext(u, i + 2) - ext(u, i - 2))) / (T::lit(12.0) * h)
            }
        })
        .collect()
}

/// Exact factor `G` with `G^T G = -L`, mapping nodes to the `N+1` cells.
///
/// `G = R D` where `D` is the cell difference and `R^T R` the cell mass of
/// the stencil, so `h |G u|^2` is a nonnegative local energy density whose
/// sum is the discrete Dirichlet form.
#[derive(Clone, Debug)]
pub struct EdgeGradient<T> {
    h: T,
    diag: Vec<T>,
    upper: Vec<T>,
}

impl<T: Real> EdgeGradient<T> {
    pub fn new(grid: &Grid1D<T>, order: StencilOrder) -> Self {
        let m = grid.n + 1;
        match order {
            StencilOrder::Second => Self { h: grid.h, diag: vec![T::one(); m], upper: vec![T::zero(); m] },
            StencilOrder::Fourth => {
                let twelfth = T::one() / T::lit(12.0);
                let mut diag = Vec::with_capacity(m);
                let mut upper = Vec::with_capacity(m);
                let off = -twelfth;
                for e in 0..m {
                    let d = if e == 0 || e == m - 1 { T::lit(13.0) } else { T::lit(14.0) } * twelfth;
                    let prev: T = if e == 0 { T::zero() } else { upper[e - 1] };
                    let r = (d - prev * prev).sqrt();
                    diag.push(r);
                    upper.push(if e + 1 < m { off / r } else { T::zero() });
                }
                Self { h: grid.h, diag, upper }
            }
        }
    }

    pub fn cells(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, u: &[T]) -> Vec<T> {
        let m = self.diag.len();
        let d: Vec<T> = (0..m as isize).map(|e| (ext(u, e) - ext(u, e - 1)) / self.h).collect();
        (0..m).map(|e| self.diag[e] * d[e] + if e + 1 < m { self.upper[e] * d[e + 1] } else { T::zero() }).collect()
    }

    pub fn apply_transpose(&self, y: &[T]) -> Vec<T> {
        let m = self.diag.len();
        let z: Vec<T> = (0..m).map(|e| self.diag[e] * y[e] + if e > 0 { self.upper[e - 1] * y[e - 1] } else { T::zero() }).collect();
        (0..m - 1).map(|i| (z[i] - z[i + 1]) / self.h).collect()
    }

    pub fn apply_complex(&self, u: &[Complex<T>]) -> Vec<Complex<T>> {
        let re: Vec<T> = u.iter().map(|c| c.re).collect();
        let im: Vec<T> = u.iter().map(|c| c.im).collect();
        self.apply(&re).into_iter().zip(self.apply(&im)).map(|(a, b)| Complex::new(a, b)).collect()
    }

    pub fn apply_transpose_complex(&self, y: &[Complex<T>]) -> Vec<Complex<T>> {
        let re: Vec<T> = y.iter().map(|c| c.re).collect();
        let im: Vec<T> = y.iter().map(|c| c.im).collect();
        self.apply_transpose(&re).into_iter().zip(self.apply_transpose(&im)).map(|(a, b)| Complex::new(a, b)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormFlavor {
    /// `||<x>^d u||`.
    L2,
    /// `||<x>^d grad u||^2 + ||<x>^d v||^2`, the weighted energy norm.
    GradL2,
    /// Energy norm plus `||<x>^d u||^2`.
    H1Full,
}

/// One transverse mode of a field: coefficient `u_k`, optional velocity `v_k`.
#[derive(Clone, Copy, Debug)]
pub struct ModeSlice<'a, T> {
    pub lambda: T,
    pub u: &'a [T],
    pub v: Option<&'a [T]>,
}

/// `<x>^delta`-weighted norm of a mode-decomposed field; the derivative uses
/// the central stencil of the given order.
pub fn weighted_norm<T: Real>(
    grid: &Grid1D<T>,
    order: StencilOrder,
    delta: T,
    flavor: NormFlavor,
    modes: &[ModeSlice<'_, T>],
) -> Result<T> {
    let w2: Vec<T> = grid.xs.iter().map(|&x| (T::one() + x * x).powf(delta)).collect();
    let wsum = |f: &[T]| f.iter().zip(&w2).map(|(&a, &w)| a * a * w).sum::<T>() * grid.h;
    let mut total = T::zero();
    for m in modes {
        if m.u.len() != grid.n || m.v.is_some_and(|v| v.len() != grid.n) {
            return Err(Error::DimensionMismatch(format!("mode samples do not match the {}-node grid", grid.n)));
        }
        let u2 = wsum(m.u);
        match flavor {
            NormFlavor::L2 => total += u2,
            NormFlavor::GradL2 | NormFlavor::H1Full => {
                let v = m.v.ok_or_else(|| invalid(format!("{flavor:?} norm needs the velocity component")))?;
                total += wsum(&central_derivative(m.u, grid.h, order)) + m.lambda * u2 + wsum(v);
                if flavor == NormFlavor::H1Full {
                    total += u2;
                }
            }
        }
    }
    Ok(total.sqrt())
}

/// Selected pieces of the discretization shared by the solvers.
#[derive(Clone, Debug)]
pub struct Discretization<T: Real> {
    pub grid: Grid1D<T>,
    pub order: StencilOrder,
    pub laplacian: BandMatrix<T>,
    pub damping: Vec<T>,
    pub gradient: EdgeGradient<T>,
    /// Eigenvalues of `-L` in the sine basis.
    pub mu: Vec<T>,
}

impl<T: Real> Discretization<T> {
    pub fn new(grid: Grid1D<T>, order: StencilOrder, absorption: &Absorption<T>) -> Result<Self> {
        let damping = absorption.x_samples(&grid)?;
        Ok(Self {
            laplacian: laplacian_1d(&grid, order),
            gradient: EdgeGradient::new(&grid, order),
            mu: laplacian_eigenvalues(&grid, order),
            damping,
            order,
            grid,
        })
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    /// `-L + lambda_k + m^2 - i z a - z^2` for one transverse mode.
    pub fn mode_operator(&self, lambda: T, mass2: T, z: Complex<T>) -> ShiftedOperator<T> {
        let i = Complex::new(T::zero(), T::one());
        let mut matrix = self.laplacian.map(|v| Complex::new(-v, T::zero()));
        let shift = Complex::new(lambda + mass2, T::zero()) - z * z;
        let diag: Vec<Complex<T>> = self.damping.iter().map(|&a| shift - i * z * a).collect();
        matrix.add_diagonal(&diag);
        ShiftedOperator { matrix, z, lambda, mass2 }
    }

    pub fn sine_transform(&self) -> SineTransform<T> {
        SineTransform::new(self.grid.n)
    }
}

/// Mode operator together with the spectral data it was built from.
#[derive(Clone, Debug)]
pub struct ShiftedOperator<T: Real> {
    pub matrix: BandMatrix<Complex<T>>,
    pub z: Complex<T>,
    pub lambda: T,
    pub mass2: T,
}

/// Free-function form of [`Discretization::mode_operator`].
pub fn mode_operator<T: Real>(disc: &Discretization<T>, lambda: T, z: Complex<T>) -> ShiftedOperator<T> {
    disc.mode_operator(lambda, T::zero(), z)
}

/// `(shift - L)^{power}` applied through the sine basis.
#[derive(Clone, Debug)]
pub struct SpectralPower<T: Real> {
    st: SineTransform<T>,
    diag: Vec<T>,
}

impl<T: Real> SpectralPower<T> {
    pub fn new(disc: &Discretization<T>, shift: T, power: T) -> Self {
        Self::with_transform(disc.sine_transform(), &disc.mu, shift, power)
    }

    pub fn with_transform(st: SineTransform<T>, mu: &[T], shift: T, power: T) -> Self {
        Self { st, diag: mu.iter().map(|&m| (shift + m).powf(power)).collect() }
    }

    pub fn apply(&self, x: &mut [Complex<T>]) {
        self.st.apply_diagonal(&self.diag, x)
    }

    pub fn is_identity(&self) -> bool {
        self.diag.iter().all(|&d| d == T::one())
    }
}
