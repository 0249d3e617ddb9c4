//! Transverse eigenbasis of the cross-section `(0, L)`.
//!
//! Neumann modes are `1/sqrt(L)` and `sqrt(2/L) cos(k pi y / L)` for `k >= 1`;
//! Dirichlet modes are `sqrt(2/L) sin(k pi y / L)` for `k >= 1`. Sampled
//! fields use a uniform transverse grid whose quadrature makes the sampled
//! modes exactly orthonormal.

use crate::error::{Error, Result};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Neumann,
    Dirichlet,
}

impl BoundaryCondition {
    pub fn name(self) -> &'static str {
        match self {
            Self::Neumann => "Neumann",
            Self::Dirichlet => "Dirichlet",
        }
    }

    /// Smallest admissible mode index.
    pub fn first_mode(self) -> usize {
        match self {
            Self::Neumann => 0,
            Self::Dirichlet => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigenpair<T> {
    pub bc: BoundaryCondition,
    pub k: usize,
    pub length: T,
    pub lambda: T,
}

impl<T: Real> Eigenpair<T> {
    pub fn eval(&self, y: T) -> T {
        let l = self.length;
        let arg = T::from_usize_lossy(self.k) * T::PI() * y / l;
        match self.bc {
            BoundaryCondition::Neumann if self.k == 0 => (T::one() / l).sqrt(),
            BoundaryCondition::Neumann => (T::lit(2.0) / l).sqrt() * arg.cos(),
            BoundaryCondition::Dirichlet => (T::lit(2.0) / l).sqrt() * arg.sin(),
        }
    }
}

/// Eigenvalue `(k pi / L)^2` and eigenfunction of the cross-section Laplacian.
pub fn eigenpair<T: Real>(bc: BoundaryCondition, length: T, k: usize) -> Result<Eigenpair<T>> {
    if !(length > T::zero()) {
        return Err(crate::error::invalid(format!("cross-section length must be positive, got {length}")));
    }
    if k < bc.first_mode() {
        return Err(Error::ModeOutOfRange { k, bc: bc.name(), reason: "Dirichlet modes start at k=1".into() });
    }
    let w = T::from_usize_lossy(k) * T::PI() / length;
    Ok(Eigenpair { bc, k, length, lambda: w * w })
}

/// Samples of a field on the `nx x ny` tensor grid, `x`-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GuideField<T> {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<T>,
}

impl<T: Real> GuideField<T> {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self { nx, ny, data: vec![T::zero(); nx * ny] }
    }

    pub fn from_fn(xs: &[T], ys: &[T], f: impl Fn(T, T) -> T) -> Self {
        let mut data = Vec::with_capacity(xs.len() * ys.len());
        for &x in xs {
            for &y in ys {
                data.push(f(x, y));
            }
        }
        Self { nx: xs.len(), ny: ys.len(), data }
    }

    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[i * self.ny + j]
    }
}

/// Mode coefficients `u_k(x)`, one row of length `nx` per retained mode.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeField<T> {
    pub nx: usize,
    pub rows: Vec<Vec<T>>,
}

impl<T: Real> ModeField<T> {
    pub fn zeros(modes: usize, nx: usize) -> Self {
        Self { nx, rows: vec![vec![T::zero(); nx]; modes] }
    }

    pub fn modes(&self) -> usize {
        self.rows.len()
    }

    /// `sum_k h |u_k|^2`, the squared L2 norm of the synthesized field.
    pub fn norm_sqr(&self, h: T) -> T {
        self.rows.iter().flat_map(|r| r.iter()).map(|&v| v * v).sum::<T>() * h
    }
}

/// Truncated transverse basis sampled on its quadrature grid.
#[derive(Clone, Debug)]
pub struct TransverseBasis<T> {
    pub bc: BoundaryCondition,
    pub length: T,
    pub pairs: Vec<Eigenpair<T>>,
    pub ys: Vec<T>,
    pub weights: Vec<T>,
    // phi[m][j] = phi_{k_m}(y_j)
    phi: Vec<Vec<T>>,
}

/// Minimum number of transverse samples per retained mode.
pub const POINTS_PER_MODE: usize = 8;

impl<T: Real> TransverseBasis<T> {
    /// First `modes` eigenpairs sampled on `ny` transverse points.
    pub fn new(bc: BoundaryCondition, length: T, modes: usize, ny: usize) -> Result<Self> {
        if modes == 0 {
            return Err(crate::error::invalid("at least one transverse mode is required"));
        }
        let required = POINTS_PER_MODE * modes;
        if ny < required {
            return Err(Error::TransverseUnderResolved { points: ny, modes, required });
        }
        let pairs = (0..modes).map(|m| eigenpair(bc, length, m + bc.first_mode())).collect::<Result<Vec<_>>>()?;
        let (ys, weights): (Vec<T>, Vec<T>) = match bc {
            BoundaryCondition::Neumann => {
                let hy = length / T::from_usize_lossy(ny - 1);
                (0..ny)
                    .map(|j| {
                        let w = if j == 0 || j == ny - 1 { hy * T::lit(0.5) } else { hy };
                        (T::from_usize_lossy(j) * hy, w)
                    })
                    .unzip()
            }
            BoundaryCondition::Dirichlet => {
                let hy = length / T::from_usize_lossy(ny + 1);
                (0..ny).map(|j| (T::from_usize_lossy(j + 1) * hy, hy)).unzip()
            }
        };
        let phi = pairs.iter().map(|p| ys.iter().map(|&y| p.eval(y)).collect()).collect();
        Ok(Self { bc, length, pairs, ys, weights, phi })
    }

    pub fn modes(&self) -> usize {
        self.pairs.len()
    }

    pub fn lambdas(&self) -> Vec<T> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }

    pub fn sample(&self, m: usize) -> &[T] {
        &self.phi[m]
    }

    fn check(&self, field: &GuideField<T>) -> Result<()> {
        if field.ny != self.ys.len() || field.data.len() != field.nx * field.ny {
            return Err(Error::DimensionMismatch(format!(
                "field has {} transverse samples, basis expects {}",
                field.ny,
                self.ys.len()
            )));
        }
        Ok(())
    }

    /// Coefficients `u_k(x) = int u(x, y) phi_k(y) dy`.
    pub fn to_modes(&self, field: &GuideField<T>) -> Result<ModeField<T>> {
        self.check(field)?;
        let rows = self
            .phi
            .iter()
            .map(|phi| {
                (0..field.nx)
                    .map(|i| {
                        let row = &field.data[i * field.ny..(i + 1) * field.ny];
                        row.iter().zip(phi).zip(&self.weights).map(|((&u, &p), &w)| u * p * w).sum()
                    })
                    .collect()
            })
            .collect();
        Ok(ModeField { nx: field.nx, rows })
    }

    /// Synthesizes `sum_k u_k(x) phi_k(y)` on the transverse grid.
    pub fn from_modes(&self, modes: &ModeField<T>) -> Result<GuideField<T>> {
        if modes.modes() != self.modes() {
            return Err(Error::DimensionMismatch(format!("{} mode rows for {} basis modes", modes.modes(), self.modes())));
        }
        let ny = self.ys.len();
        let mut out = GuideField::zeros(modes.nx, ny);
        for (row, phi) in modes.rows.iter().zip(&self.phi) {
            for (i, &c) in row.iter().enumerate() {
                for (dst, &p) in out.data[i * ny..(i + 1) * ny].iter_mut().zip(phi) {
                    *dst += c * p;
                }
            }
        }
        Ok(out)
    }

    /// Transverse mean `(1/L) int u(x, y) dy`.
    pub fn project_p0(&self, field: &GuideField<T>) -> Result<Vec<T>> {
        if self.bc == BoundaryCondition::Dirichlet {
            return Err(Error::ProjectionUndefined);
        }
        self.check(field)?;
        let inv = T::one() / self.length;
        Ok((0..field.nx)
            .map(|i| {
                let row = &field.data[i * field.ny..(i + 1) * field.ny];
                row.iter().zip(&self.weights).map(|(&u, &w)| u * w).sum::<T>() * inv
            })
            .collect())
    }

    /// `u - P0 u`.
    pub fn project_p0_perp(&self, field: &GuideField<T>) -> Result<GuideField<T>> {
        let mean = self.project_p0(field)?;
        let mut out = field.clone();
        for (i, m) in mean.iter().enumerate() {
            out.data[i * field.ny..(i + 1) * field.ny].iter_mut().for_each(|v| *v -= *m);
        }
        Ok(out)
    }

    /// Squared L2 norm over the cross-section grid, `sum_j w_j |u(x_i, y_j)|^2 h`.
    pub fn field_norm_sqr(&self, field: &GuideField<T>, hx: T) -> T {
        (0..field.nx)
            .map(|i| {
                field.data[i * field.ny..(i + 1) * field.ny]
                    .iter()
                    .zip(&self.weights)
                    .map(|(&u, &w)| u * u * w)
                    .sum::<T>()
            })
            .sum::<T>()
            * hx
    }
}
