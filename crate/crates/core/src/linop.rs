//! Matrix-free linear operators and largest-singular-value estimators.

use crate::error::{Error, Result};
use crate::scalar::{dot, norm, Field, Real};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A linear map `C^ncols -> C^nrows` together with its adjoint.
pub trait LinearOp<S: Field> {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &[S], y: &mut [S]);
    fn apply_adjoint(&self, y: &[S], x: &mut [S]);
}

impl<S: Field, O: LinearOp<S> + ?Sized> LinearOp<S> for &O {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }
    fn ncols(&self) -> usize {
        (**self).ncols()
    }
    fn apply(&self, x: &[S], y: &mut [S]) {
        (**self).apply(x, y)
    }
    fn apply_adjoint(&self, y: &[S], x: &mut [S]) {
        (**self).apply_adjoint(y, x)
    }
}

/// Dense row-major matrix as an operator.
#[derive(Clone, Debug)]
pub struct DenseOp<S> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<S>,
}

impl<S: Field> LinearOp<S> for DenseOp<S> {
    fn nrows(&self) -> usize {
        self.rows
    }
    fn ncols(&self) -> usize {
        self.cols
    }
    fn apply(&self, x: &[S], y: &mut [S]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            *yi = row.iter().zip(x).map(|(&a, &b)| a * b).sum();
        }
    }
    fn apply_adjoint(&self, y: &[S], x: &mut [S]) {
        x.iter_mut().for_each(|v| *v = S::zero());
        for (i, &yi) in y.iter().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (xj, &a) in x.iter_mut().zip(row) {
                *xj += a.conj() * yi;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerOptions {
    /// Relative change of the Rayleigh quotient at which iteration stops.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 500, seed: 0x5eed }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEstimate<T> {
    pub norm: T,
    pub iterations: usize,
    /// Relative change of the squared-norm estimate in the final iteration.
    pub residual: T,
}

fn random_unit<S: Field>(n: usize, seed: u64) -> Vec<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<S> = (0..n).map(|_| S::sample(&mut rng)).collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v = v.scale(S::Real::one() / nx));
    x
}

use num_traits::{Float, One, Zero};

/// Power iteration on `A^* A` from a seeded random start.
pub fn power_iteration<S: Field, O: LinearOp<S> + ?Sized>(
    op: &O,
    opts: &PowerOptions,
) -> Result<NormEstimate<S::Real>> {
    let n = op.ncols();
    let mut x = random_unit::<S>(n, opts.seed);
    let mut y = vec![S::zero(); op.nrows()];
    let mut prev = S::Real::zero();
    let tol = S::Real::lit(opts.tol);
    let mut change = S::Real::infinity();
    for it in 1..=opts.max_iter {
        op.apply(&x, &mut y);
        let sigma2 = crate::scalar::norm_sqr(&y);
        op.apply_adjoint(&y, &mut x);
        let nx = norm(&x);
        if nx == S::Real::zero() {
            return Ok(NormEstimate { norm: S::Real::zero(), iterations: it, residual: S::Real::zero() });
        }
        x.iter_mut().for_each(|v| *v = v.scale(S::Real::one() / nx));
        change = (sigma2 - prev).abs() / sigma2;
        if it > 2 && change < tol {
            return Ok(NormEstimate { norm: sigma2.sqrt(), iterations: it, residual: change });
        }
        prev = sigma2;
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, change: change.as_f64() })
}

/// Largest eigenvalue of the symmetric tridiagonal matrix (alpha, beta) by bisection.
fn tridiagonal_top_eigenvalue<T: Real>(alpha: &[T], beta: &[T]) -> T {
    let m = alpha.len();
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for i in 0..m {
        let r = if i > 0 { beta[i - 1].abs() } else { T::zero() } + if i + 1 < m { beta[i].abs() } else { T::zero() };
        lo = lo.min(alpha[i] - r);
        hi = hi.max(alpha[i] + r);
    }
    let guard = T::epsilon() * (hi.abs().max(lo.abs()) + T::one());
    // number of eigenvalues below x
    let count = |x: T| {
        let mut c = 0;
        let mut d = T::one();
        for i in 0..m {
            let b2 = if i > 0 { beta[i - 1] * beta[i - 1] } else { T::zero() };
            d = alpha[i] - x - if i > 0 { b2 / d } else { T::zero() };
            if d == T::zero() {
                d = guard;
            }
            if d < T::zero() {
                c += 1;
            }
        }
        c
    };
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if count(mid) < m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Largest singular value by Lanczos on `A^* A` with full reorthogonalization.
///
/// Converged when the top Ritz value changes by less than `tol` (relative) in
/// two consecutive steps, or when the Krylov space becomes invariant.
pub fn lanczos_norm<S: Field, O: LinearOp<S> + ?Sized>(
    op: &O,
    max_steps: usize,
    tol: f64,
    seed: u64,
) -> Result<NormEstimate<S::Real>> {
    let n = op.ncols();
    let mut basis: Vec<Vec<S>> = vec![random_unit(n, seed)];
    let mut alpha: Vec<S::Real> = Vec::new();
    let mut beta: Vec<S::Real> = Vec::new();
    let mut y = vec![S::zero(); op.nrows()];
    let mut w = vec![S::zero(); n];
    let mut est = S::Real::zero();
    let mut quiet = 0;
    let tol = S::Real::lit(tol);
    let mut change = S::Real::infinity();
    for j in 0..max_steps {
        op.apply(&basis[j], &mut y);
        op.apply_adjoint(&y, &mut w);
        alpha.push(dot(&basis[j], &w).real());
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                for (wi, &qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let b = norm(&w);
        let new_est = tridiagonal_top_eigenvalue(&alpha, &beta);
        change = (new_est - est).abs() / new_est.max(S::Real::min_positive_value());
        est = new_est;
        quiet = if j > 0 && change < tol { quiet + 1 } else { 0 };
        let invariant = b <= S::Real::lit(1e3) * S::Real::epsilon() * est.max(S::Real::min_positive_value()).sqrt().max(est) || j + 1 == n;
        if quiet >= 2 || invariant {
            return Ok(NormEstimate { norm: est.max(S::Real::zero()).sqrt(), iterations: j + 1, residual: change });
        }
        beta.push(b);
        basis.push(w.iter().map(|v| v.scale(S::Real::one() / b)).collect());
    }
    Err(Error::NoConvergence { iterations: max_steps, change: change.as_f64() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    PowerIteration,
    Lanczos,
}

/// How an operator norm is estimated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormOptions {
    pub method: NormMethod,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self { method: NormMethod::Lanczos, tol: 1e-6, max_iter: 500, seed: 0x5eed }
    }
}

pub fn estimate_norm<S: Field, O: LinearOp<S> + ?Sized>(op: &O, opts: &NormOptions) -> Result<NormEstimate<S::Real>> {
    match opts.method {
        NormMethod::PowerIteration => power_iteration(op, &PowerOptions { tol: opts.tol, max_iter: opts.max_iter, seed: opts.seed }),
        NormMethod::Lanczos => lanczos_norm(op, opts.max_iter, opts.tol, opts.seed),
    }
}
