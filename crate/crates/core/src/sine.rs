//! Orthonormal type-I discrete sine transform.
//!
//! The capped discrete Laplacians are diagonal in this basis, which gives
//! exact fractional powers `(1 + lambda - L)^{beta/2}`.

use crate::scalar::Real;
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

#[derive(Clone)]
pub struct SineTransform<T: Real> {
    n: usize,
    fft: Arc<dyn Fft<T>>,
    scale: T,
}

impl<T: Real> std::fmt::Debug for SineTransform<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SineTransform").field("n", &self.n).finish()
    }
}

impl<T: Real> SineTransform<T> {
    pub fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        let scale = (T::lit(2.0) / T::from_usize_lossy(n + 1)).sqrt() * T::lit(0.5);
        Self { n, fft, scale }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place transform; the transform is its own inverse.
    pub fn apply(&self, x: &mut [Complex<T>]) {
        assert_eq!(x.len(), self.n);
        let n = self.n;
        let mut buf = vec![Complex::new(T::zero(), T::zero()); 2 * (n + 1)];
        for j in 0..n {
            buf[j + 1] = x[j];
            buf[2 * n + 1 - j] = -x[j];
        }
        self.fft.process(&mut buf);
        // Y_k = -2i sum_j x_j sin(pi j k / (n+1))
        let f = Complex::new(T::zero(), self.scale);
        for k in 0..n {
            x[k] = buf[k + 1] * f;
        }
    }

    /// Applies `V diag(d) V` where `V` is the sine basis.
    pub fn apply_diagonal(&self, d: &[T], x: &mut [Complex<T>]) {
        self.apply(x);
        for (xi, &di) in x.iter_mut().zip(d) {
            *xi = *xi * di;
        }
        self.apply(x);
    }
}
