//! Scalar abstractions: the real field `T` and the vector field over which
//! linear operators act (`T` itself or `Complex<T>`).

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rand::Rng;
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::Neg;

/// Real floating-point scalar (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + rustfft::FftNum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + Field<Real = Self>
    + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("integer representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Scalar field a linear operator acts on.
pub trait Field: Copy + Debug + Send + Sync + NumAssign + Neg<Output = Self> + Sum + 'static {
    type Real: Real;
    fn conj(self) -> Self;
    fn abs_sqr(self) -> Self::Real;
    fn from_real(r: Self::Real) -> Self;
    fn real(self) -> Self::Real;
    fn scale(self, r: Self::Real) -> Self;
    fn to_c64(self) -> Complex<f64>;
    /// Uniform sample in the unit cube of the underlying real coordinates.
    fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn modulus(self) -> Self::Real {
        self.abs_sqr().sqrt()
    }
}

macro_rules! real_field {
    ($t:ty) => {
        impl Field for $t {
            type Real = $t;
            fn conj(self) -> Self {
                self
            }
            fn abs_sqr(self) -> $t {
                self * self
            }
            fn from_real(r: $t) -> Self {
                r
            }
            fn real(self) -> $t {
                self
            }
            fn scale(self, r: $t) -> Self {
                self * r
            }
            fn to_c64(self) -> Complex<f64> {
                Complex::new(self as f64, 0.0)
            }
            fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.gen_range(-1.0..1.0)
            }
        }

    };
}

real_field!(f32);
real_field!(f64);

impl<T: Real> Field for Complex<T> {
    type Real = T;
    fn conj(self) -> Self {
        Complex::conj(&self)
    }
    fn abs_sqr(self) -> T {
        self.norm_sqr()
    }
    fn from_real(r: T) -> Self {
        Complex::new(r, T::zero())
    }
    fn real(self) -> T {
        self.re
    }
    fn scale(self, r: T) -> Self {
        self * r
    }
    fn to_c64(self) -> Complex<f64> {
        Complex::new(self.re.as_f64(), self.im.as_f64())
    }
    fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Complex::new(T::sample(rng), T::sample(rng))
    }
}

/// Euclidean inner product `<x, y> = sum conj(x_i) y_i`.
pub fn dot<S: Field>(x: &[S], y: &[S]) -> S {
    x.iter().zip(y).map(|(a, b)| a.conj() * *b).sum()
}

pub fn norm_sqr<S: Field>(x: &[S]) -> S::Real {
    x.iter().map(|a| a.abs_sqr()).sum()
}

pub fn norm<S: Field>(x: &[S]) -> S::Real {
    norm_sqr(x).sqrt()
}

/// `<x> = (1 + x^2)^{1/2}`.
pub fn japanese<T: Real>(x: T) -> T {
    (T::one() + x * x).sqrt()
}

pub fn to_complex<T: Real>(x: &[T]) -> Vec<Complex<T>> {
    x.iter().map(|&r| Complex::new(r, T::zero())).collect()
}
