//! Banded matrices and their LU factorization with partial pivoting.

use crate::error::{Error, Result};
use crate::scalar::{Field, Real};

/// Square matrix with `kl` sub- and `ku` super-diagonals, stored by diagonals.
#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix<S> {
    n: usize,
    kl: usize,
    ku: usize,
    // data[(ku + i - j) * n + j] holds entry (i, j)
    data: Vec<S>,
}

impl<S: Field> BandMatrix<S> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, data: vec![S::zero(); (kl + ku + 1) * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, 0, 0);
        m.data.iter_mut().for_each(|d| *d = S::one());
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i <= j + self.kl && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        if self.in_band(i, j) {
            self.data[(self.ku + i - j) * self.n + j]
        } else {
            S::zero()
        }
    }

    /// Sets an entry inside the band. Panics outside it.
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        assert!(self.in_band(i, j), "entry ({i},{j}) outside band");
        self.data[(self.ku + i - j) * self.n + j] = v;
    }

    pub fn add_diagonal(&mut self, d: &[S]) {
        assert_eq!(d.len(), self.n);
        let off = self.ku * self.n;
        for (j, &v) in d.iter().enumerate() {
            self.data[off + j] += v;
        }
    }

    /// Entrywise map into another field, keeping the band structure.
    pub fn map<R: Field>(&self, f: impl Fn(S) -> R) -> BandMatrix<R> {
        BandMatrix { n: self.n, kl: self.kl, ku: self.ku, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// `alpha * self + beta * other` for matrices with identical bands.
    pub fn combine(&self, alpha: S, other: &Self, beta: S) -> Self {
        assert_eq!((self.n, self.kl, self.ku), (other.n, other.kl, other.ku));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| alpha * a + beta * b).collect();
        Self { n: self.n, kl: self.kl, ku: self.ku, data }
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[S], y: &mut [S]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut acc = S::zero();
            for j in lo..=hi {
                acc += self.data[(self.ku + i - j) * self.n + j] * x[j];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        let mut y = vec![S::zero(); self.n];
        self.matvec(x, &mut y);
        y
    }

    /// LU factorization with partial pivoting.
    pub fn factor(&self) -> Result<BandLu<S>> {
        BandLu::new(self)
    }
}

/// Banded LU factors; fill-in widens the upper band to `ku + kl`.
#[derive(Clone, Debug)]
pub struct BandLu<S> {
    n: usize,
    kl: usize,
    ku: usize,
    // lu[(kl + ku + i - j) * n + j] holds entry (i, j), rows of U up to ku+kl above
    lu: Vec<S>,
    piv: Vec<usize>,
    condition: f64,
}

impl<S: Field> BandLu<S> {
    fn new(a: &BandMatrix<S>) -> Result<Self> {
        let (n, kl, ku) = (a.n, a.kl, a.ku);
        let width = 2 * kl + ku + 1;
        let mut lu = vec![S::zero(); width * n];
        let kw = kl + ku;
        for j in 0..n {
            for i in j.saturating_sub(ku)..=(j + kl).min(n - 1) {
                lu[(kw + i - j) * n + j] = a.get(i, j);
            }
        }
        let idx = |i: usize, j: usize| (kw + i - j) * n + j;
        let mut piv = vec![0; n];
        let mut umax = 0.0f64;
        let mut umin = f64::INFINITY;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut p = 0;
            let mut best = lu[idx(j, j)].abs_sqr();
            for r in 1..=km {
                let v = lu[idx(j + r, j)].abs_sqr();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            piv[j] = j + p;
            let last = (j + kw).min(n - 1);
            if p != 0 {
                for c in j..=last {
                    lu.swap(idx(j, c), idx(j + p, c));
                }
            }
            let pivot = lu[idx(j, j)];
            let pabs = pivot.modulus().as_f64();
            if !(pabs > 0.0) || !pabs.is_finite() {
                return Err(Error::Singular { pivot: j, condition: f64::INFINITY });
            }
            umax = umax.max(pabs);
            umin = umin.min(pabs);
            let inv = S::one() / pivot;
            for r in 1..=km {
                let l = lu[idx(j + r, j)] * inv;
                lu[idx(j + r, j)] = l;
                if l != S::zero() {
                    for c in (j + 1)..=last {
                        let ujc = lu[idx(j, c)];
                        lu[idx(j + r, c)] -= l * ujc;
                    }
                }
            }
        }
        let condition = if n == 0 { 1.0 } else { umax / umin };
        Ok(Self { n, kl, ku, lu, piv, condition })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Ratio of the largest to the smallest pivot magnitude; a cheap lower
    /// bound on the 2-norm condition number.
    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [S]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let kw = self.kl + self.ku;
        let idx = |i: usize, j: usize| (kw + i - j) * n + j;
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            if bj != S::zero() {
                for r in 1..=self.kl.min(n - 1 - j) {
                    b[j + r] -= self.lu[idx(j + r, j)] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] = b[j] / self.lu[idx(j, j)];
            let bj = b[j];
            if bj != S::zero() {
                for i in j.saturating_sub(kw)..j {
                    b[i] -= self.lu[idx(i, j)] * bj;
                }
            }
        }
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
