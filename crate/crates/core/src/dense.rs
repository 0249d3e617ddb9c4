//! Dense double-precision oracles used to validate the matrix-free estimates.

use crate::linop::LinearOp;
use crate::scalar::Field;
use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

/// Materializes an operator column by column in double precision.
pub fn materialize<S: Field, O: LinearOp<S> + ?Sized>(op: &O) -> DMatrix<Complex64> {
    let (m, n) = (op.nrows(), op.ncols());
    let mut out = DMatrix::<Complex64>::zeros(m, n);
    let mut e = vec![S::zero(); n];
    let mut col = vec![S::zero(); m];
    for j in 0..n {
        e[j] = S::one();
        op.apply(&e, &mut col);
        for i in 0..m {
            out[(i, j)] = col[i].to_c64();
        }
        e[j] = S::zero();
    }
    out
}

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn dense_norm<S: Field, O: LinearOp<S> + ?Sized>(op: &O) -> f64 {
    singular_values(&materialize(op))[0]
}

/// Eigenvalues of a real square matrix via the real Schur form.
pub fn real_eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    Schur::new(m.clone()).complex_eigenvalues().iter().copied().collect()
}
