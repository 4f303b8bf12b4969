//! Linear-algebra kernels: CSR matrices, the coarsest-level direct solve,
//! matrix polynomials by Horner's rule and Lanczos eigenvalue estimates.

mod csr;
mod dense;
mod eigen;
pub mod mm;

pub use csr::CsrMatrix;
pub use dense::{
    assemble, dense_cholesky_ok, generalized_extremes, sym_eigenvalues,
    DenseFactor,
};
pub use eigen::{extreme_eigs, extreme_eigs_in, tridiag_extremes, EigEstimate};

use crate::polyapprox::MonomialPoly;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("entry ({row}, {col}) outside a {nrows}x{ncols} matrix")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },
    #[error("malformed CSR data: {0}")]
    MalformedCsr(String),
    #[error("matrix is not symmetric within tolerance")]
    NotSymmetric,
    #[error("matrix is not positive definite: pivot {pivot} is {value}")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("dimension {n} exceeds the dense limit {limit}")]
    TooLargeForDense { n: usize, limit: usize },
    #[error("matrix market: {0}")]
    Parse(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for SparseError {
    fn from(e: std::io::Error) -> Self {
        SparseError::Io(e.to_string())
    }
}

/// A linear map on `R^n`.
///
/// Implementors must be reentrant: `apply_into` takes `&self` and any scratch
/// space is allocated per call.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply_into(x, &mut y);
        y
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply_into(x, y)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply_into(x, y)
    }
}

/// Wraps a closure as a [`LinearOperator`].
pub struct FnOperator<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> FnOperator<F> {
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F: Fn(&[f64], &mut [f64])> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

/// The identity map on `R^n`.
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}

pub fn inf_norm(a: &CsrMatrix) -> f64 {
    a.inf_norm()
}

pub fn spmv(a: &CsrMatrix, v: &[f64]) -> Result<Vec<f64>, SparseError> {
    a.spmv(v)
}

pub fn coarse_factor(a0: &CsrMatrix) -> Result<DenseFactor, SparseError> {
    DenseFactor::factor(a0)
}

pub fn coarse_solve(f: &DenseFactor, d: &[f64]) -> Result<Vec<f64>, SparseError> {
    f.solve(d)
}

/// `q(A B^{-1}) w` by Horner's rule:
/// `u_0 = a_{nu-1} w`, `u_{j+1} = A (B^{-1} u_j) + a_{nu-2-j} w`.
pub fn horner_matrix_apply(
    q: &MonomialPoly,
    apply_a: &dyn LinearOperator,
    apply_binv: &dyn LinearOperator,
    w: &[f64],
) -> Result<Vec<f64>, SparseError> {
    let n = w.len();
    for op in [apply_a, apply_binv] {
        if op.dim() != n {
            return Err(SparseError::DimensionMismatch {
                expected: op.dim(),
                found: n,
            });
        }
    }
    let c = &q.coeffs;
    let top = c.len() - 1;
    let mut u: Vec<f64> = w.iter().map(|x| c[top] * x).collect();
    let mut tmp = vec![0.0; n];
    for j in (0..top).rev() {
        apply_binv.apply_into(&u, &mut tmp);
        apply_a.apply_into(&tmp, &mut u);
        for (ui, wi) in u.iter_mut().zip(w) {
            *ui += c[j] * wi;
        }
    }
    Ok(u)
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}
