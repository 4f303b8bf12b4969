//! Algebraic multilevel iteration (AMLI) preconditioners for sparse symmetric
//! positive definite systems.
//!
//! The crate provides
//!
//! * [`polyapprox`]: Chebyshev polynomials and the best uniform polynomial
//!   approximation to `1/x`, with error and positivity estimates;
//! * [`sparse`]: CSR kernels, the coarsest-level direct solve, Horner matrix
//!   polynomials and Lanczos eigenvalue estimates;
//! * [`hierarchy`]: model problems, fine/coarse splittings, the two-level
//!   hierarchical basis transform and the level data of the multilevel method;
//! * [`precond`]: the two-level multiplicative preconditioner, the linear AMLI
//!   cycle, the f-smoothing variant and preconditioned conjugate gradients;
//! * [`analysis`]: the level-by-level condition number recursion, degree
//!   calculators and numerical measurement of the spectral constants;
//! * [`cli`]: configuration and the `poly`, `solve`, `analyze` and `verify`
//!   commands behind the `amli` binary.

pub mod analysis;
pub mod cli;
pub mod hierarchy;
pub mod jsonfmt;
pub mod polyapprox;
pub mod precond;
pub mod sparse;

use thiserror::Error;

pub use polyapprox::{MonomialPoly, PolyError, SpectralInterval};
pub use sparse::{CsrMatrix, LinearOperator, SparseError};

/// Errors from hierarchy construction, preconditioner application and analysis.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AmliError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("smoother {0} is not symmetric and cannot define an SPD multilevel preconditioner")]
    NonSymmetricSmoother(String),
    #[error("zero diagonal entry in row {row}")]
    ZeroDiagonal { row: usize },
    #[error("coarsest matrix has dimension {n}, above the direct-solve threshold {limit}")]
    CoarseTooLarge { n: usize, limit: usize },
    #[error("polynomial is negative on the level interval: q({x}) = {value}")]
    NegativePolynomial { x: f64, value: f64 },
    #[error("infeasible target: kappa_bar * theta0 / theta1 = {0} must exceed 1")]
    InfeasibleTarget(f64),
    #[error("theta constants for level {level} are required (level too large to measure densely)")]
    ThetaRequired { level: usize },
    #[error("operator is indefinite: p^T A p = {value} at iteration {iteration}")]
    Indefinite { iteration: usize, value: f64 },
    #[error("preconditioner is not positive definite: r^T z = {value} at iteration {iteration}")]
    PreconditionerIndefinite { iteration: usize, value: f64 },
    #[error("inconsistent hierarchy: {0}")]
    InconsistentHierarchy(String),
}

pub type Result<T, E = AmliError> = std::result::Result<T, E>;
