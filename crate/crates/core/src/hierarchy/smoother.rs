//! Approximations `M` (or `C11`) to a symmetric matrix with cheap `M^{-1}` and `M^{-T}`.

use crate::sparse::{CsrMatrix, DenseFactor, LinearOperator, SparseError};
use crate::{AmliError, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Largest block the `exact` smoother will factor densely.
pub const EXACT_SMOOTHER_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SmootherKind {
    /// `M = D / omega`
    Jacobi { omega: f64 },
    /// `M = D + L`
    GaussSeidel,
    /// `M = D / omega + L`
    Sor { omega: f64 },
    /// `M = (D + L) D^{-1} (D + U)`
    SymmetricGaussSeidel,
    /// `M = A`
    Exact,
}

impl SmootherKind {
    pub fn is_symmetric(&self) -> bool {
        matches!(
            self,
            SmootherKind::Jacobi { .. } | SmootherKind::SymmetricGaussSeidel | SmootherKind::Exact
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            SmootherKind::Jacobi { .. } => "jacobi",
            SmootherKind::GaussSeidel => "gauss-seidel",
            SmootherKind::Sor { .. } => "sor",
            SmootherKind::SymmetricGaussSeidel => "sgs",
            SmootherKind::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Smoother {
    kind: SmootherKind,
    a: CsrMatrix,
    diag: Vec<f64>,
    factor: Option<DenseFactor>,
}

pub fn build_smoother(a: &CsrMatrix, kind: SmootherKind) -> Result<Smoother> {
    Smoother::new(a, kind)
}

impl Smoother {
    pub fn new(a: &CsrMatrix, kind: SmootherKind) -> Result<Self> {
        let diag = a.diag();
        if let Some(row) = diag.iter().position(|&d| d == 0.0) {
            return Err(AmliError::ZeroDiagonal { row });
        }
        match kind {
            SmootherKind::Jacobi { omega } | SmootherKind::Sor { omega } if !(omega > 0.0 && omega < 2.0) => {
                return Err(AmliError::Config(format!("relaxation weight {omega} outside (0, 2)")));
            }
            _ => {}
        }
        let factor = if kind == SmootherKind::Exact {
            if a.nrows() > EXACT_SMOOTHER_LIMIT {
                return Err(SparseError::TooLargeForDense {
                    n: a.nrows(),
                    limit: EXACT_SMOOTHER_LIMIT,
                }
                .into());
            }
            Some(DenseFactor::factor(a)?)
        } else {
            None
        };
        Ok(Self {
            kind,
            a: a.clone(),
            diag,
            factor,
        })
    }

    pub fn kind(&self) -> SmootherKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.kind.is_symmetric()
    }

    /// Diagonal of `M` for the triangular kinds.
    fn tri_diag(&self, i: usize) -> f64 {
        match self.kind {
            SmootherKind::Sor { omega } => self.diag[i] / omega,
            _ => self.diag[i],
        }
    }

    /// Solve `(diag + strict lower) x = r`.
    fn lower_solve(&self, x: &mut [f64]) {
        for i in 0..x.len() {
            let (c, v) = self.a.row(i);
            let mut s = x[i];
            for (&j, &aij) in c.iter().zip(v) {
                if j >= i {
                    break;
                }
                s -= aij * x[j];
            }
            x[i] = s / self.tri_diag(i);
        }
    }

    /// Solve `(diag + strict upper) x = r`.
    fn upper_solve(&self, x: &mut [f64]) {
        for i in (0..x.len()).rev() {
            let (c, v) = self.a.row(i);
            let mut s = x[i];
            for (&j, &aij) in c.iter().zip(v).rev() {
                if j <= i {
                    break;
                }
                s -= aij * x[j];
            }
            x[i] = s / self.tri_diag(i);
        }
    }

    /// `x <- M^{-1} x`
    pub fn solve_in_place(&self, x: &mut [f64]) {
        match self.kind {
            SmootherKind::Jacobi { omega } => {
                x.iter_mut().zip(&self.diag).for_each(|(xi, d)| *xi *= omega / d);
            }
            SmootherKind::GaussSeidel | SmootherKind::Sor { .. } => self.lower_solve(x),
            SmootherKind::SymmetricGaussSeidel => {
                self.lower_solve(x);
                x.iter_mut().zip(&self.diag).for_each(|(xi, d)| *xi *= d);
                self.upper_solve(x);
            }
            SmootherKind::Exact => self.factor.as_ref().expect("factored").solve_in_place(x),
        }
    }

    /// `x <- M^{-T} x`
    pub fn solve_transpose_in_place(&self, x: &mut [f64]) {
        match self.kind {
            SmootherKind::GaussSeidel | SmootherKind::Sor { .. } => self.upper_solve(x),
            _ => self.solve_in_place(x),
        }
    }

    pub fn apply_inv(&self, r: &[f64]) -> Vec<f64> {
        let mut x = r.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn apply_inv_t(&self, r: &[f64]) -> Vec<f64> {
        let mut x = r.to_vec();
        self.solve_transpose_in_place(&mut x);
        x
    }

    /// `M` itself as a dense matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let a = self.a.to_dense();
        let tri = |m: &mut DMatrix<f64>, upper: bool| {
            for i in 0..n {
                for j in 0..n {
                    if (upper && j < i) || (!upper && j > i) {
                        m[(i, j)] = 0.0;
                    }
                }
                m[(i, i)] = self.tri_diag(i);
            }
        };
        match self.kind {
            SmootherKind::Jacobi { omega } => DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                n,
                self.diag.iter().map(|d| d / omega),
            )),
            SmootherKind::GaussSeidel | SmootherKind::Sor { .. } => {
                let mut l = a;
                tri(&mut l, false);
                l
            }
            SmootherKind::SymmetricGaussSeidel => {
                let mut l = a.clone();
                tri(&mut l, false);
                let mut u = a;
                tri(&mut u, true);
                let dinv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    n,
                    self.diag.iter().map(|d| 1.0 / d),
                ));
                l * dinv * u
            }
            SmootherKind::Exact => a,
        }
    }
}

/// The smoother acts as `M^{-1}`.
impl LinearOperator for Smoother {
    fn dim(&self) -> usize {
        self.diag.len()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
        self.solve_in_place(y);
    }
}
