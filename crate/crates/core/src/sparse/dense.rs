use super::{CsrMatrix, LinearOperator, SparseError};
use nalgebra::DMatrix;

/// Dense Cholesky factor `A = L L^T` of a small SPD matrix.
#[derive(Debug, Clone)]
pub struct DenseFactor {
    n: usize,
    // row-major lower triangle
    l: Vec<f64>,
}

impl DenseFactor {
    pub fn factor(a: &CsrMatrix) -> Result<Self, SparseError> {
        if a.nrows() != a.ncols() {
            return Err(SparseError::DimensionMismatch {
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        let n = a.nrows();
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            let (c, v) = a.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if j <= i {
                    l[i * n + j] = x;
                }
            }
        }
        Self::factor_lower(n, l)
    }

    pub fn factor_dense(a: &DMatrix<f64>) -> Result<Self, SparseError> {
        let n = a.nrows();
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                l[i * n + j] = a[(i, j)];
            }
        }
        Self::factor_lower(n, l)
    }

    fn factor_lower(n: usize, mut l: Vec<f64>) -> Result<Self, SparseError> {
        for j in 0..n {
            let mut d = l[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(SparseError::NotPositiveDefinite { pivot: j, value: d });
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = l[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Self { n, l })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, d: &[f64]) -> Result<Vec<f64>, SparseError> {
        if d.len() != self.n {
            return Err(SparseError::DimensionMismatch {
                expected: self.n,
                found: d.len(),
            });
        }
        let mut x = d.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[i * n + k] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
    }
}

/// The factor acts as `A^{-1}`.
impl LinearOperator for DenseFactor {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
        self.solve_in_place(y);
    }
}

/// Dense matrix of a linear operator, column by column.
pub fn assemble(op: &dyn LinearOperator) -> DMatrix<f64> {
    let n = op.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply_into(&e, &mut col);
        for i in 0..n {
            m[(i, j)] = col[i];
        }
        e[j] = 0.0;
    }
    m
}

pub fn dense_cholesky_ok(m: &DMatrix<f64>) -> bool {
    DenseFactor::factor_dense(m).is_ok()
}

/// Eigenvalues of the symmetric part, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let s = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Extreme values of `v^T C v / v^T A v` for symmetric `C` and SPD `A`.
pub fn generalized_extremes(c: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<(f64, f64), SparseError> {
    let f = DenseFactor::factor_dense(a)?;
    let n = a.nrows();
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            l[(i, j)] = f.l[i * n + j];
        }
    }
    let linv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or(SparseError::NotPositiveDefinite { pivot: 0, value: 0.0 })?;
    let s = &linv * c * linv.transpose();
    let ev = sym_eigenvalues(&s);
    Ok((ev[0], ev[n - 1]))
}
