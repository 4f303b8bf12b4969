use super::{LinearOperator, SparseError};

/// Square sparse matrix in compressed-sparse-row form.
///
/// Column indices are sorted and unique within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assemble from `(row, col, value)` triplets. Entries are sorted and
    /// duplicates summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, SparseError> {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return Err(SparseError::IndexOutOfBounds {
                    row: i,
                    col: j,
                    nrows,
                    ncols,
                });
            }
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            cols[next[i]] = j;
            vals[next[i]] = v;
            next[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            scratch.clear();
            scratch.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            scratch.sort_by_key(|e| e.0);
            for &(j, v) in scratch.iter() {
                if col_idx.len() > row_ptr[i] && *col_idx.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Build from raw arrays, validating the structure.
    pub fn from_raw(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, SparseError> {
        if row_ptr.len() != nrows + 1
            || row_ptr[0] != 0
            || *row_ptr.last().unwrap() != col_idx.len()
            || col_idx.len() != values.len()
        {
            return Err(SparseError::MalformedCsr("inconsistent array lengths".into()));
        }
        for i in 0..nrows {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(SparseError::MalformedCsr("row_ptr decreasing".into()));
            }
            let row = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(SparseError::MalformedCsr(format!("row {i} not strictly sorted")));
            }
            if row.iter().any(|&j| j >= ncols) {
                return Err(SparseError::MalformedCsr(format!("row {i} column out of range")));
            }
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: d.to_vec(),
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    /// `y += alpha A x`
    pub fn spmv_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi += alpha * acc;
        }
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, SparseError> {
        if x.len() != self.ncols {
            return Err(SparseError::DimensionMismatch {
                expected: self.ncols,
                found: x.len(),
            });
        }
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                col_idx[next[j]] = i;
                values[next[j]] = self.values[k];
                next[j] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr: counts,
            col_idx,
            values,
        }
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &CsrMatrix) -> Result<CsrMatrix, SparseError> {
        if self.ncols != other.nrows {
            return Err(SparseError::DimensionMismatch {
                expected: self.ncols,
                found: other.nrows,
            });
        }
        let mut acc = vec![0.0; other.ncols];
        let mut marker = vec![usize::MAX; other.ncols];
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        let mut touched: Vec<usize> = Vec::new();
        for i in 0..self.nrows {
            touched.clear();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let (a_ik, kk) = (self.values[k], self.col_idx[k]);
                for l in other.row_ptr[kk]..other.row_ptr[kk + 1] {
                    let j = other.col_idx[l];
                    if marker[j] != i {
                        marker[j] = i;
                        acc[j] = 0.0;
                        touched.push(j);
                    }
                    acc[j] += a_ik * other.values[l];
                }
            }
            touched.sort_unstable();
            for &j in touched.iter() {
                if acc[j] != 0.0 {
                    col_idx.push(j);
                    values.push(acc[j]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(CsrMatrix {
            nrows: self.nrows,
            ncols: other.ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// `alpha * self + beta * other`; exact zeros are dropped.
    pub fn add_scaled(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> Result<CsrMatrix, SparseError> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(SparseError::DimensionMismatch {
                expected: self.nrows,
                found: other.nrows,
            });
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.nrows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let (j, v) = if q >= cb.len() || (p < ca.len() && ca[p] < cb[q]) {
                    p += 1;
                    (ca[p - 1], alpha * va[p - 1])
                } else if p >= ca.len() || cb[q] < ca[p] {
                    q += 1;
                    (cb[q - 1], beta * vb[q - 1])
                } else {
                    p += 1;
                    q += 1;
                    (ca[p - 1], alpha * va[p - 1] + beta * vb[q - 1])
                };
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Submatrix with the given rows and columns (in the given order).
    pub fn extract(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.ncols];
        for (new, &old) in cols.iter().enumerate() {
            map[old] = new;
        }
        let mut triplets = Vec::new();
        for (ni, &i) in rows.iter().enumerate() {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if map[j] != usize::MAX {
                    triplets.push((ni, map[j], x));
                }
            }
        }
        CsrMatrix::from_triplets(rows.len(), cols.len(), &triplets).expect("indices in range")
    }

    /// Symmetric permutation `P A P^T` where new index `i` holds old index `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> CsrMatrix {
        self.extract(perm, perm)
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - A^T| <= tol * max |A|`
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let scale = self.max_abs();
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if (x - self.get(j, i)).abs() > tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Dense copy (row-major nalgebra matrix).
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                m[(i, j)] = x;
            }
        }
        m
    }

    pub fn from_dense(m: &nalgebra::DMatrix<f64>) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        CsrMatrix::from_triplets(m.nrows(), m.ncols(), &t).expect("indices in range")
    }

    /// Lower triangle including the diagonal, as triplets; used for Matrix Market output.
    pub fn lower_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::new();
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if j <= i {
                    t.push((i, j, x));
                }
            }
        }
        t
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.spmv_into(x, y);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn spmv_examples() {
        let id = CsrMatrix::identity(3);
        assert_eq!(id.spmv(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        let a = poisson1d(3);
        assert_eq!(a.spmv(&[1.0, 1.0, 1.0]).unwrap(), vec![1.0, 0.0, 1.0]);
        assert!(matches!(
            a.spmv(&[1.0]),
            Err(SparseError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn triplets_sorted_and_summed() {
        let a = CsrMatrix::from_triplets(2, 2, &[(1, 1, 1.0), (0, 1, 2.0), (0, 0, 3.0), (1, 1, 4.0)])
            .unwrap();
        assert_eq!(a.row_ptr(), &[0, 2, 3]);
        assert_eq!(a.col_idx(), &[0, 1, 1]);
        assert_eq!(a.values(), &[3.0, 2.0, 5.0]);
        assert!(CsrMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn inf_norm_examples() {
        assert_eq!(poisson1d(5).inf_norm(), 4.0);
        assert_eq!(CsrMatrix::diagonal(&[1.0, 5.0, 2.0]).inf_norm(), 5.0);
    }

    #[test]
    fn matmul_transpose_and_extract() {
        let a = poisson1d(4);
        let a2 = a.matmul(&a).unwrap();
        let d = a.to_dense();
        let d2 = &d * &d;
        assert!((a2.to_dense() - d2).abs().max() < 1e-14);
        let r = CsrMatrix::from_triplets(2, 4, &[(0, 0, 1.0), (1, 3, 2.0), (0, 2, -1.0)]).unwrap();
        assert_eq!(r.transpose().to_dense(), r.to_dense().transpose());
        let sub = a.extract(&[1, 3], &[0, 1, 2]);
        assert_eq!(sub.get(0, 0), -1.0);
        assert_eq!(sub.get(0, 1), 2.0);
        assert_eq!(sub.get(1, 2), -1.0);
        let s = a.add_scaled(1.0, &a, -1.0).unwrap();
        assert_eq!(s.nnz(), 0);
    }

    #[test]
    fn symmetry_check() {
        assert!(poisson1d(6).is_symmetric(1e-12));
        let b = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0 + 1e-9)]).unwrap();
        assert!(!b.is_symmetric(1e-12));
        assert!(b.is_symmetric(1e-8));
    }

    #[test]
    fn raw_validation() {
        assert!(CsrMatrix::from_raw(2, 2, vec![0, 1, 2], vec![0, 1], vec![1.0, 1.0]).is_ok());
        assert!(CsrMatrix::from_raw(2, 2, vec![0, 2, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::from_raw(2, 2, vec![0, 1], vec![0], vec![1.0]).is_err());
    }
}
