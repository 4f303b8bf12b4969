//! Model-problem grids, fine/coarse splittings and interpolation weights.

use crate::sparse::CsrMatrix;
use crate::{AmliError, Result};
use serde::{Deserialize, Serialize};

/// Largest number of unknowns `gen_poisson` will produce.
pub const MAX_DOFS: usize = 1 << 26;

/// Uniform grid of interior points on the unit interval or square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    /// Interior points per direction.
    pub n: usize,
}

impl Grid {
    pub fn ndofs(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// The grid with twice the mesh width, if this grid was obtained by refinement.
    pub fn coarse(&self) -> Option<Grid> {
        (self.n >= 3 && self.n % 2 == 1).then(|| Grid {
            dim: self.dim,
            n: (self.n - 1) / 2,
        })
    }

    /// Natural (lexicographic, x fastest) index of the 1-based point `(i, j)`.
    fn index(&self, i: usize, j: usize) -> usize {
        (j - 1) * self.n + (i - 1)
    }
}

/// Nested grids, coarsest first, and the finest-grid matrix.
#[derive(Debug, Clone)]
pub struct PoissonProblem {
    pub grids: Vec<Grid>,
    pub matrix: CsrMatrix,
}

impl PoissonProblem {
    pub fn finest(&self) -> Grid {
        *self.grids.last().expect("at least one grid")
    }
}

/// Laplacian with homogeneous Dirichlet boundary on `levels` nested grids,
/// the coarsest having `n0` interior points per direction.
///
/// The stencils are unscaled: `[-1 2 -1]` in 1D and the 5-point stencil with
/// diagonal 4 in 2D.
pub fn gen_poisson(dim: usize, levels: usize, n0: usize) -> Result<PoissonProblem> {
    if dim != 1 && dim != 2 {
        return Err(AmliError::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
    }
    if levels == 0 || n0 == 0 {
        return Err(AmliError::InvalidGrid("levels and n0 must be positive".into()));
    }
    let mut grids = Vec::with_capacity(levels);
    let mut n = n0;
    for l in 0..levels {
        if l > 0 {
            n = n
                .checked_mul(2)
                .and_then(|m| m.checked_add(1))
                .ok_or_else(|| AmliError::InvalidGrid("grid size overflow".into()))?;
        }
        let total = n.checked_pow(dim as u32).filter(|&t| t <= MAX_DOFS);
        if total.is_none() {
            return Err(AmliError::InvalidGrid(format!(
                "{n}^{dim} unknowns exceed the limit of {MAX_DOFS}"
            )));
        }
        grids.push(Grid { dim, n });
    }
    let matrix = poisson_matrix(grids[levels - 1]);
    Ok(PoissonProblem { grids, matrix })
}

pub fn poisson_matrix(g: Grid) -> CsrMatrix {
    let n = g.n;
    let mut t = Vec::new();
    if g.dim == 1 {
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
    } else {
        for j in 1..=n {
            for i in 1..=n {
                let r = g.index(i, j);
                t.push((r, r, 4.0));
                if i > 1 {
                    t.push((r, g.index(i - 1, j), -1.0));
                }
                if i < n {
                    t.push((r, g.index(i + 1, j), -1.0));
                }
                if j > 1 {
                    t.push((r, g.index(i, j - 1), -1.0));
                }
                if j < n {
                    t.push((r, g.index(i, j + 1), -1.0));
                }
            }
        }
    }
    CsrMatrix::from_triplets(g.ndofs(), g.ndofs(), &t).expect("stencil indices in range")
}

/// Reordering that puts fine-only unknowns first and coarse unknowns last.
///
/// New index `i` holds old index `perm[i]`; the first `n_fine` entries are
/// the fine-only unknowns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub perm: Vec<usize>,
    pub n_fine: usize,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn n_coarse(&self) -> usize {
        self.perm.len() - self.n_fine
    }

    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.perm.len()];
        for (new, &old) in self.perm.iter().enumerate() {
            inv[old] = new;
        }
        inv
    }

    /// Natural ordering to partitioned ordering.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.perm.iter().map(|&o| x[o]).collect()
    }

    /// Partitioned ordering back to natural ordering.
    pub fn backward(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; y.len()];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// Coarse unknowns are the even-numbered points (even-even in 2D), kept in
/// their natural order, which is also the natural order of the coarse grid.
pub fn partition_fc(g: Grid) -> Result<Partition> {
    if g.coarse().is_none() {
        return Err(AmliError::InvalidGrid(format!(
            "grid with {} points per direction has no coarse parent",
            g.n
        )));
    }
    let is_coarse = |r: usize| -> bool {
        let i = r % g.n + 1;
        let j = r / g.n + 1;
        i % 2 == 0 && (g.dim == 1 || j % 2 == 0)
    };
    partition_from_mask(&(0..g.ndofs()).map(is_coarse).collect::<Vec<_>>())
}

/// Partition from an explicit list of coarse unknowns (0-based).
pub fn partition_from_coarse(n: usize, coarse: &[usize]) -> Result<Partition> {
    let mut mask = vec![false; n];
    for &c in coarse {
        if c >= n {
            return Err(AmliError::Config(format!("coarse index {c} out of range for dimension {n}")));
        }
        if mask[c] {
            return Err(AmliError::Config(format!("coarse index {c} listed twice")));
        }
        mask[c] = true;
    }
    partition_from_mask(&mask)
}

fn partition_from_mask(mask: &[bool]) -> Result<Partition> {
    let fine: Vec<usize> = (0..mask.len()).filter(|&i| !mask[i]).collect();
    let n_fine = fine.len();
    if n_fine == 0 || n_fine == mask.len() {
        return Err(AmliError::Config("both the fine and the coarse set must be nonempty".into()));
    }
    let mut perm = fine;
    perm.extend((0..mask.len()).filter(|&i| mask[i]));
    Ok(Partition { perm, n_fine })
}

/// Linear (1D) or bilinear (2D) interpolation from the coarse grid to the
/// fine-only points, rows in partitioned order. Boundary neighbours carry
/// zero values and are dropped.
pub fn interpolation_geometric(g: Grid, part: &Partition) -> Result<CsrMatrix> {
    let cg = g
        .coarse()
        .ok_or_else(|| AmliError::InvalidGrid("grid has no coarse parent".into()))?;
    let nc = cg.n;
    // coarse point (2a, 2b) has coarse index (b-1) nc + (a-1)
    let cidx = |i: usize, j: usize| -> Option<usize> {
        if i == 0 || i > 2 * nc || i % 2 != 0 {
            return None;
        }
        if g.dim == 1 {
            return Some(i / 2 - 1);
        }
        if j == 0 || j > 2 * nc || j % 2 != 0 {
            return None;
        }
        Some((j / 2 - 1) * nc + (i / 2 - 1))
    };
    let mut t = Vec::new();
    for (row, &r) in part.perm[..part.n_fine].iter().enumerate() {
        let i = r % g.n + 1;
        let j = r / g.n + 1;
        let mut push = |c: Option<usize>, w: f64| {
            if let Some(c) = c {
                t.push((row, c, w));
            }
        };
        if g.dim == 1 {
            push(cidx(i - 1, 1), 0.5);
            push(cidx(i + 1, 1), 0.5);
        } else {
            match (i % 2, j % 2) {
                (1, 0) => {
                    push(cidx(i - 1, j), 0.5);
                    push(cidx(i + 1, j), 0.5);
                }
                (0, 1) => {
                    push(cidx(i, j - 1), 0.5);
                    push(cidx(i, j + 1), 0.5);
                }
                _ => {
                    for (di, dj) in [(0, 0), (2, 0), (0, 2), (2, 2)] {
                        push(cidx(i + di - 1, j + dj - 1), 0.25);
                    }
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(part.n_fine, part.n_coarse(), &t)?)
}

/// Direct algebraic interpolation: each fine unknown takes the coarse
/// neighbours it is negatively coupled to, weighted by `a_ic / sum_c a_ic`.
/// `a` is in natural ordering.
pub fn interpolation_algebraic(a: &CsrMatrix, part: &Partition) -> Result<CsrMatrix> {
    let inv = part.inverse();
    let mut t = Vec::new();
    for (row, &r) in part.perm[..part.n_fine].iter().enumerate() {
        let (c, v) = a.row(r);
        let mut entries = Vec::new();
        for (&j, &x) in c.iter().zip(v) {
            if j != r && x < 0.0 && inv[j] >= part.n_fine {
                entries.push((inv[j] - part.n_fine, x));
            }
        }
        let s: f64 = entries.iter().map(|e| e.1).sum();
        for (col, x) in entries {
            t.push((row, col, x / s));
        }
    }
    Ok(CsrMatrix::from_triplets(part.n_fine, part.n_coarse(), &t)?)
}
