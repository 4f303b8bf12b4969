//! Multilevel structure: nested splittings, the two-level hierarchical basis
//! transform, level blocks and per-level stabilization polynomials.
//!
//! Level `k` (`k = 1..=l`) holds the nodal matrix `A^(k)`, reordered so that
//! fine-only unknowns come first. With `J = [[I, W], [0, I]]` the transformed
//! matrix `Ã = J^T A J` has blocks `Ã11 = A11`, `Ã12 = A11 W + A12`,
//! `Ã21 = Ã12^T` and `Ã22`, and `Ã22` is the next coarser nodal matrix
//! `A^(k-1)`. `A^(0)` is factored directly.

pub mod grid;
pub mod smoother;

pub use grid::{
    gen_poisson, interpolation_algebraic, interpolation_geometric, partition_fc,
    partition_from_coarse, poisson_matrix, Grid, Partition, PoissonProblem,
};
pub use smoother::{build_smoother, Smoother, SmootherKind};

use crate::polyapprox::{best_q, cheb_accel_q, MonomialPoly, SpectralInterval, DEFAULT_MAX_DEGREE};
use crate::sparse::{extreme_eigs_in, CsrMatrix, DenseFactor, FnOperator, LinearOperator};
use crate::{analysis, precond, AmliError, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Largest top-level coarse matrix factored when the `exact` family truncates the hierarchy.
pub const EXACT_COARSE_LIMIT: usize = 4096;

/// Blocks of `Ã = J^T A J` for a matrix already in fine-first ordering.
#[derive(Debug, Clone)]
pub struct HbTransform {
    pub w: CsrMatrix,
    pub a11: CsrMatrix,
    pub a12: CsrMatrix,
    pub a21: CsrMatrix,
    pub a22: CsrMatrix,
}

pub fn hb_transform(a_perm: &CsrMatrix, n_fine: usize, w: CsrMatrix) -> Result<HbTransform> {
    let n = a_perm.nrows();
    if n_fine >= n || w.nrows() != n_fine || w.ncols() != n - n_fine {
        return Err(AmliError::InconsistentHierarchy(format!(
            "interpolation is {}x{}, expected {}x{}",
            w.nrows(),
            w.ncols(),
            n_fine,
            n - n_fine
        )));
    }
    let f: Vec<usize> = (0..n_fine).collect();
    let c: Vec<usize> = (n_fine..n).collect();
    let a11 = a_perm.extract(&f, &f);
    let a12 = a_perm.extract(&f, &c);
    let a22 = a_perm.extract(&c, &c);
    let wt = w.transpose();
    let t12 = a11.matmul(&w)?.add_scaled(1.0, &a12, 1.0)?;
    // W^T (A11 W + A12) + A21 W + A22, symmetrized against rounding
    let s = wt
        .matmul(&t12)?
        .add_scaled(1.0, &a12.transpose().matmul(&w)?, 1.0)?
        .add_scaled(1.0, &a22, 1.0)?;
    let t22 = s.add_scaled(0.5, &s.transpose(), 0.5)?;
    Ok(HbTransform {
        w,
        a11,
        a21: t12.transpose(),
        a12: t12,
        a22: t22,
    })
}

/// `P^T A P`
pub fn galerkin_coarse(a: &CsrMatrix, p: &CsrMatrix) -> Result<CsrMatrix> {
    Ok(p.transpose().matmul(&a.matmul(p)?)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolyFamily {
    /// Best uniform approximation to `1/x` of degree `nu - 1`.
    BestApprox,
    /// Constant (`nu = 1`) or linear (`nu = 2`) Chebyshev acceleration.
    Chebyshev,
    /// Exact coarse solve: a two-level method with a direct `A^(l-1)` factor.
    Exact,
    /// `q = rho0`, i.e. the unstabilized V-cycle.
    Identity,
}

impl PolyFamily {
    pub fn name(&self) -> &'static str {
        match self {
            PolyFamily::BestApprox => "bestapprox",
            PolyFamily::Chebyshev => "chebyshev",
            PolyFamily::Exact => "exact",
            PolyFamily::Identity => "identity",
        }
    }
}

/// Polynomial degrees `nus[k-1] = nu_k` for `k = 1..=l` and the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSpec {
    pub nus: Vec<usize>,
    pub family: PolyFamily,
}

impl CycleSpec {
    pub fn new(mut nus: Vec<usize>, family: PolyFamily) -> Result<Self> {
        if nus.is_empty() {
            return Err(AmliError::Config("cycle needs at least one level".into()));
        }
        if let Some(k) = nus.iter().position(|&n| n == 0) {
            return Err(AmliError::Config(format!("nu_{} must be at least 1", k + 1)));
        }
        if let Some(&n) = nus.iter().find(|&&n| n > DEFAULT_MAX_DEGREE + 1) {
            return Err(AmliError::Config(format!(
                "nu = {n} exceeds the maximum {}",
                DEFAULT_MAX_DEGREE + 1
            )));
        }
        match family {
            PolyFamily::Identity => nus.iter_mut().for_each(|n| *n = 1),
            PolyFamily::Chebyshev if nus.iter().any(|&n| n > 2) => {
                return Err(AmliError::Config("the chebyshev family supports nu = 1 or 2".into()))
            }
            _ => {}
        }
        Ok(Self { nus, family })
    }

    pub fn v_cycle(levels: usize, family: PolyFamily) -> Result<Self> {
        Self::new(vec![1; levels], family)
    }

    /// `nu_1 = 1` (the level above the direct solve needs no stabilization),
    /// `nu_k = 2` above.
    pub fn w_cycle(levels: usize, family: PolyFamily) -> Result<Self> {
        let nus = (0..levels).map(|k| if k == 0 { 1 } else { 2 }).collect();
        Self::new(nus, family)
    }

    pub fn levels(&self) -> usize {
        self.nus.len()
    }

    /// Coarsest-level solves per application of the finest preconditioner.
    pub fn coarse_visits(&self) -> u128 {
        if self.family == PolyFamily::Exact {
            return 1;
        }
        self.nus.iter().map(|&n| n as u128).product()
    }
}

/// `q^(k)` for the interval `[1/rho1, 1/rho0]` of `B^(k-1)^{-1} A^(k-1)`,
/// padded with zero coefficients to exactly `nu` entries.
pub fn stabilization_poly(family: PolyFamily, nu: usize, rho: (f64, f64)) -> Result<MonomialPoly> {
    let (rho0, rho1) = rho;
    if !(rho0 > 0.0 && rho1 >= rho0) {
        return Err(AmliError::Config(format!("invalid rho bounds ({rho0}, {rho1})")));
    }
    let lo = 1.0 / rho1;
    let hi = 1.0 / rho0;
    let q = match family {
        PolyFamily::Identity => MonomialPoly::constant(rho0),
        PolyFamily::BestApprox => {
            if hi / lo - 1.0 <= 1e-12 {
                MonomialPoly::constant(1.0 / lo)
            } else {
                best_q(nu - 1, &SpectralInterval::new(lo, hi)?)?
            }
        }
        PolyFamily::Chebyshev => match nu {
            1 => MonomialPoly::constant(2.0 * rho0 * rho1 / (rho0 + rho1)),
            2 => cheb_accel_q(rho0, rho1)?,
            _ => return Err(AmliError::Config("the chebyshev family supports nu = 1 or 2".into())),
        },
        PolyFamily::Exact => {
            if hi / lo - 1.0 > 1e-12 {
                return Err(AmliError::Config(
                    "the exact family has no polynomial for a nondegenerate interval".into(),
                ));
            }
            MonomialPoly::constant(1.0 / lo)
        }
    };
    let mut c = q.coeffs;
    c.resize(nu.max(c.len()), 0.0);
    Ok(MonomialPoly::new(c)?)
}

/// Source of the bounds `rho^(k)` used to build each `q^(k+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum RhoMode {
    /// Propagate through the level recursion from `rho^(0) = (1, 1)`.
    /// `thetas[k-1]` are the constants of level `k`; missing values are
    /// measured densely.
    Theory { thetas: Option<Vec<(f64, f64)>> },
    /// Lanczos estimates of the spectrum of `B^(k)^{-1} A^(k)`.
    Measure,
    /// `rhos[k] = rho^(k)` for `k = 0..l-1`.
    Given { rhos: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub cycle: CycleSpec,
    pub smoother: SmootherKind,
    pub rho: RhoMode,
    /// Largest `A^(0)` accepted for the direct solve.
    pub coarse_threshold: usize,
    /// Largest level on which `theta` is measured by dense eigensolves.
    pub dense_limit: usize,
    pub lanczos_iters: usize,
    /// Measured intervals are widened by this factor on both ends.
    pub widen: f64,
}

impl BuildConfig {
    pub fn new(cycle: CycleSpec) -> Self {
        Self {
            cycle,
            smoother: SmootherKind::SymmetricGaussSeidel,
            rho: RhoMode::Theory { thetas: None },
            coarse_threshold: 64,
            dense_limit: 200,
            lanczos_iters: 30,
            widen: 1.01,
        }
    }
}

/// Input to [`build_hierarchy`].
#[derive(Debug, Clone)]
pub enum Problem {
    /// Geometric splitting of nested grids (coarsest first).
    Grid { grids: Vec<Grid>, matrix: CsrMatrix },
    /// User splitting: `coarse_sets[i]` lists the coarse unknowns (0-based,
    /// in the ordering of that level) starting from the finest level.
    Algebraic { matrix: CsrMatrix, coarse_sets: Vec<Vec<usize>> },
}

impl From<PoissonProblem> for Problem {
    fn from(p: PoissonProblem) -> Self {
        Problem::Grid {
            grids: p.grids,
            matrix: p.matrix,
        }
    }
}

impl Problem {
    pub fn matrix(&self) -> &CsrMatrix {
        match self {
            Problem::Grid { matrix, .. } | Problem::Algebraic { matrix, .. } => matrix,
        }
    }

    pub fn levels(&self) -> usize {
        match self {
            Problem::Grid { grids, .. } => grids.len() - 1,
            Problem::Algebraic { coarse_sets, .. } => coarse_sets.len(),
        }
    }

    /// Split the matrix at refinement step `step` (0 = finest).
    fn split(&self, step: usize, a: &CsrMatrix) -> Result<(Partition, CsrMatrix)> {
        match self {
            Problem::Grid { grids, .. } => {
                let g = grids[grids.len() - 1 - step];
                let part = partition_fc(g)?;
                let w = interpolation_geometric(g, &part)?;
                Ok((part, w))
            }
            Problem::Algebraic { coarse_sets, .. } => {
                let part = partition_from_coarse(a.nrows(), &coarse_sets[step])?;
                let w = interpolation_algebraic(a, &part)?;
                Ok((part, w))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Level {
    pub k: usize,
    /// `A^(k)` in natural ordering.
    pub a: CsrMatrix,
    pub partition: Partition,
    pub w: CsrMatrix,
    wt: CsrMatrix,
    pub a11: CsrMatrix,
    /// `Ã12 = A11 W + A12`
    pub a12: CsrMatrix,
    pub a21: CsrMatrix,
    pub c11: Smoother,
    pub nu: usize,
    pub q: MonomialPoly,
}

impl Level {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_fine(&self) -> usize {
        self.partition.n_fine
    }

    pub fn n_coarse(&self) -> usize {
        self.partition.n_coarse()
    }

    /// `J^T Π d`: natural ordering to hierarchical-basis coordinates.
    pub fn to_hb(&self, d: &[f64]) -> Vec<f64> {
        let mut x = self.partition.forward(d);
        let (x1, x2) = x.split_at_mut(self.n_fine());
        self.wt.spmv_add(1.0, x1, x2);
        x
    }

    /// `Π^T J v`
    pub fn from_hb(&self, v: &[f64]) -> Vec<f64> {
        let mut y = v.to_vec();
        let (y1, y2) = y.split_at_mut(self.n_fine());
        self.w.spmv_add(1.0, y2, y1);
        self.partition.backward(&y)
    }

    /// `J` in partitioned ordering.
    pub fn j_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let nf = self.n_fine();
        let mut j = DMatrix::identity(n, n);
        j.view_mut((0, nf), (nf, n - nf)).copy_from(&self.w.to_dense());
        j
    }

    /// `Ã` assembled from its blocks, given `Ã22 = A^(k-1)`.
    pub fn atilde_dense(&self, a22: &CsrMatrix) -> DMatrix<f64> {
        let n = self.dim();
        let nf = self.n_fine();
        let mut m = DMatrix::zeros(n, n);
        m.view_mut((0, 0), (nf, nf)).copy_from(&self.a11.to_dense());
        m.view_mut((0, nf), (nf, n - nf)).copy_from(&self.a12.to_dense());
        m.view_mut((nf, 0), (n - nf, nf)).copy_from(&self.a21.to_dense());
        m.view_mut((nf, nf), (n - nf, n - nf)).copy_from(&a22.to_dense());
        m
    }
}

#[derive(Debug, Clone)]
pub struct Hierarchy {
    /// `levels[i]` is level `k = i + 1`, coarse to fine. With the exact
    /// family only the finest level is kept.
    pub levels: Vec<Level>,
    pub a0: CsrMatrix,
    pub coarse_factor: DenseFactor,
    pub cycle: CycleSpec,
    /// `rhos[i]` are the bounds from which `levels[i].q` was built.
    pub rhos: Vec<(f64, f64)>,
    /// `theta` pairs used in theory mode, per stored level.
    pub thetas: Vec<Option<(f64, f64)>>,
}

impl Hierarchy {
    pub fn top(&self) -> &Level {
        self.levels.last().expect("nonempty hierarchy")
    }

    pub fn dim(&self) -> usize {
        self.top().dim()
    }

    /// The matrix below `levels[i]`, i.e. its `Ã22`.
    pub fn coarse_matrix(&self, i: usize) -> &CsrMatrix {
        if i == 0 {
            &self.a0
        } else {
            &self.levels[i - 1].a
        }
    }

    pub fn coarse_visits(&self) -> u128 {
        self.levels.iter().map(|l| l.nu as u128).product()
    }

    pub fn summary(&self) -> HierarchySummary {
        HierarchySummary {
            family: self.cycle.family,
            coarse_dim: self.a0.nrows(),
            coarse_visits: self.coarse_visits() as f64,
            levels: self
                .levels
                .iter()
                .enumerate()
                .map(|(i, l)| LevelSummary {
                    k: l.k,
                    dim: l.dim(),
                    nnz: l.a.nnz(),
                    nu: l.nu,
                    rho0: self.rhos[i].0,
                    rho1: self.rhos[i].1,
                    theta: self.thetas[i],
                    q: l.q.coeffs.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub k: usize,
    pub dim: usize,
    pub nnz: usize,
    pub nu: usize,
    pub rho0: f64,
    pub rho1: f64,
    pub theta: Option<(f64, f64)>,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchySummary {
    pub family: PolyFamily,
    pub coarse_dim: usize,
    pub coarse_visits: f64,
    pub levels: Vec<LevelSummary>,
}

pub fn build_hierarchy(problem: &Problem, cfg: &BuildConfig) -> Result<Hierarchy> {
    let l = problem.levels();
    if l == 0 {
        return Err(AmliError::Config("at least one refinement level is required".into()));
    }
    if cfg.cycle.levels() != l {
        return Err(AmliError::Config(format!(
            "cycle lists {} degrees for {l} levels",
            cfg.cycle.levels()
        )));
    }
    if !cfg.smoother.is_symmetric() {
        return Err(AmliError::NonSymmetricSmoother(cfg.smoother.name().into()));
    }
    let exact = cfg.cycle.family == PolyFamily::Exact;
    let steps = if exact { 1 } else { l };

    let mut a = problem.matrix().clone();
    if !a.is_symmetric(1e-12) {
        return Err(crate::SparseError::NotSymmetric.into());
    }
    let mut levels = Vec::with_capacity(steps);
    for step in 0..steps {
        let k = l - step;
        let (partition, w) = problem.split(step, &a)?;
        let hb = hb_transform(&a.permute(&partition.perm), partition.n_fine, w)?;
        let c11 = build_smoother(&hb.a11, cfg.smoother)?;
        let nu = if exact { 1 } else { cfg.cycle.nus[k - 1] };
        levels.push(Level {
            k,
            a,
            partition,
            wt: hb.w.transpose(),
            w: hb.w,
            a11: hb.a11,
            a12: hb.a12,
            a21: hb.a21,
            c11,
            nu,
            q: MonomialPoly::constant(1.0),
        });
        a = hb.a22;
    }
    levels.reverse();
    let limit = if exact { EXACT_COARSE_LIMIT } else { cfg.coarse_threshold };
    if a.nrows() > limit {
        return Err(AmliError::CoarseTooLarge { n: a.nrows(), limit });
    }
    let coarse_factor = DenseFactor::factor(&a)?;
    let mut h = Hierarchy {
        levels,
        a0: a,
        coarse_factor,
        cycle: cfg.cycle.clone(),
        rhos: Vec::new(),
        thetas: Vec::new(),
    };
    assign_polynomials(&mut h, cfg)?;
    Ok(h)
}

fn assign_polynomials(h: &mut Hierarchy, cfg: &BuildConfig) -> Result<()> {
    let n = h.levels.len();
    let family = h.cycle.family;
    let mut rho = (1.0, 1.0);
    for i in 0..n {
        if i > 0 {
            rho = match &cfg.rho {
                RhoMode::Given { rhos } => *rhos.get(h.levels[i].k - 1).ok_or_else(|| {
                    AmliError::Config(format!("no rho given for level {}", h.levels[i].k - 1))
                })?,
                RhoMode::Measure => measure_rho(h, i - 1, cfg)?,
                RhoMode::Theory { thetas } => {
                    let theta = match thetas.as_ref().and_then(|t| pick_theta(t, h.levels[i - 1].k)) {
                        Some(t) => t,
                        None => {
                            if h.levels[i - 1].dim() > cfg.dense_limit {
                                return Err(AmliError::ThetaRequired { level: h.levels[i - 1].k });
                            }
                            analysis::measure_level_theta(h, i - 1)?
                        }
                    };
                    h.thetas[i - 1] = Some(theta);
                    let step = analysis::level_step(theta, rho, &h.levels[i - 1].q)?;
                    (step.rho0, step.rho1)
                }
            };
        }
        let lvl = &mut h.levels[i];
        lvl.q = if family == PolyFamily::Exact {
            MonomialPoly::constant(1.0)
        } else {
            stabilization_poly(family, lvl.nu, rho)?
        };
        h.rhos.push(rho);
        h.thetas.push(None);
    }
    Ok(())
}

/// `thetas[k-1]`, or the single pair when only one is supplied.
fn pick_theta(thetas: &[(f64, f64)], k: usize) -> Option<(f64, f64)> {
    if thetas.len() == 1 {
        return Some(thetas[0]);
    }
    thetas.get(k - 1).copied()
}

/// Bounds `rho^(k)` from the spectrum of `B^(k)^{-1} A^(k)` with `k` the
/// level stored at `levels[i]`.
fn measure_rho(h: &Hierarchy, i: usize, cfg: &BuildConfig) -> Result<(f64, f64)> {
    let b = precond::AmliPreconditioner::at_level(h, i)?;
    let a = &h.levels[i].a;
    let n = a.nrows();
    let op = FnOperator::new(n, |x: &[f64], y: &mut [f64]| {
        let ax = a.apply(x);
        b.apply_into(&ax, y);
    });
    let est = extreme_eigs_in(&op, Some(a), n, cfg.lanczos_iters);
    if !(est.low > 0.0) {
        return Err(AmliError::PreconditionerIndefinite {
            iteration: 0,
            value: est.low,
        });
    }
    let lo = est.low / cfg.widen;
    let hi = est.high * cfg.widen;
    Ok((1.0 / hi, 1.0 / lo))
}
