//! Preconditioner applications and the PCG driver.

use crate::hierarchy::{Hierarchy, Level, Smoother};
use crate::polyapprox::MonomialPoly;
use crate::sparse::{dot, horner_matrix_apply, tridiag_extremes, CsrMatrix, DenseFactor, LinearOperator};
use crate::{AmliError, Result, SparseError};
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(SparseError::DimensionMismatch { expected, found }.into());
    }
    Ok(())
}

/// `M̄^{-1} x = (M^{-1} + M^{-T} - M^{-T} A M^{-1}) x` as a forward sweep,
/// one residual and a backward sweep.
pub fn symmetrized_smoother_apply(m: &Smoother, a: &CsrMatrix, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(a.nrows(), x.len())?;
    check_dim(m.dim(), x.len())?;
    let y = m.apply_inv(x);
    let mut r = x.to_vec();
    a.spmv_add(-1.0, &y, &mut r);
    m.solve_transpose_in_place(&mut r);
    Ok(y.iter().zip(&r).map(|(a, b)| a + b).collect())
}

/// `B_{H,nu}^{-1} r = B_H^{-1} q(A_H B_H^{-1}) r`
pub fn amli_coarse_stabilize(
    bh_inv: &dyn LinearOperator,
    ah: &dyn LinearOperator,
    q: &MonomialPoly,
    r: &[f64],
) -> Result<Vec<f64>> {
    let u = horner_matrix_apply(q, ah, bh_inv, r)?;
    Ok(bh_inv.apply(&u))
}

/// Coarse-space solver of the two-level method.
pub enum CoarseSolve {
    /// `A_H^{-1}` by a direct factorization.
    Exact(DenseFactor),
    /// A given preconditioner `B_H^{-1}`.
    Initial(Box<dyn LinearOperator>),
    /// `B_{H,nu}^{-1} = q(B_H^{-1} A_H) B_H^{-1}`
    Stabilized {
        bh_inv: Box<dyn LinearOperator>,
        ah: CsrMatrix,
        q: MonomialPoly,
    },
}

impl CoarseSolve {
    pub fn dim(&self) -> usize {
        match self {
            CoarseSolve::Exact(f) => f.n(),
            CoarseSolve::Initial(b) => b.dim(),
            CoarseSolve::Stabilized { bh_inv, .. } => bh_inv.dim(),
        }
    }

    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        match self {
            CoarseSolve::Exact(f) => f.apply(r),
            CoarseSolve::Initial(b) => b.apply(r),
            CoarseSolve::Stabilized { bh_inv, ah, q } => {
                amli_coarse_stabilize(bh_inv.as_ref(), ah, q, r).expect("dimensions checked at construction")
            }
        }
    }
}

/// Multiplicative two-level preconditioner: smoother `M` on the full matrix,
/// transfer `P` and a coarse solver.
pub struct TwoLevelConfig {
    pub a: CsrMatrix,
    pub m: Smoother,
    pub p: CsrMatrix,
    pt: CsrMatrix,
    pub coarse: CoarseSolve,
}

impl TwoLevelConfig {
    pub fn new(a: CsrMatrix, m: Smoother, p: CsrMatrix, coarse: CoarseSolve) -> Result<Self> {
        check_dim(a.nrows(), m.dim())?;
        check_dim(a.nrows(), p.nrows())?;
        check_dim(p.ncols(), coarse.dim())?;
        if let CoarseSolve::Stabilized { ah, q, .. } = &coarse {
            check_dim(p.ncols(), ah.nrows())?;
            if q.coeffs.is_empty() {
                return Err(crate::PolyError::Empty.into());
            }
        }
        Ok(Self {
            pt: p.transpose(),
            a,
            m,
            p,
            coarse,
        })
    }

    /// `y = M^{-1} x; z = y + P B̃_H^{-1} P^T (x - A y); z + M^{-T} (x - A z)`
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.a.nrows(), x.len())?;
        let y = self.m.apply_inv(x);
        let mut r = x.to_vec();
        self.a.spmv_add(-1.0, &y, &mut r);
        let rc = self.pt.apply(&r);
        let ec = self.coarse.apply(&rc);
        let mut z = y;
        self.p.spmv_add(1.0, &ec, &mut z);
        let mut r = x.to_vec();
        self.a.spmv_add(-1.0, &z, &mut r);
        self.m.solve_transpose_in_place(&mut r);
        Ok(z.iter().zip(&r).map(|(a, b)| a + b).collect())
    }
}

pub fn two_level_apply(cfg: &TwoLevelConfig, x: &[f64]) -> Result<Vec<f64>> {
    cfg.apply(x)
}

impl LinearOperator for TwoLevelConfig {
    fn dim(&self) -> usize {
        self.a.nrows()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.apply(x).expect("dimension checked by caller"));
    }
}

/// The linear AMLI preconditioner `B^(k)^{-1}` of one level of a hierarchy,
/// evaluated with explicit per-level visit counters.
pub struct AmliPreconditioner<'a> {
    h: &'a Hierarchy,
    top: usize,
    coarse_solves: AtomicUsize,
}

impl<'a> AmliPreconditioner<'a> {
    pub fn new(h: &'a Hierarchy) -> Self {
        Self {
            h,
            top: h.levels.len() - 1,
            coarse_solves: AtomicUsize::new(0),
        }
    }

    /// Preconditioner for `levels[i]`; only levels `0..=i` are used.
    pub fn at_level(h: &'a Hierarchy, i: usize) -> Result<Self> {
        if i >= h.levels.len() {
            return Err(AmliError::InconsistentHierarchy(format!(
                "level index {i} out of {}",
                h.levels.len()
            )));
        }
        Ok(Self {
            h,
            top: i,
            coarse_solves: AtomicUsize::new(0),
        })
    }

    pub fn level(&self) -> &Level {
        &self.h.levels[self.top]
    }

    /// Coarsest-level solves performed so far.
    pub fn coarse_solves(&self) -> usize {
        self.coarse_solves.load(Ordering::Relaxed)
    }

    pub fn apply_checked(&self, d: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.level().dim(), d.len())?;
        Ok(self.run(d))
    }

    fn run(&self, d: &[f64]) -> Vec<f64> {
        let h = self.h;
        let top = self.top;
        let mut sigma = vec![0usize; top + 1];
        let mut v1: Vec<Vec<f64>> = vec![Vec::new(); top + 1];
        let mut w: Vec<Vec<f64>> = vec![Vec::new(); top + 1];
        let mut rhs: Vec<Vec<f64>> = vec![Vec::new(); top + 1];
        rhs[top] = d.to_vec();
        let mut j = top;
        // latest solution on the level below j
        let mut vc: Vec<f64> = Vec::new();
        loop {
            // forward: descend from level j to the coarsest solve
            loop {
                let lvl = &h.levels[j];
                let c = &lvl.q.coeffs;
                sigma[j] += 1;
                let dc: Vec<f64> = if sigma[j] == 1 {
                    let x = lvl.to_hb(&rhs[j]);
                    let nf = lvl.n_fine();
                    let mut y1 = x[..nf].to_vec();
                    lvl.c11.solve_in_place(&mut y1);
                    let mut wj = x[nf..].to_vec();
                    lvl.a21.spmv_add(-1.0, &y1, &mut wj);
                    let dc = wj.iter().map(|x| c[lvl.nu - 1] * x).collect();
                    v1[j] = y1;
                    w[j] = wj;
                    dc
                } else {
                    let mut dc = vec![0.0; lvl.n_coarse()];
                    h.coarse_matrix(j).spmv_into(&vc, &mut dc);
                    let a = c[lvl.nu - sigma[j]];
                    dc.iter_mut().zip(&w[j]).for_each(|(x, wi)| *x += a * wi);
                    dc
                };
                if j == 0 {
                    vc = h.coarse_factor.apply(&dc);
                    self.coarse_solves.fetch_add(1, Ordering::Relaxed);
                    break;
                }
                rhs[j - 1] = dc;
                j -= 1;
            }
            // backward: ascend while levels have completed their visits
            loop {
                let lvl = &h.levels[j];
                if sigma[j] < lvl.nu {
                    break;
                }
                let mut t = vec![0.0; lvl.n_fine()];
                lvl.a12.spmv_into(&vc, &mut t);
                lvl.c11.solve_in_place(&mut t);
                let mut v = std::mem::take(&mut v1[j]);
                v.iter_mut().zip(&t).for_each(|(a, b)| *a -= b);
                v.extend_from_slice(&vc);
                let out = lvl.from_hb(&v);
                sigma[j] = 0;
                if j == top {
                    return out;
                }
                vc = out;
                j += 1;
            }
        }
    }
}

impl LinearOperator for AmliPreconditioner<'_> {
    fn dim(&self) -> usize {
        self.level().dim()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.run(x));
    }
}

pub fn amli_apply(h: &Hierarchy, d: &[f64]) -> Result<Vec<f64>> {
    AmliPreconditioner::new(h).apply_checked(d)
}

/// Fine-block smoothing used by [`f_smoothing_apply`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FSmoothing {
    /// `C11^{-1}`: the block factorization itself.
    Plain,
    /// `2 C11^{-1} - C11^{-1} A11 C11^{-1}`: the two-level method with an
    /// f-smoother and symmetric smoothing.
    Symmetrized,
}

/// AMLI step in hierarchical-basis coordinates as the explicit sum
/// `[[S, 0], [0, 0]] + [-C11^{-1} Ã12; I] Z^{-1} [-Ã21 C11^{-1}, I]`.
pub fn f_smoothing_apply(
    lvl: &Level,
    z_inv: &dyn LinearOperator,
    variant: FSmoothing,
    x: &[f64],
) -> Result<Vec<f64>> {
    check_dim(lvl.dim(), x.len())?;
    check_dim(lvl.n_coarse(), z_inv.dim())?;
    let nf = lvl.n_fine();
    let (x1, x2) = x.split_at(nf);
    let cx1 = lvl.c11.apply_inv(x1);
    let mut out = match variant {
        FSmoothing::Plain => cx1.clone(),
        FSmoothing::Symmetrized => {
            let mut t = x1.to_vec();
            lvl.a11.spmv_add(-1.0, &cx1, &mut t);
            lvl.c11.solve_in_place(&mut t);
            cx1.iter().zip(&t).map(|(a, b)| a + b).collect()
        }
    };
    let mut r = x2.to_vec();
    lvl.a21.spmv_add(-1.0, &cx1, &mut r);
    let y2 = z_inv.apply(&r);
    let mut t = vec![0.0; nf];
    lvl.a12.spmv_into(&y2, &mut t);
    lvl.c11.solve_in_place(&mut t);
    out.iter_mut().zip(&t).for_each(|(a, b)| *a -= b);
    out.extend_from_slice(&y2);
    Ok(out)
}

/// The same operator in smoother form with `M^{-1} = [[C11^{-1}, 0], [0, 0]]`
/// and `P = [0; I]`, applied to `Ã` whose coarse block is `a22`.
pub fn f_smoothing_apply_mform(
    lvl: &Level,
    a22: &CsrMatrix,
    z_inv: &dyn LinearOperator,
    variant: FSmoothing,
    x: &[f64],
) -> Result<Vec<f64>> {
    check_dim(lvl.dim(), x.len())?;
    check_dim(lvl.n_coarse(), a22.nrows())?;
    let nf = lvl.n_fine();
    let atilde = |v: &[f64]| -> Vec<f64> {
        let (v1, v2) = v.split_at(nf);
        let mut y = lvl.a11.apply(v1);
        lvl.a12.spmv_add(1.0, v2, &mut y);
        let mut y2 = a22.apply(v2);
        lvl.a21.spmv_add(1.0, v1, &mut y2);
        y.extend(y2);
        y
    };
    let minv = |v: &[f64]| -> Vec<f64> {
        let mut y = lvl.c11.apply_inv(&v[..nf]);
        y.resize(v.len(), 0.0);
        y
    };
    let sub = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };
    let y = minv(x);
    let r = sub(x, &atilde(&y));
    let ec = z_inv.apply(&r[nf..]);
    let mut pe = vec![0.0; nf];
    pe.extend(ec);
    match variant {
        FSmoothing::Symmetrized => {
            let z: Vec<f64> = y.iter().zip(&pe).map(|(a, b)| a + b).collect();
            let r = sub(x, &atilde(&z));
            Ok(z.iter().zip(minv(&r)).map(|(a, b)| a + b).collect())
        }
        FSmoothing::Plain => {
            // (I - M^{-T} Ã) P e
            let corr = minv(&atilde(&pe));
            Ok(y.iter().zip(&pe).zip(&corr).map(|((a, b), c)| a + b - c).collect())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcgOptions {
    pub tol: f64,
    pub maxit: usize,
}

impl Default for PcgOptions {
    fn default() -> Self {
        Self { tol: 1e-8, maxit: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `sqrt(r^T B^{-1} r)`, starting with the initial residual.
    pub residual_history: Vec<f64>,
    /// Running condition estimate after each iteration.
    pub kappa_history: Vec<f64>,
    pub kappa_estimate: f64,
    pub converged: bool,
}

impl SolveReport {
    /// `iteration,residual,kappa_est`; the estimate is empty before the first step.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,residual,kappa_est\n");
        for (i, r) in self.residual_history.iter().enumerate() {
            let k = if i == 0 {
                String::new()
            } else {
                format!("{:.16e}", self.kappa_history[i - 1])
            };
            s.push_str(&format!("{i},{r:.16e},{k}\n"));
        }
        s
    }
}

/// Preconditioned conjugate gradients from a zero initial guess. Stops when
/// `sqrt(r^T B^{-1} r) <= tol * sqrt(r0^T B^{-1} r0)`.
pub fn pcg_solve(
    a: &dyn LinearOperator,
    b: &[f64],
    precond: &dyn LinearOperator,
    opts: PcgOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.dim();
    check_dim(n, b.len())?;
    check_dim(n, precond.dim())?;
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = precond.apply(&r);
    let mut rz = dot(&r, &z);
    if rz < 0.0 {
        return Err(AmliError::PreconditionerIndefinite { iteration: 0, value: rz });
    }
    let r0 = rz.sqrt();
    let mut report = SolveReport {
        iterations: 0,
        residual_history: vec![r0],
        kappa_history: Vec::new(),
        kappa_estimate: 1.0,
        converged: r0 == 0.0 || opts.tol >= 1.0,
    };
    if report.converged {
        return Ok((x, report));
    }
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut diag = Vec::new();
    let mut off = Vec::new();
    let mut prev: Option<(f64, f64)> = None; // (alpha, beta) of the previous step
    for it in 1..=opts.maxit {
        a.apply_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(AmliError::Indefinite {
                iteration: it,
                value: pap,
            });
        }
        let alpha = rz / pap;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
        precond.apply_into(&r, &mut z);
        let rz_new = dot(&r, &z);
        if rz_new < 0.0 {
            return Err(AmliError::PreconditionerIndefinite {
                iteration: it,
                value: rz_new,
            });
        }
        let beta = rz_new / rz;
        // Lanczos tridiagonal from the CG coefficients
        match prev {
            None => diag.push(1.0 / alpha),
            Some((pa, pb)) => {
                diag.push(1.0 / alpha + pb / pa);
                off.push(pb.sqrt() / pa);
            }
        }
        prev = Some((alpha, beta));
        let (lo, hi) = tridiag_extremes(&diag, &off);
        let kappa = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        report.kappa_history.push(kappa);
        report.kappa_estimate = kappa;
        report.iterations = it;
        let res = rz_new.sqrt();
        report.residual_history.push(res);
        if res <= opts.tol * r0 {
            report.converged = true;
            break;
        }
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    Ok((x, report))
}
