//! Condition-number recursion, degree calculators and numerical measurement
//! of the spectral constants.

use crate::hierarchy::{stabilization_poly, CycleSpec, Hierarchy, PolyFamily, Smoother, SmootherKind};
use crate::polyapprox::{xq_range, MonomialPoly};
use crate::precond::{pcg_solve, CoarseSolve, PcgOptions, TwoLevelConfig};
use crate::sparse::{
    assemble, extreme_eigs_in, generalized_extremes, sym_eigenvalues, CsrMatrix, DenseFactor,
    FnOperator, LinearOperator, SparseError,
};
use crate::{AmliError, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Samples of `q` on the level interval used for the positivity check.
pub const POSITIVITY_SAMPLES: usize = 10_000;

/// Chebyshev threshold at `kappa_bar = 3` as it is usually quoted. It disagrees
/// with [`chebyshev_threshold`]`(3) = 9/4`, so reports carry both.
pub const STATED_CHEBYSHEV_THRESHOLD_AT_3: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelStep {
    pub r0: f64,
    pub r1: f64,
    pub rho0: f64,
    pub rho1: f64,
}

/// One step of the level recursion: `(r0, r1)` is the range of `x q(x)` on
/// `[1/rho1_prev, 1/rho0_prev]`, then `rho0 = theta0 / max(1, r1)` and
/// `rho1 = theta1 / min(1, r0)`.
pub fn level_step(theta: (f64, f64), rho_prev: (f64, f64), q: &MonomialPoly) -> Result<LevelStep> {
    let (t0, t1) = theta;
    let (p0, p1) = rho_prev;
    if !(t0 > 0.0 && t1 >= t0 && t1.is_finite()) {
        return Err(AmliError::Config(format!("invalid theta pair ({t0}, {t1})")));
    }
    if !(p0 > 0.0 && p1 >= p0 && p1.is_finite()) {
        return Err(AmliError::Config(format!("invalid rho pair ({p0}, {p1})")));
    }
    let lo = 1.0 / p1;
    let hi = 1.0 / p0;
    for i in 0..POSITIVITY_SAMPLES {
        let x = lo + (hi - lo) * i as f64 / (POSITIVITY_SAMPLES - 1) as f64;
        let v = q.eval(x);
        if v < 0.0 {
            return Err(AmliError::NegativePolynomial { x, value: v });
        }
    }
    let (r0, r1) = xq_range(q, lo, hi);
    if !(r0 > 0.0) {
        return Err(AmliError::NegativePolynomial { x: lo, value: r0 });
    }
    Ok(LevelStep {
        r0,
        r1,
        rho0: t0 / r1.max(1.0),
        rho1: t1 / r0.min(1.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelBound {
    pub k: usize,
    pub nu: usize,
    pub theta0: f64,
    pub theta1: f64,
    pub r0: f64,
    pub r1: f64,
    pub rho0: f64,
    pub rho1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub family: PolyFamily,
    pub levels: Vec<LevelBound>,
    /// `rho1^(l) / rho0^(l)`
    pub final_kappa_bound: f64,
    /// Fixed point of the recursion with the level-uniform constants, if it exists.
    pub stationary: Option<(f64, f64)>,
    /// `(theta1/theta0) max(1, r1) / min(1, r0)` on the stationary interval.
    pub theorem_bound: Option<f64>,
    pub uniform: bool,
}

/// `x q(x)` range contribution for a family; the exact family is `r = (1, 1)`.
fn family_step(family: PolyFamily, nu: usize, theta: (f64, f64), rho: (f64, f64)) -> Result<LevelStep> {
    if family == PolyFamily::Exact {
        return Ok(LevelStep {
            r0: 1.0,
            r1: 1.0,
            rho0: theta.0,
            rho1: theta.1,
        });
    }
    let q = stabilization_poly(family, nu, rho)?;
    level_step(theta, rho, &q)
}

/// Level recursion from `rho^(0) = (1, 1)`. `thetas[k-1]` belongs to level
/// `k`; a single pair is used on every level.
pub fn multilevel_bound(thetas: &[(f64, f64)], cycle: &CycleSpec) -> Result<BoundReport> {
    let l = cycle.levels();
    if thetas.is_empty() || (thetas.len() != 1 && thetas.len() != l) {
        return Err(AmliError::Config(format!(
            "expected 1 or {l} theta pairs, got {}",
            thetas.len()
        )));
    }
    let theta_at = |k: usize| if thetas.len() == 1 { thetas[0] } else { thetas[k - 1] };
    let mut rho = (1.0, 1.0);
    let mut levels = Vec::with_capacity(l);
    for k in 1..=l {
        let nu = cycle.nus[k - 1];
        let theta = theta_at(k);
        let s = family_step(cycle.family, nu, theta, rho)?;
        levels.push(LevelBound {
            k,
            nu,
            theta0: theta.0,
            theta1: theta.1,
            r0: s.r0,
            r1: s.r1,
            rho0: s.rho0,
            rho1: s.rho1,
        });
        rho = (s.rho0, s.rho1);
    }
    let final_kappa_bound = rho.1 / rho.0;

    let th0 = thetas.iter().map(|t| t.0).fold(f64::INFINITY, f64::min);
    let th1 = thetas.iter().map(|t| t.1).fold(0.0, f64::max);
    let nu = *cycle.nus.last().unwrap();
    let stationary = stationary_rho(cycle.family, nu, (th0, th1));
    let (theorem_bound, uniform) = match stationary {
        Some(r) => {
            let s = family_step(cycle.family, nu, (th0, th1), r)?;
            let b = (th1 / th0) * s.r1.max(1.0) / s.r0.min(1.0);
            (Some(b), b <= (r.1 / r.0) * (1.0 + 1e-9))
        }
        None => (None, false),
    };
    Ok(BoundReport {
        family: cycle.family,
        levels,
        final_kappa_bound,
        stationary,
        theorem_bound,
        uniform,
    })
}

/// Iterate the recursion with constant `theta` until it stops moving.
/// `None` when it diverges or leaves the admissible region.
pub fn stationary_rho(family: PolyFamily, nu: usize, theta: (f64, f64)) -> Option<(f64, f64)> {
    let mut rho = (1.0, 1.0);
    for _ in 0..10_000 {
        let s = family_step(family, nu, theta, rho).ok()?;
        let next = (s.rho0, s.rho1);
        if !(next.1 / next.0 < 1e12) {
            return None;
        }
        let moved = ((next.0 - rho.0) / rho.0).abs().max(((next.1 - rho.1) / rho.1).abs());
        rho = next;
        if moved <= 1e-13 {
            return Some(rho);
        }
    }
    None
}

/// `(2 + delta^m (kappa - 1)) / (2 - delta^m (kappa - 1))`, infinite when the
/// denominator vanishes.
pub fn ratio_bound(kappa: f64, m: usize) -> f64 {
    let s = kappa.sqrt();
    let d = (s - 1.0) / (s + 1.0);
    let e = d.powi(m as i32) * (kappa - 1.0);
    if e >= 2.0 {
        f64::INFINITY
    } else {
        (2.0 + e) / (2.0 - e)
    }
}

/// Smallest degree `m` of the best approximation that keeps the condition
/// number below `kappa_bar` on every level.
pub fn required_degree(theta0: f64, theta1: f64, kappa_bar: f64) -> Result<usize> {
    if !(theta0 > 0.0 && theta1 >= theta0) || !(kappa_bar >= 1.0) {
        return Err(AmliError::Config(format!(
            "need 0 < theta0 <= theta1 and kappa_bar >= 1, got ({theta0}, {theta1}, {kappa_bar})"
        )));
    }
    let under = kappa_bar * theta0 / theta1;
    if !(under > 1.0) {
        return Err(AmliError::InfeasibleTarget(under));
    }
    let s = kappa_bar.sqrt();
    let delta = (s - 1.0) / (s + 1.0);
    let arg = 2.0 * (under - 1.0) / ((kappa_bar - 1.0) * (under + 1.0));
    let mut m = if arg >= 1.0 {
        0
    } else {
        let x = arg.ln() / delta.ln();
        (x - 1e-9).ceil().max(0.0) as usize
    };
    while ratio_bound(kappa_bar, m) > under * (1.0 + 1e-12) {
        m += 1;
    }
    Ok(m)
}

/// Largest `theta1/theta0` for which Chebyshev acceleration keeps `kappa_bar`.
pub fn chebyshev_threshold(kappa_bar: f64) -> f64 {
    4.0 * kappa_bar * kappa_bar / ((1.0 + kappa_bar) * (1.0 + kappa_bar))
}

/// Largest `theta1/theta0` for which the best linear approximation keeps `kappa_bar`.
pub fn best_linear_threshold(kappa_bar: f64) -> f64 {
    let s = kappa_bar.sqrt();
    kappa_bar * (1.0 + 2.0 * s - kappa_bar) / (3.0 - 2.0 * s + kappa_bar)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub kappa_bar: f64,
    pub chebyshev: f64,
    pub best_linear: f64,
    /// `required_degree` for `theta1/theta0 = ratio`, `None` when infeasible.
    pub degree: Option<usize>,
    pub ratio: f64,
}

pub fn threshold_table(kappas: &[f64], ratio: f64) -> Vec<ThresholdRow> {
    kappas
        .iter()
        .map(|&k| ThresholdRow {
            kappa_bar: k,
            chebyshev: chebyshev_threshold(k),
            best_linear: best_linear_threshold(k),
            degree: required_degree(1.0, ratio, k).ok(),
            ratio,
        })
        .collect()
}

/// Solve with `a` by CG to near machine precision.
fn inner_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let d = a.diag();
    let jac = FnOperator::new(a.nrows(), move |x: &[f64], y: &mut [f64]| {
        for i in 0..x.len() {
            y[i] = x[i] / d[i];
        }
    });
    let (x, _) = pcg_solve(a, b, &jac, PcgOptions { tol: 1e-13, maxit: 20 * a.nrows() + 100 })?;
    Ok(x)
}

/// Extreme values of `v^T C v / v^T A v`; `c` applies `C`.
pub fn measure_theta(c: &dyn LinearOperator, a: &CsrMatrix, dense_limit: usize) -> Result<(f64, f64)> {
    let n = a.nrows();
    if c.dim() != n {
        return Err(SparseError::DimensionMismatch {
            expected: n,
            found: c.dim(),
        }
        .into());
    }
    if n <= dense_limit {
        let cd = assemble(c);
        let cd = (&cd + cd.transpose()) * 0.5;
        return Ok(generalized_extremes(&cd, &a.to_dense())?);
    }
    let op = FnOperator::new(n, |x: &[f64], y: &mut [f64]| {
        let cx = c.apply(x);
        y.copy_from_slice(&inner_solve(a, &cx).expect("SPD inner solve"));
    });
    let e = extreme_eigs_in(&op, Some(a), n, 40);
    if !(e.low > 0.0) {
        return Err(AmliError::Indefinite {
            iteration: e.iterations,
            value: e.low,
        });
    }
    Ok((e.low, e.high))
}

/// The two-level matrix `C^(k) = [[C11, Ã12], [Ã21, A^(k-1) + Ã21 C11^{-1} Ã12]]`
/// and `Ã` of `levels[i]`, both dense in hierarchical-basis coordinates.
pub fn level_two_level_dense(h: &Hierarchy, i: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let lvl = &h.levels[i];
    let a22 = h.coarse_matrix(i);
    let at = lvl.atilde_dense(a22);
    let n = lvl.dim();
    let nf = lvl.n_fine();
    let c11 = lvl.c11.to_dense();
    let a12 = lvl.a12.to_dense();
    let x = DenseFactor::factor_dense(&c11)
        .map(|f| {
            let mut x = a12.clone();
            for j in 0..x.ncols() {
                let col: Vec<f64> = x.column(j).iter().copied().collect();
                let s = f.solve(&col).expect("dimension");
                x.column_mut(j).copy_from_slice(&s);
            }
            x
        })
        .expect("smoother matrices are SPD");
    let mut c = at.clone();
    c.view_mut((0, 0), (nf, nf)).copy_from(&c11);
    let schur = a22.to_dense() + a12.transpose() * x;
    c.view_mut((nf, nf), (n - nf, n - nf)).copy_from(&schur);
    (c, at)
}

/// `theta` constants of `levels[i]` by a dense generalized eigensolve.
pub fn measure_level_theta(h: &Hierarchy, i: usize) -> Result<(f64, f64)> {
    let (c, at) = level_two_level_dense(h, i);
    Ok(generalized_extremes(&c, &at)?)
}

/// Extreme eigenvalues of `B^{-1} A` for an SPD preconditioner given by
/// `b_inv`: dense for `n <= dense_limit`, otherwise Lanczos in the `A` inner product.
pub fn measure_spectrum(b_inv: &dyn LinearOperator, a: &CsrMatrix, dense_limit: usize) -> Result<(f64, f64)> {
    let n = a.nrows();
    if b_inv.dim() != n {
        return Err(SparseError::DimensionMismatch {
            expected: n,
            found: b_inv.dim(),
        }
        .into());
    }
    if n <= dense_limit {
        let bi = assemble(b_inv);
        let bi = (&bi + bi.transpose()) * 0.5;
        let chol = a
            .to_dense()
            .cholesky()
            .ok_or(SparseError::NotPositiveDefinite { pivot: 0, value: 0.0 })?;
        let l = chol.l();
        let s = l.transpose() * bi * &l;
        let ev = sym_eigenvalues(&s);
        return Ok((ev[0], ev[n - 1]));
    }
    let op = FnOperator::new(n, |x: &[f64], y: &mut [f64]| {
        let ax = a.apply(x);
        b_inv.apply_into(&ax, y);
    });
    let e = extreme_eigs_in(&op, Some(a), n, 60);
    Ok((e.low, e.high))
}

/// `kappa(B^{-1} A)`
pub fn measure_condition(b_inv: &dyn LinearOperator, a: &CsrMatrix, dense_limit: usize) -> Result<f64> {
    let (lo, hi) = measure_spectrum(b_inv, a, dense_limit)?;
    if !(lo > 0.0) {
        return Err(AmliError::PreconditionerIndefinite { iteration: 0, value: lo });
    }
    Ok(hi / lo)
}

/// Dense `B^(k)^{-1}` of `levels[i]` in natural ordering from the block
/// factorization `L D U` with `Z^{-1} = B^(k-1)^{-1} q(A^(k-1) B^(k-1)^{-1})`.
pub fn block_factorization_inverse(h: &Hierarchy, i: usize) -> Result<DMatrix<f64>> {
    let lvl = &h.levels[i];
    let below = if i == 0 {
        assemble(&h.coarse_factor)
    } else {
        assemble(&crate::precond::AmliPreconditioner::at_level(h, i - 1)?)
    };
    let ah = h.coarse_matrix(i).to_dense();
    let z_inv = &below * dense_poly(&lvl.q, &(&ah * &below));
    let n = lvl.dim();
    let nf = lvl.n_fine();
    let c_inv = lvl
        .c11
        .to_dense()
        .try_inverse()
        .ok_or(SparseError::NotPositiveDefinite { pivot: 0, value: 0.0 })?;
    let mut left = DMatrix::zeros(n, n - nf);
    left.view_mut((0, 0), (nf, n - nf)).copy_from(&(-&c_inv * lvl.a12.to_dense()));
    left.view_mut((nf, 0), (n - nf, n - nf)).fill_with_identity();
    let mut hb = &left * z_inv * left.transpose();
    let mut tl = hb.view_mut((0, 0), (nf, nf));
    tl += &c_inv;
    let j = lvl.j_dense();
    let pi = DMatrix::from_fn(n, n, |r, c| if lvl.partition.perm[r] == c { 1.0 } else { 0.0 });
    hb = pi.transpose() * &j * hb * j.transpose() * pi;
    Ok(hb)
}

/// Random dense instance for the two-level identities.
pub struct IdentityInstance {
    pub a: DMatrix<f64>,
    pub m: Smoother,
    pub p: DMatrix<f64>,
    pub bh: DMatrix<f64>,
    pub q: MonomialPoly,
}

/// SPD `A` with spectrum in roughly `[1, 5]`, the SOR matrix `M = D/omega + L`
/// (so `M + M^T - A` is SPD), a full-rank `P`, an SPD `B_H` near `P^T A P` and
/// `q` of degree `nu - 1`.
pub fn random_instance(n: usize, seed: u64, nu: usize) -> Result<IdentityInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n.max(1);
    let nc = (n / 2).max(1);
    let mut u = |s: f64| s * (2.0 * rng.gen::<f64>() - 1.0);
    let g = DMatrix::from_fn(n, n, |_, _| u(1.0));
    let a = &g * g.transpose() / n as f64 + DMatrix::identity(n, n);
    let p = DMatrix::from_fn(n, nc, |i, j| if i % nc == j { 1.0 } else { 0.0 } + u(0.3));
    let ah = p.transpose() * &a * &p;
    let r = DMatrix::from_fn(nc, nc, |_, _| u(1.0));
    let bh = DMatrix::from_diagonal(&ah.diagonal()) + &r * r.transpose() * (0.2 / nc as f64);
    let omega = 1.0 + u(0.5);
    let q = MonomialPoly::new((0..nu).map(|k| u(1.0) / (k + 1) as f64).collect())?;
    let m = Smoother::new(&CsrMatrix::from_dense(&a), SmootherKind::Sor { omega })?;
    Ok(IdentityInstance { a, m, p, bh, q })
}

fn max_dev(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    (x - y).amax() / x.amax().max(y.amax()).max(1.0)
}

/// Dense `sum_j c_j X^j` by Horner.
fn dense_poly(q: &MonomialPoly, x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut acc = DMatrix::identity(n, n) * *q.coeffs.last().unwrap();
    for &c in q.coeffs.iter().rev().skip(1) {
        acc = x * acc + DMatrix::identity(n, n) * c;
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub n: usize,
    pub seed: u64,
    pub nu: usize,
    /// `M^{-1} + M^{-T} - M^{-T} A M^{-1}` against the sweep form.
    pub mbar_forms: f64,
    pub mbar_spd: bool,
    /// Assembled two-level sweep against its closed-form inverse.
    pub two_level_closed_form: f64,
    /// Polynomial commutation identity.
    pub commutation: f64,
    /// `I - B^{-1} A` against `(I - M^{-T} A) p̃(E_H) (I - M^{-1} A)`.
    pub error_propagation: f64,
}

/// Dense checks of the two-level identities on a random instance. A nonzero
/// `perturb` is added to the constant Horner coefficient used by the
/// preconditioner (but not by the reference side), as a negative control.
pub fn verify_identities(n: usize, seed: u64, nu: usize, perturb: f64) -> Result<IdentityReport> {
    let inst = random_instance(n, seed, nu)?;
    let n = inst.a.nrows();
    let id = DMatrix::identity(n, n);
    let a = &inst.a;
    let minv = assemble(&inst.m);
    let mtinv = minv.transpose();

    let mbar_formula = &minv + &mtinv - &mtinv * a * &minv;
    let asp = CsrMatrix::from_dense(a);
    let mbar_sweep = assemble(&FnOperator::new(n, |x: &[f64], y: &mut [f64]| {
        let v = crate::precond::symmetrized_smoother_apply(&inst.m, &asp, x).expect("dimension");
        y.copy_from_slice(&v);
    }));
    let mbar_forms = max_dev(&mbar_formula, &mbar_sweep);
    let md = inst.m.to_dense();
    let mbar_spd = crate::sparse::dense_cholesky_ok(&(&md + md.transpose() - a));

    // two-level operator with the stabilized coarse solver
    let p = &inst.p;
    let ah = p.transpose() * a * p;
    let bh_inv = inst
        .bh
        .clone()
        .try_inverse()
        .ok_or(SparseError::NotPositiveDefinite { pivot: 0, value: 0.0 })?;
    let mut q_lib = inst.q.clone();
    q_lib.coeffs[0] += perturb;
    let cfg = TwoLevelConfig::new(
        asp.clone(),
        inst.m.clone(),
        CsrMatrix::from_dense(p),
        CoarseSolve::Stabilized {
            bh_inv: Box::new(CsrMatrix::from_dense(&bh_inv)),
            ah: CsrMatrix::from_dense(&ah),
            q: q_lib,
        },
    )?;
    let b_inv = assemble(&cfg);

    let bt_inv = dense_poly(&inst.q, &(&bh_inv * &ah)) * &bh_inv;
    let closed = &mbar_formula + (&id - &mtinv * a) * p * &bt_inv * p.transpose() * (&id - a * &minv);
    let two_level_closed_form = max_dev(&b_inv, &closed);

    let x = p * &bh_inv * p.transpose() * a;
    let lhs = p * dense_poly(&inst.q, &(&bh_inv * &ah)) * &bh_inv * p.transpose() * a;
    let rhs = dense_poly(&inst.q, &x) * &x;
    let commutation = max_dev(&lhs, &rhs);

    // p̃(E_H) = p(I - E_H) = I - X q(X)
    let ptilde = &id - &x * dense_poly(&inst.q, &x);
    let propagated = (&id - &mtinv * a) * ptilde * (&id - &minv * a);
    let error_propagation = max_dev(&(&id - &b_inv * a), &propagated);

    Ok(IdentityReport {
        n,
        seed,
        nu,
        mbar_forms,
        mbar_spd,
        two_level_closed_form,
        commutation,
        error_propagation,
    })
}
