use super::{dot, LinearOperator};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const START_SEED: u64 = 0x5eed_1a9c;

/// Lanczos estimate of the extreme eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigEstimate {
    pub low: f64,
    pub high: f64,
    pub iterations: usize,
    /// The Krylov space became invariant before `iters` steps.
    pub breakdown: bool,
}

impl EigEstimate {
    pub fn condition(&self) -> f64 {
        self.high / self.low
    }
}

/// Extreme eigenvalues of a symmetric operator.
pub fn extreme_eigs(apply: &dyn LinearOperator, n: usize, iters: usize) -> EigEstimate {
    extreme_eigs_in(apply, None, n, iters)
}

/// Extreme eigenvalues of an operator that is self-adjoint in the inner
/// product `<x, y> = x^T M y` (`M = I` when `inner` is `None`).
///
/// Full reorthogonalization; the start vector is fixed so that repeated calls
/// produce nested Krylov spaces and monotone estimates.
pub fn extreme_eigs_in(
    apply: &dyn LinearOperator,
    inner: Option<&dyn LinearOperator>,
    n: usize,
    iters: usize,
) -> EigEstimate {
    let iters = iters.min(n).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut v: Vec<f64> = (0..n).map(|_| 0.5 + rng.gen::<f64>()).collect();
    let mapped = |x: &[f64]| -> Vec<f64> {
        match inner {
            Some(m) => m.apply(x),
            None => x.to_vec(),
        }
    };
    let mut mv = mapped(&v);
    let nrm = dot(&v, &mv).sqrt();
    v.iter_mut().for_each(|x| *x /= nrm);
    mv.iter_mut().for_each(|x| *x /= nrm);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(iters);
    let mut mbasis: Vec<Vec<f64>> = Vec::with_capacity(iters);
    let mut alphas = Vec::with_capacity(iters);
    let mut betas: Vec<f64> = Vec::with_capacity(iters);
    let mut breakdown = false;
    let mut z = vec![0.0; n];
    let mut scale = 0.0f64;

    for j in 0..iters {
        apply.apply_into(&v, &mut z);
        let alpha = dot(&z, &mv);
        alphas.push(alpha);
        basis.push(v.clone());
        mbasis.push(mv.clone());
        scale = scale.max(alpha.abs());
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for (q, mq) in basis.iter().zip(&mbasis) {
                let c = dot(&z, mq);
                z.iter_mut().zip(q).for_each(|(zi, qi)| *zi -= c * qi);
            }
        }
        if j + 1 == iters {
            break;
        }
        let mz = mapped(&z);
        let beta = dot(&z, &mz).max(0.0).sqrt();
        if beta <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            breakdown = true;
            break;
        }
        scale = scale.max(beta);
        betas.push(beta);
        v.iter_mut().zip(&z).for_each(|(vi, zi)| *vi = zi / beta);
        mv.iter_mut().zip(&mz).for_each(|(vi, zi)| *vi = zi / beta);
    }

    let k = alphas.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let ev = t.symmetric_eigenvalues();
    let low = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let high = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    EigEstimate {
        low,
        high,
        iterations: k,
        breakdown,
    }
}

/// Extreme eigenvalues of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off`, by Sturm-sequence bisection.
pub fn tridiag_extremes(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    assert!(n > 0 && off.len() + 1 >= n);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    // number of eigenvalues below x
    let count = |x: f64| -> usize {
        let mut c = 0;
        let mut d = 1.0;
        for i in 0..n {
            let b2 = if i > 0 { off[i - 1] * off[i - 1] } else { 0.0 };
            d = diag[i] - x - if i > 0 { b2 / d } else { 0.0 };
            if d == 0.0 {
                d = -f64::EPSILON * (x.abs() + 1.0);
            }
            if d < 0.0 {
                c += 1;
            }
        }
        c
    };
    let bisect = |target: usize| -> f64 {
        // smallest x with count(x) > target
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if count(m) > target {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    };
    (bisect(0), bisect(n - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{CsrMatrix, Identity};

    #[test]
    fn sturm_bisection_matches_dense() {
        let d = [2.0, 3.5, -1.0, 4.0, 0.5];
        let e = [0.3, -1.2, 0.7, 2.0];
        let (lo, hi) = tridiag_extremes(&d, &e);
        let mut t = DMatrix::zeros(5, 5);
        for i in 0..5 {
            t[(i, i)] = d[i];
            if i < 4 {
                t[(i, i + 1)] = e[i];
                t[(i + 1, i)] = e[i];
            }
        }
        let ev = t.symmetric_eigenvalues();
        assert!((lo - ev.min()).abs() < 1e-12);
        assert!((hi - ev.max()).abs() < 1e-12);
        assert_eq!(tridiag_extremes(&[3.0], &[]), (3.0, 3.0));
    }

    #[test]
    fn diagonal_spectrum() {
        let d: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let a = CsrMatrix::diagonal(&d);
        let e = extreme_eigs(&a, 10, 10);
        assert!((e.low - 1.0).abs() < 1e-8);
        assert!((e.high - 10.0).abs() < 1e-8);
    }

    #[test]
    fn identity_breaks_down() {
        let e = extreme_eigs(&Identity(7), 7, 5);
        assert!((e.low - 1.0).abs() < 1e-14 && (e.high - 1.0).abs() < 1e-14);
        assert!(e.breakdown);
        assert_eq!(e.iterations, 1);
    }

    #[test]
    fn estimates_are_monotone_in_iterations() {
        let d: Vec<f64> = (0..50).map(|i| 1.0 + (i as f64).powf(1.5)).collect();
        let a = CsrMatrix::diagonal(&d);
        let mut prev = extreme_eigs(&a, 50, 2);
        for it in 3..20 {
            let e = extreme_eigs(&a, 50, it);
            assert!(e.high >= prev.high - 1e-12);
            assert!(e.low <= prev.low + 1e-12);
            prev = e;
        }
    }
}
