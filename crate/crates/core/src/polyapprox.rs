//! Acceleration polynomials.
//!
//! Chebyshev polynomials, the polynomial of best uniform approximation to
//! `1/x` on a positive interval (three-term recurrence, defect-correction
//! form and two closed forms), the associated error formulas, and the
//! positivity / damping estimates used when such a polynomial serves as a
//! smoother.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Degrees above this are refused by [`best_q`]; the monomial basis loses
/// accuracy quickly beyond it.
pub const DEFAULT_MAX_DEGREE: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("degenerate interval [{lo}, {hi}]: need lambda_min < lambda_max")]
    DegenerateInterval { lo: f64, hi: f64 },
    #[error("interval endpoint {0} is not positive")]
    NonPositiveEndpoint(f64),
    #[error("shift parameter a = {0} must exceed 1")]
    InvalidShift(f64),
    #[error("invalid rho pair ({rho0}, {rho1}): need 0 < rho0 <= rho1")]
    InvalidRho { rho0: f64, rho1: f64 },
    #[error("degree {degree} exceeds the configured cap {cap}")]
    DegreeTooHigh { degree: usize, cap: usize },
    #[error("mu = {0} must exceed 1")]
    InvalidMu(f64),
    #[error("empty polynomial")]
    Empty,
}

/// Derived parameters of an eigenvalue interval `[lambda_min, lambda_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralInterval {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    pub sigma: f64,
    pub a: f64,
    pub delta: f64,
    pub eta: f64,
    pub chi: f64,
}

impl SpectralInterval {
    pub fn new(lambda_min: f64, lambda_max: f64) -> Result<Self, PolyError> {
        spectral_params(lambda_min, lambda_max)
    }

    /// Affine map sending `lambda_min` to -1 and `lambda_max` to +1.
    pub fn to_reference(&self, x: f64) -> f64 {
        2.0 * self.sigma * x - self.a
    }

    pub fn from_reference(&self, t: f64) -> f64 {
        (t + self.a) / (2.0 * self.sigma)
    }
}

pub fn spectral_params(lambda_min: f64, lambda_max: f64) -> Result<SpectralInterval, PolyError> {
    if !(lambda_min > 0.0) || !lambda_min.is_finite() {
        return Err(PolyError::NonPositiveEndpoint(lambda_min));
    }
    if !(lambda_max > 0.0) || !lambda_max.is_finite() {
        return Err(PolyError::NonPositiveEndpoint(lambda_max));
    }
    if lambda_min >= lambda_max {
        return Err(PolyError::DegenerateInterval {
            lo: lambda_min,
            hi: lambda_max,
        });
    }
    let kappa = lambda_max / lambda_min;
    let width = lambda_max - lambda_min;
    let sigma = 1.0 / width;
    let a = (lambda_max + lambda_min) / width;
    let (smin, smax) = (lambda_min.sqrt(), lambda_max.sqrt());
    // (sqrt(k)-1)/(sqrt(k)+1), written through the exact width so that neither
    // a - sqrt(a^2-1) nor smax - smin cancels
    let delta = width / ((smax + smin) * (smax + smin));
    let chi = 4.0 / ((smax + smin) * (smax + smin));
    Ok(SpectralInterval {
        lambda_min,
        lambda_max,
        kappa,
        sigma,
        a,
        delta,
        eta: -delta,
        chi,
    })
}

/// Polynomial in the monomial basis; `coeffs[j]` multiplies `x^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialPoly {
    pub coeffs: Vec<f64>,
}

impl MonomialPoly {
    pub fn new(coeffs: Vec<f64>) -> Result<Self, PolyError> {
        if coeffs.is_empty() {
            return Err(PolyError::Empty);
        }
        Ok(Self { coeffs })
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    /// `c0 + c1 x`
    pub fn linear(c0: f64, c1: f64) -> Self {
        Self {
            coeffs: vec![c0, c1],
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::constant(0.0);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, &c)| j as f64 * c)
            .collect();
        Self { coeffs }
    }

    /// `x * p(x)`
    pub fn mul_x(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(0.0);
        coeffs.extend_from_slice(&self.coeffs);
        Self { coeffs }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|j| {
                self.coeffs.get(j).copied().unwrap_or(0.0) + other.coeffs.get(j).copied().unwrap_or(0.0)
            })
            .collect();
        Self { coeffs }
    }

    /// `p(alpha * x + beta)` as a polynomial in `x`.
    pub fn compose_affine(&self, alpha: f64, beta: f64) -> Self {
        let lin = Self::linear(beta, alpha);
        let mut out = Self::constant(0.0);
        for &c in self.coeffs.iter().rev() {
            out = out.mul(&lin).add(&Self::constant(c));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut coeffs = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self { coeffs }
    }

    /// The error-propagation polynomial `1 - x q(x)`; it equals 1 at zero by construction.
    pub fn residual_poly(&self) -> Self {
        Self::constant(1.0).add(&self.mul_x().scale(-1.0))
    }
}

/// Chebyshev polynomial of the first kind by the three-term recurrence.
pub fn cheb_t(k: usize, t: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => t,
        _ => {
            let (mut prev, mut cur) = (1.0, t);
            for _ in 1..k {
                let next = 2.0 * t * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Chebyshev polynomial `T_k` in the monomial basis.
pub fn cheb_t_poly(k: usize) -> MonomialPoly {
    let mut prev = MonomialPoly::constant(1.0);
    if k == 0 {
        return prev;
    }
    let mut cur = MonomialPoly::linear(0.0, 1.0);
    for _ in 1..k {
        let next = cur.mul_x().scale(2.0).add(&prev.scale(-1.0));
        prev = cur;
        cur = next;
    }
    cur
}

fn eta_from_shift(a: f64) -> Result<f64, PolyError> {
    if !(a > 1.0) || !a.is_finite() {
        return Err(PolyError::InvalidShift(a));
    }
    Ok(-(a - (a * a - 1.0).sqrt()))
}

/// Best approximation `Q_m` of degree `m` to `1/(t+a)` on `[-1, 1]`.
///
/// Built from `Q_0`, `Q_1` and `Q_{m+2} = eta (2 t Q_{m+1} - eta Q_m - 2)`.
pub fn best_q_on_reference(m: usize, a: f64) -> Result<MonomialPoly, PolyError> {
    let eta = eta_from_shift(a)?;
    let a2m1 = a * a - 1.0;
    let q0 = MonomialPoly::constant(a / a2m1);
    if m == 0 {
        return Ok(q0);
    }
    let q1 = MonomialPoly::linear(1.0 / a2m1.sqrt(), -1.0 / a2m1);
    let (mut prev, mut cur) = (q0, q1);
    for _ in 1..m {
        let next = cur
            .mul_x()
            .scale(2.0 * eta)
            .add(&prev.scale(-eta * eta))
            .add(&MonomialPoly::constant(-2.0 * eta));
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Best approximation `q_m` to `1/x` on the interval, via the defect-correction
/// recurrence `s_{k+1} = chi (1 - x q_k) + delta^2 s_k`, `q_{k+1} = q_k + s_{k+1}`.
pub fn best_q(m: usize, interval: &SpectralInterval) -> Result<MonomialPoly, PolyError> {
    best_q_capped(m, interval, DEFAULT_MAX_DEGREE)
}

pub fn best_q_capped(
    m: usize,
    interval: &SpectralInterval,
    cap: usize,
) -> Result<MonomialPoly, PolyError> {
    if m > cap {
        return Err(PolyError::DegreeTooHigh { degree: m, cap });
    }
    Ok(best_q_sequence(m, interval).pop().expect("nonempty"))
}

/// `q_0, ..., q_m` on the interval.
fn best_q_sequence(m: usize, interval: &SpectralInterval) -> Vec<MonomialPoly> {
    let mu0 = 1.0 / interval.lambda_max;
    let mu1 = 1.0 / interval.lambda_min;
    let root_sum = mu0.sqrt() + mu1.sqrt();
    let mut seq = vec![MonomialPoly::constant(0.5 * (mu0 + mu1))];
    if m == 0 {
        return seq;
    }
    seq.push(MonomialPoly::linear(0.5 * root_sum * root_sum, -mu0 * mu1));
    let weight = 4.0 * mu0 * mu1 / (root_sum * root_sum);
    let d2 = interval.delta * interval.delta;
    let mut step = seq[1].add(&seq[0].scale(-1.0));
    for k in 1..m {
        let defect = seq[k].residual_poly();
        step = defect.scale(weight).add(&step.scale(d2));
        let next = seq[k].add(&step);
        seq.push(next);
    }
    seq
}

/// The sequence of best approximations of degrees `0..=max_degree` on one interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BestApproxSequence {
    pub interval: SpectralInterval,
    pub polys: Vec<MonomialPoly>,
    pub max_degree: usize,
}

impl BestApproxSequence {
    pub fn build(interval: SpectralInterval, max_degree: usize) -> Result<Self, PolyError> {
        if max_degree > DEFAULT_MAX_DEGREE {
            return Err(PolyError::DegreeTooHigh {
                degree: max_degree,
                cap: DEFAULT_MAX_DEGREE,
            });
        }
        Ok(Self {
            interval,
            polys: best_q_sequence(max_degree, &interval),
            max_degree,
        })
    }
}

/// `q_m(x)` through the Chebyshev-sum closed form, independently of the
/// monomial coefficients produced by [`best_q`].
pub fn best_q_closed_eval(m: usize, interval: &SpectralInterval, x: f64) -> f64 {
    let eta = interval.eta;
    let t = interval.to_reference(x);
    let gap = eta - 1.0 / eta;
    let sum: f64 = (0..m).map(|j| eta.powi(j as i32) * cheb_t(j, t)).sum();
    let t_m = cheb_t(m, t);
    let eta_m1 = eta.powi(m as i32 - 1);
    let q_ref = -2.0 / gap + 4.0 / gap * sum - 4.0 * eta_m1 / (gap * gap) * t_m;
    2.0 * interval.sigma * q_ref
}

/// `q_m(x)` through the quotient closed form
/// `Q_m(t) = (1 - 2 eta^m R_{m+1}(t) / (eta - 1/eta)^2) / (t + a)`.
pub fn best_q_quotient_eval(m: usize, interval: &SpectralInterval, x: f64) -> f64 {
    2.0 * interval.sigma * x_times_q_quotient(m, interval, x) / (interval.to_reference(x) + interval.a)
}

/// `x q_m(x) = 1 - 2 eta^m R_{m+1}(t) / (eta - 1/eta)^2`, `t = 2 sigma x - a`.
pub fn x_times_q_quotient(m: usize, interval: &SpectralInterval, x: f64) -> f64 {
    let eta = interval.eta;
    let gap = eta - 1.0 / eta;
    let t = interval.to_reference(x);
    1.0 - 2.0 * eta.powi(m as i32) / (gap * gap) * residual_r_unchecked(m, eta, t)
}

fn residual_r_unchecked(m: usize, eta: f64, t: f64) -> f64 {
    // T_{-1} = T_1
    let t_m_minus_1 = if m == 0 { t } else { cheb_t(m - 1, t) };
    cheb_t(m + 1, t) / eta - 2.0 * cheb_t(m, t) + eta * t_m_minus_1
}

/// `R_{m+1}(t) = T_{m+1}(t)/eta - 2 T_m(t) + eta T_{m-1}(t)`.
pub fn residual_r(m: usize, a: f64, t: f64) -> Result<f64, PolyError> {
    let eta = eta_from_shift(a)?;
    Ok(residual_r_unchecked(m, eta, t))
}

/// Uniform error of the degree-`m` best approximation, `2 sigma delta^m / (a^2 - 1)`.
///
/// Evaluated in log space so large `m` underflows to zero only when the true
/// value does.
pub fn best_error(m: usize, interval: &SpectralInterval) -> f64 {
    // a^2 - 1 = 4 lambda_min lambda_max / width^2, which a * a - 1 loses for wide intervals
    let a2m1 = 4.0 * interval.lambda_min * interval.lambda_max * interval.sigma * interval.sigma;
    let log_e = (2.0 * interval.sigma).ln() + m as f64 * interval.delta.ln() - a2m1.ln();
    log_e.exp()
}

/// Same error through `2 delta^{m-1} E_0^2` with `E_0` the constant-fit error
/// of `1/y` on `[sqrt(lambda_min), sqrt(lambda_max)]`.
pub fn error_via_corollary(m: usize, interval: &SpectralInterval) -> f64 {
    let (smin, smax) = (interval.lambda_min.sqrt(), interval.lambda_max.sqrt());
    let e0 = 0.5 * (interval.lambda_max - interval.lambda_min) / ((smax + smin) * smin * smax);
    let log_e = 2.0f64.ln() + (m as f64 - 1.0) * interval.delta.ln() + 2.0 * e0.ln();
    log_e.exp()
}

/// Linear `q` derived from the degree-2 shifted Chebyshev polynomial with
/// roots `1/rho0` and `1/rho1`: `q(x) = rho0 + rho1 - rho0 rho1 x`.
pub fn cheb_accel_q(rho0: f64, rho1: f64) -> Result<MonomialPoly, PolyError> {
    if !(rho0 > 0.0) || !(rho1 >= rho0) || !rho1.is_finite() {
        return Err(PolyError::InvalidRho { rho0, rho1 });
    }
    Ok(MonomialPoly::linear(rho0 + rho1, -rho0 * rho1))
}

/// Minimum and maximum of `x q(x)` on `[lo, hi]`.
///
/// Candidates are the endpoints and the critical points, which are bracketed on
/// a grid of `64 * degree` cells and refined by bisection.
pub fn xq_range(q: &MonomialPoly, lo: f64, hi: f64) -> (f64, f64) {
    let f = q.mul_x();
    let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut candidates = vec![f.eval(lo), f.eval(hi)];
    if hi > lo && f.degree() >= 2 {
        let df = f.derivative();
        let cells = 64 * f.degree();
        let h = (hi - lo) / cells as f64;
        let mut x0 = lo;
        let mut g0 = df.eval(x0);
        for i in 1..=cells {
            let x1 = if i == cells { hi } else { lo + i as f64 * h };
            let g1 = df.eval(x1);
            if g0 == 0.0 {
                candidates.push(f.eval(x0));
            } else if g0.signum() != g1.signum() && g1 != 0.0 {
                let root = bisect(&df, x0, x1, g0);
                candidates.push(f.eval(root));
            }
            x0 = x1;
            g0 = g1;
        }
    }
    let min = candidates.iter().copied().fold(f64::INFINITY, f64::min);
    let max = candidates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

fn bisect(g: &MonomialPoly, mut a: f64, mut b: f64, mut ga: f64) -> f64 {
    let tol = 1e-13 * a.abs().max(b.abs()).max(1.0);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        let gm = g.eval(mid);
        if gm == 0.0 {
            return mid;
        }
        if gm.signum() == ga.signum() {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

fn mu_delta(mu: f64) -> Result<f64, PolyError> {
    if !(mu > 1.0) || !mu.is_finite() {
        return Err(PolyError::InvalidMu(mu));
    }
    let s = mu.sqrt();
    Ok((s - 1.0) / (s + 1.0))
}

/// Sufficient condition for `q_m` built on `[lambda/mu, lambda]` to be positive on `(0, lambda]`.
pub fn positivity_holds(m: usize, mu: f64) -> Result<bool, PolyError> {
    let d = mu_delta(mu)?;
    Ok(d.powi(m as i32) < 2.0 / (mu - 1.0))
}

/// Bound on `|1 - q_m(x) x|` for `x` in `[lambda/mu, lambda]`.
pub fn damping_bound(m: usize, mu: f64) -> Result<f64, PolyError> {
    let d = mu_delta(mu)?;
    Ok(0.5 * (mu - 1.0) * d.powi(m as i32))
}

/// One extremum of the error `1/x - q(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremePoint {
    pub x: f64,
    pub error: f64,
}

/// Local extrema of `1/x - q(x)` on the interval whose magnitude reaches the
/// global maximum to within `rel_tol`, scanned on a `grid`-point mesh and
/// refined by golden-section search.
pub fn equioscillation_points(
    q: &MonomialPoly,
    interval: &SpectralInterval,
    grid: usize,
    rel_tol: f64,
) -> Vec<ExtremePoint> {
    let err = |x: f64| 1.0 / x - q.eval(x);
    let (lo, hi) = (interval.lambda_min, interval.lambda_max);
    let grid = grid.max(3);
    let h = (hi - lo) / (grid - 1) as f64;
    let xs: Vec<f64> = (0..grid).map(|i| lo + i as f64 * h).collect();
    let es: Vec<f64> = xs.iter().map(|&x| err(x)).collect();
    let mut found = Vec::new();
    for i in 0..grid {
        let e = es[i].abs();
        let left = if i > 0 { es[i - 1].abs() } else { f64::NEG_INFINITY };
        let right = if i + 1 < grid { es[i + 1].abs() } else { f64::NEG_INFINITY };
        if e >= left && e > right {
            let x = if i == 0 || i + 1 == grid {
                xs[i]
            } else {
                golden_max(|x| err(x).abs(), xs[i - 1], xs[i + 1])
            };
            found.push(ExtremePoint { x, error: err(x) });
        }
    }
    let peak = found.iter().map(|p| p.error.abs()).fold(0.0, f64::max);
    found.retain(|p| p.error.abs() >= peak * (1.0 - rel_tol));
    found
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * a.abs().max(1.0) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Coefficient export document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDoc {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub degree: usize,
    pub coeffs: Vec<f64>,
    pub error: f64,
}

impl CoefficientDoc {
    pub fn best_approx(m: usize, interval: &SpectralInterval) -> Result<Self, PolyError> {
        let q = best_q(m, interval)?;
        Ok(Self {
            lambda_min: interval.lambda_min,
            lambda_max: interval.lambda_max,
            degree: m,
            coeffs: q.coeffs,
            error: best_error(m, interval),
        })
    }
}
