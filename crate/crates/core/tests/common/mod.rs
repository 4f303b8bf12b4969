// Helpers shared by the integration tests. Deliberately independent of the
// library's polynomial code.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Monomial coefficients of the minimax approximation of degree `m` to `1/x`
/// on `[a, b]`, by the Remez exchange algorithm.
pub fn remez_inverse(m: usize, a: f64, b: f64) -> Vec<f64> {
    let n = m + 2;
    let to_x = |t: f64| 0.5 * (a + b) + 0.5 * (b - a) * t;
    let mut refs: Vec<f64> = (0..n)
        .map(|i| to_x(-(std::f64::consts::PI * i as f64 / (n - 1) as f64).cos()))
        .collect();
    let mut cheb = vec![0.0; m + 1];
    for _ in 0..60 {
        // sum_j c_j T_j(t_i) + (-1)^i E = 1/x_i
        let mut sys = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        for (i, &x) in refs.iter().enumerate() {
            let t = (2.0 * x - a - b) / (b - a);
            for j in 0..=m {
                sys[(i, j)] = (j as f64 * t.clamp(-1.0, 1.0).acos()).cos();
            }
            sys[(i, m + 1)] = if i % 2 == 0 { 1.0 } else { -1.0 };
            rhs[i] = 1.0 / x;
        }
        let sol = sys.lu().solve(&rhs).expect("nonsingular Remez system");
        cheb = sol.iter().take(m + 1).copied().collect();
        let err = |x: f64| {
            let t = ((2.0 * x - a - b) / (b - a)).clamp(-1.0, 1.0);
            let s: f64 = cheb.iter().enumerate().map(|(j, c)| c * (j as f64 * t.acos()).cos()).sum();
            1.0 / x - s
        };
        // new reference: the extremum of each sign run on a fine mesh
        let grid = 4000 * n;
        let xs: Vec<f64> = (0..=grid).map(|k| a + (b - a) * k as f64 / grid as f64).collect();
        let mut runs: Vec<(f64, f64)> = Vec::new();
        for &x in &xs {
            let e = err(x);
            match runs.last_mut() {
                Some(last) if last.1.signum() == e.signum() => {
                    if e.abs() > last.1.abs() {
                        *last = (x, e);
                    }
                }
                _ => runs.push((x, e)),
            }
        }
        while runs.len() > n {
            // drop the smaller end
            if runs[0].1.abs() < runs[runs.len() - 1].1.abs() {
                runs.remove(0);
            } else {
                runs.pop();
            }
        }
        if runs.len() < n {
            break;
        }
        let h = (b - a) / grid as f64;
        let new: Vec<f64> = runs
            .iter()
            .map(|&(x, _)| golden_max(|y| err(y).abs(), (x - h).max(a), (x + h).min(b)))
            .collect();
        let moved = new.iter().zip(&refs).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        refs = new;
        if moved < 1e-15 * (b - a) {
            break;
        }
    }
    cheb_to_monomial(&cheb, a, b)
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if f(x1) < f(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    let mid = 0.5 * (lo + hi);
    // endpoints of the interval are extrema of 1/x - q as well
    [lo, mid, hi].into_iter().fold(mid, |best, x| if f(x) > f(best) { x } else { best })
}

/// Convert `sum c_j T_j(t)` with `t = (2x - a - b)/(b - a)` to monomials in `x`.
fn cheb_to_monomial(c: &[f64], a: f64, b: f64) -> Vec<f64> {
    let alpha = 2.0 / (b - a);
    let beta = -(a + b) / (b - a);
    // T_j as polynomials in x
    let mut t_prev = vec![1.0];
    let mut t_cur = vec![beta, alpha];
    let mut out = vec![0.0; c.len()];
    for (j, &cj) in c.iter().enumerate() {
        let tj = if j == 0 { &t_prev } else { &t_cur };
        for (k, v) in tj.iter().enumerate() {
            out[k] += cj * v;
        }
        if j >= 1 {
            let mut next = vec![0.0; t_cur.len() + 1];
            for (k, v) in t_cur.iter().enumerate() {
                next[k] += 2.0 * beta * v;
                next[k + 1] += 2.0 * alpha * v;
            }
            for (k, v) in t_prev.iter().enumerate() {
                next[k] -= v;
            }
            t_prev = std::mem::replace(&mut t_cur, next);
        }
    }
    out
}

pub fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * x + v)
}

/// Sup of `|1/x - q(x)|` on `[a, b]` for monomial coefficients `c`.
pub fn grid_sup_error(c: &[f64], a: f64, b: f64, points: usize) -> f64 {
    grid_sup(|x| (1.0 / x - horner(c, x)).abs(), a, b, points)
}

/// Degree-`m` minimax approximation of `1/x` on `[lo, hi]` evaluated at `x`
/// pointwise by the three-term recurrence on `[-1, 1]`, avoiding the
/// monomial basis. The degree 0 and 1 members are the classical best
/// constant and best line for a convex function.
pub fn recurrence_eval(m: usize, lo: f64, hi: f64, x: f64) -> f64 {
    let s = 2.0 / (hi - lo);
    let a = (hi + lo) / (hi - lo);
    let t = s * x - a;
    let f = |t: f64| 1.0 / (t + a);
    let q0 = 0.5 * (f(-1.0) + f(1.0));
    if m == 0 {
        return s * q0;
    }
    // chord slope, touching point of the parallel tangent
    let slope = 0.5 * (f(1.0) - f(-1.0));
    let tp = (-1.0 / slope).sqrt() - a;
    let chord = |t: f64| f(-1.0) + slope * (t + 1.0);
    let tangent = |t: f64| f(tp) + slope * (t - tp);
    let q1 = 0.5 * (chord(t) + tangent(t));
    let sk = (hi.sqrt() - lo.sqrt()) / (hi.sqrt() + lo.sqrt());
    let eta = -sk;
    let (mut prev, mut cur) = (q0, q1);
    for _ in 1..m {
        let next = eta * (2.0 * t * cur - eta * prev - 2.0);
        prev = cur;
        cur = next;
    }
    s * cur
}

/// Sup of `f` on `[a, b]`: dense grid, local maxima refined.
pub fn grid_sup(f: impl Fn(f64) -> f64, a: f64, b: f64, points: usize) -> f64 {
    let h = (b - a) / points as f64;
    let v: Vec<f64> = (0..=points).map(|k| f(a + h * k as f64)).collect();
    let mut best = v[0].max(v[points]);
    for k in 1..points {
        if v[k] >= v[k - 1] && v[k] >= v[k + 1] {
            let x = golden_max(&f, a + h * (k - 1) as f64, a + h * (k + 1) as f64);
            best = best.max(f(x));
        }
    }
    best
}

pub fn max_rel_dev(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    (x - y).amax() / x.amax().max(y.amax()).max(f64::MIN_POSITIVE)
}
