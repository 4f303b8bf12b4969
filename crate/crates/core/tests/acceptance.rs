//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use amli::analysis::{
    block_factorization_inverse, measure_condition, measure_level_theta, multilevel_bound, ratio_bound,
    required_degree, verify_identities,
};
use amli::hierarchy::{build_hierarchy, Hierarchy, gen_poisson, BuildConfig, CycleSpec, PolyFamily, Problem, RhoMode};
use amli::polyapprox::{
    best_error, best_q, best_q_on_reference, cheb_accel_q, damping_bound, error_via_corollary, positivity_holds,
    residual_r, xq_range, SpectralInterval,
};
use amli::precond::{pcg_solve, AmliPreconditioner, PcgOptions};
use amli::sparse::assemble;
use common::{grid_sup, grid_sup_error, max_rel_dev, recurrence_eval, remez_inverse};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn c1_error_formula() -> Outcome {
    let iv = SpectralInterval::new(1.0, 4.0).unwrap();
    ensure((best_error(1, &iv) - 0.125).abs() < 1e-15, "m = 1 error is not 1/8")?;
    let mut worst = 0.0f64;
    let mut worst_monomial = 0.0f64;
    for m in 1..=10 {
        let e = best_error(m, &iv);
        let sup = grid_sup(|x| (1.0 / x - recurrence_eval(m, 1.0, 4.0, x)).abs(), 1.0, 4.0, 100_000);
        worst = worst.max((sup - e).abs() / e);
        // the monomial coefficients carry a rounding floor near 1e-7 at m = 10
        let q = best_q(m, &iv).unwrap();
        worst_monomial = worst_monomial.max((grid_sup_error(&q.coeffs, 1.0, 4.0, 100_000) - e).abs() / e);
    }
    ensure(worst <= 1e-9, format!("relative deviation {worst:.3e}"))?;
    Ok(format!("max relative deviation {worst:.2e} (monomial form {worst_monomial:.2e})"))
}

fn c2_remez() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let lo = rng.gen_range(0.5..3.0);
        let hi = lo * rng.gen_range(1.5..6.0);
        let iv = SpectralInterval::new(lo, hi).unwrap();
        for m in 0..=8 {
            let ours = best_q(m, &iv).unwrap().coeffs;
            let oracle = remez_inverse(m, lo, hi);
            let d = ours.iter().zip(&oracle).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            ensure(d <= 1e-8, format!("m={m} on [{lo:.3},{hi:.3}]: deviation {d:.3e}"))?;
            worst = worst.max(d);
        }
    }
    Ok(format!("max coefficient deviation {worst:.2e}"))
}

fn c3_recurrence() -> Outcome {
    let mut worst = 0.0f64;
    for a in [5.0 / 3.0, 3.0, 1.2] {
        let eta = -(a - (a * a - 1.0f64).sqrt());
        let qs: Vec<_> = (0..=14).map(|m| best_q_on_reference(m, a).unwrap()).collect();
        for m in 0..=12 {
            for i in 0..1000 {
                let t = -1.0 + 2.0 * (i as f64 + 0.5) / 1000.0;
                let lhs = qs[m + 2].eval(t) / eta - 2.0 * t * qs[m + 1].eval(t) + eta * qs[m].eval(t);
                worst = worst.max((lhs + 2.0).abs());
            }
        }
    }
    ensure(worst <= 1e-10, format!("deviation {worst:.3e}"))?;
    Ok(format!("max deviation {worst:.2e}"))
}

fn c4_residual_bounds() -> Outcome {
    let mut slack = f64::INFINITY;
    for a in [5.0 / 3.0, 3.0] {
        for m in 0..=12 {
            for i in 0..=4000 {
                let t = -1.0 + 2.0 * i as f64 / 4000.0;
                let r = residual_r(m, a, t).unwrap();
                let bound = 2.0 * (t + a);
                ensure(r.abs() <= bound + 1e-12, format!("m={m} a={a} t={t}: |R| = {} > {bound}", r.abs()))?;
                slack = slack.min(bound - r.abs());
            }
        }
    }
    Ok(format!("minimum slack {slack:.3e}"))
}

fn c5_corollary() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let lo = rng.gen_range(0.01..10.0);
        let hi = lo * rng.gen_range(1.01..1000.0);
        let m = rng.gen_range(1..=16);
        let iv = SpectralInterval::new(lo, hi).unwrap();
        let (x, y) = (error_via_corollary(m, &iv), best_error(m, &iv));
        worst = worst.max((x - y).abs() / y);
    }
    ensure(worst <= 1e-14, format!("relative deviation {worst:.3e}"))?;
    Ok(format!("max relative deviation {worst:.2e}"))
}

fn c6_damping() -> Outcome {
    let d2 = damping_bound(2, 4.0).unwrap();
    ensure(d2 == 1.0 / 6.0, format!("damping_bound(2,4) = {d2}"))?;
    let d3 = damping_bound(3, 8.0).unwrap();
    ensure((d3 - 0.381276).abs() <= 5e-6, format!("damping_bound(3,8) = {d3}"))?;
    for m in 1..=16 {
        ensure(positivity_holds(m, 4.0).unwrap(), format!("positivity_holds({m},4) false"))?;
    }
    ensure(!positivity_holds(1, 8.0).unwrap(), "positivity_holds(1,8) true")?;
    ensure(positivity_holds(2, 8.0).unwrap(), "positivity_holds(2,8) false")?;
    Ok(format!("damping(3,8) = {d3:.6}"))
}

fn c7_chebyshev_range() -> Outcome {
    let (lo, hi) = xq_range(&cheb_accel_q(1.0, 2.0).unwrap(), 0.5, 1.0);
    ensure(
        (lo - 1.0).abs() <= 1e-12 && (hi - 9.0 / 8.0).abs() <= 1e-12,
        format!("range ({lo}, {hi})"),
    )?;
    Ok(format!("range ({lo}, {hi})"))
}

fn c8_two_level() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    for (i, n) in [8usize, 25, 60].into_iter().enumerate() {
        for nu in 1..=3 {
            let r = verify_identities(n, 800 + i as u64, nu, 0.0).map_err(|e| e.to_string())?;
            ensure(r.mbar_spd, format!("n={n}: M + M^T - A not SPD"))?;
            worst.0 = worst.0.max(r.two_level_closed_form);
            worst.1 = worst.1.max(r.mbar_forms);
        }
    }
    ensure(worst.0 <= 1e-11 && worst.1 <= 1e-11, format!("deviations {:.3e}, {:.3e}", worst.0, worst.1))?;
    Ok(format!("closed form {:.2e}, symmetrized smoother forms {:.2e}", worst.0, worst.1))
}

fn c9_commutation() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    for seed in 0..20u64 {
        for nu in 1..=3 {
            let r = verify_identities(40, 900 + seed, nu, 0.0).map_err(|e| e.to_string())?;
            worst.0 = worst.0.max(r.commutation);
            worst.1 = worst.1.max(r.error_propagation);
        }
    }
    ensure(worst.0 <= 1e-10 && worst.1 <= 1e-10, format!("deviations {:.3e}, {:.3e}", worst.0, worst.1))?;
    Ok(format!("commutation {:.2e}, error propagation {:.2e}", worst.0, worst.1))
}

/// `B^(k)^{-1}` for every stored level, from the product `L D U` inverted densely.
fn ldu_inverses(h: &Hierarchy) -> Vec<DMatrix<f64>> {
    let mut out: Vec<DMatrix<f64>> = Vec::new();
    for (i, lvl) in h.levels.iter().enumerate() {
        let below = match i {
            0 => h.a0.to_dense().try_inverse().unwrap(),
            _ => out[i - 1].clone(),
        };
        let ah = h.coarse_matrix(i).to_dense();
        let x = &ah * &below;
        // q(X) by Horner
        let c = &lvl.q.coeffs;
        let mut qx = DMatrix::identity(x.nrows(), x.nrows()) * c[c.len() - 1];
        for &ck in c.iter().rev().skip(1) {
            qx = &x * qx + DMatrix::identity(x.nrows(), x.nrows()) * ck;
        }
        let z = (&below * qx).try_inverse().unwrap();
        let (n, nf) = (lvl.dim(), lvl.n_fine());
        let nc = n - nf;
        let cm = lvl.c11.to_dense();
        let c_inv = cm.clone().try_inverse().unwrap();
        let a21 = lvl.a21.to_dense();
        let a12 = lvl.a12.to_dense();
        let mut l = DMatrix::identity(n, n);
        l.view_mut((nf, 0), (nc, nf)).copy_from(&(&a21 * &c_inv));
        let mut d = DMatrix::zeros(n, n);
        d.view_mut((0, 0), (nf, nf)).copy_from(&cm);
        d.view_mut((nf, nf), (nc, nc)).copy_from(&z);
        let mut u = DMatrix::identity(n, n);
        u.view_mut((0, nf), (nf, nc)).copy_from(&(&c_inv * &a12));
        let hb_inv = (l * d * u).try_inverse().unwrap();
        // natural ordering: Pi^T J B~^{-1} J^T Pi
        let mut j = DMatrix::identity(n, n);
        j.view_mut((0, nf), (nf, nc)).copy_from(&lvl.w.to_dense());
        let pi = DMatrix::from_fn(n, n, |r, c| if lvl.partition.perm[r] == c { 1.0 } else { 0.0 });
        out.push(pi.transpose() * &j * hb_inv * j.transpose() * pi);
    }
    out
}

fn c10_block_factorization() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_lib = 0.0f64;
    for (dim, n0) in [(1usize, 3usize), (2, 1)] {
        for family in [PolyFamily::BestApprox, PolyFamily::Chebyshev] {
            let prob: Problem = gen_poisson(dim, 3, n0).map_err(|e| e.to_string())?.into();
            let h = build_hierarchy(&prob, &BuildConfig::new(CycleSpec::w_cycle(2, family).unwrap()))
                .map_err(|e| e.to_string())?;
            ensure(h.dim() <= 80, "instance too large")?;
            let b = assemble(&AmliPreconditioner::new(&h));
            let oracle = ldu_inverses(&h).pop().unwrap();
            worst = worst.max(max_rel_dev(&b, &oracle));
            let lib = block_factorization_inverse(&h, h.levels.len() - 1).map_err(|e| e.to_string())?;
            worst_lib = worst_lib.max(max_rel_dev(&lib, &oracle));
        }
    }
    ensure(worst <= 1e-10 && worst_lib <= 1e-10, format!("deviations {worst:.3e}, {worst_lib:.3e}"))?;
    Ok(format!("max relative deviation {worst:.2e}"))
}

fn c11_bound_soundness() -> Outcome {
    let mut tightest = 0.0f64;
    for (dim, n0) in [(1usize, 3usize), (2, 1)] {
        for family in [PolyFamily::BestApprox, PolyFamily::Chebyshev] {
            for levels in 2..=4 {
                let prob: Problem = gen_poisson(dim, levels + 1, n0).map_err(|e| e.to_string())?.into();
                let cycle = CycleSpec::w_cycle(levels, family).unwrap();
                let mut cfg = BuildConfig::new(cycle.clone());
                cfg.rho = RhoMode::Theory { thetas: None };
                cfg.dense_limit = 1024;
                let h = build_hierarchy(&prob, &cfg).map_err(|e| e.to_string())?;
                let top = h.levels.len() - 1;
                let mut thetas: Vec<(f64, f64)> = h.thetas[..top].iter().map(|t| t.unwrap()).collect();
                thetas.push(measure_level_theta(&h, top).map_err(|e| e.to_string())?);
                let bound = multilevel_bound(&thetas, &cycle).map_err(|e| e.to_string())?;
                let kappa = measure_condition(&AmliPreconditioner::new(&h), &h.top().a, 1024)
                    .map_err(|e| e.to_string())?;
                ensure(
                    kappa <= bound.final_kappa_bound * (1.0 + 1e-8),
                    format!(
                        "{dim}D {} l={levels}: kappa {kappa:.6} > bound {:.6}",
                        family.name(),
                        bound.final_kappa_bound
                    ),
                )?;
                tightest = tightest.max(kappa / bound.final_kappa_bound);
            }
        }
    }
    Ok(format!("max kappa/bound {tightest:.4}"))
}

fn c12_level_independence() -> Outcome {
    let start = Instant::now();
    let mut w = Vec::new();
    let mut v = Vec::new();
    for levels in 3..=6 {
        let prob: Problem = gen_poisson(2, levels + 1, 4).map_err(|e| e.to_string())?.into();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let b: Vec<f64> = (0..prob.matrix().nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for (cycle, out) in [
            (CycleSpec::w_cycle(levels, PolyFamily::BestApprox).unwrap(), &mut w),
            (CycleSpec::v_cycle(levels, PolyFamily::Identity).unwrap(), &mut v),
        ] {
            let mut cfg = BuildConfig::new(cycle);
            cfg.rho = RhoMode::Measure;
            let h = build_hierarchy(&prob, &cfg).map_err(|e| e.to_string())?;
            let (_, rep) = pcg_solve(&h.top().a, &b, &AmliPreconditioner::new(&h), PcgOptions::default())
                .map_err(|e| e.to_string())?;
            ensure(rep.converged, format!("l={levels} did not converge"))?;
            out.push(rep.iterations);
        }
    }
    let spread = w.iter().max().unwrap() - w.iter().min().unwrap();
    ensure(spread <= 2, format!("W-cycle iterations {w:?}"))?;
    ensure(v.windows(2).all(|p| p[1] > p[0]), format!("V-cycle identity iterations {v:?} not increasing"))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, format!("took {secs:.1} s"))?;
    Ok(format!("W {w:?}, V {v:?}"))
}

fn c13_degree() -> Outcome {
    let m = required_degree(1.0, 3f64.sqrt(), 3.0).map_err(|e| e.to_string())?;
    ensure(m == 1, format!("required_degree(1, sqrt 3, 3) = {m}"))?;
    let r = ratio_bound(4.0, 2);
    ensure((r - 1.4).abs() <= 1e-12, format!("ratio {r}"))?;
    Ok(format!("degree {m}, ratio {r}"))
}

fn c14_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_amli"))
            .args(["verify", "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(
            status.status.code() == Some(0),
            format!("exit {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr)),
        )?;
        reports.push(std::fs::read(out.join("verify.json")).map_err(|e| e.to_string())?);
    }
    ensure(reports[0] == reports[1], "reports differ")?;
    Ok(format!("{} identical bytes", reports[0].len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("best-approximation error formula", c1_error_formula),
        ("Remez oracle equivalence", c2_remez),
        ("recurrence identity", c3_recurrence),
        ("residual polynomial bounds", c4_residual_bounds),
        ("corollary consistency", c5_corollary),
        ("smoother damping and positivity", c6_damping),
        ("Chebyshev acceleration range", c7_chebyshev_range),
        ("two-level closed form", c8_two_level),
        ("commutation and error propagation", c9_commutation),
        ("block factorization equivalence", c10_block_factorization),
        ("bound soundness", c11_bound_soundness),
        ("level independence", c12_level_independence),
        ("degree calculator", c13_degree),
        ("determinism", c14_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} ({secs:.2} s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} ({secs:.2} s)", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
