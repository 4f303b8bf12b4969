mod common;

use amli::analysis::{measure_condition, measure_level_theta, multilevel_bound, verify_identities};
use amli::hierarchy::{
    build_hierarchy, gen_poisson, partition_fc, BuildConfig, CycleSpec, Grid, PolyFamily, Problem, RhoMode,
    SmootherKind,
};
use amli::precond::{amli_apply, pcg_solve, AmliPreconditioner, PcgOptions};
use amli::sparse::{assemble, dense_cholesky_ok, mm};
use amli::{AmliError, CsrMatrix};
use common::max_rel_dev;
use proptest::prelude::*;

fn theory_hierarchy(dim: usize, levels: usize, n0: usize, cycle: CycleSpec) -> amli::hierarchy::Hierarchy {
    let prob: Problem = gen_poisson(dim, levels + 1, n0).unwrap().into();
    let mut cfg = BuildConfig::new(cycle);
    cfg.rho = RhoMode::Theory { thetas: None };
    cfg.dense_limit = 1024;
    build_hierarchy(&prob, &cfg).unwrap()
}

#[test]
fn exact_family_one_level_matches_two_level_baseline() {
    // with the exact coarse solve every family reduces to the same two-level method
    let prob: Problem = gen_poisson(2, 2, 3).unwrap().into();
    let b: Vec<f64> = (0..prob.matrix().nrows()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
    let mut iters = Vec::new();
    for family in [PolyFamily::Exact, PolyFamily::BestApprox, PolyFamily::Identity] {
        let h = build_hierarchy(&prob, &BuildConfig::new(CycleSpec::new(vec![1], family).unwrap())).unwrap();
        let p = AmliPreconditioner::new(&h);
        let (_, rep) = pcg_solve(&h.top().a, &b, &p, PcgOptions::default()).unwrap();
        assert!(rep.converged);
        iters.push(rep.iterations);
    }
    assert!(iters.windows(2).all(|w| w[0] == w[1]), "{iters:?}");
}

#[test]
fn exact_family_deep_hierarchy() {
    let prob: Problem = gen_poisson(2, 4, 3).unwrap().into();
    let h = build_hierarchy(&prob, &BuildConfig::new(CycleSpec::w_cycle(3, PolyFamily::Exact).unwrap())).unwrap();
    assert_eq!(h.levels.len(), 1);
    let b = vec![1.0; h.dim()];
    let (x, rep) = pcg_solve(&h.top().a, &b, &AmliPreconditioner::new(&h), PcgOptions::default()).unwrap();
    assert!(rep.converged && rep.iterations < 15);
    let mut r = b.clone();
    h.top().a.spmv_add(-1.0, &x, &mut r);
    assert!(r.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-6 * (h.dim() as f64).sqrt());
}

#[test]
fn w_cycle_iterations_flat_v_cycle_identity_grows() {
    let mut w = Vec::new();
    let mut v = Vec::new();
    for levels in 2..=4 {
        let prob: Problem = gen_poisson(2, levels + 1, 4).unwrap().into();
        let b = vec![1.0; prob.matrix().nrows()];
        for (cycle, out) in [
            (CycleSpec::w_cycle(levels, PolyFamily::BestApprox).unwrap(), &mut w),
            (CycleSpec::v_cycle(levels, PolyFamily::Identity).unwrap(), &mut v),
        ] {
            let mut cfg = BuildConfig::new(cycle);
            cfg.rho = RhoMode::Measure;
            let h = build_hierarchy(&prob, &cfg).unwrap();
            let (_, rep) = pcg_solve(&h.top().a, &b, &AmliPreconditioner::new(&h), PcgOptions::default()).unwrap();
            out.push(rep.iterations);
        }
    }
    assert!(w.iter().max().unwrap() - w.iter().min().unwrap() <= 1, "{w:?}");
    assert!(v.windows(2).all(|p| p[1] > p[0]), "{v:?}");
}

#[test]
fn algebraic_splitting_from_matrix_market() {
    // 1D Poisson read back from a file, coarse points every other unknown
    let a = gen_poisson(1, 1, 15).unwrap().matrix;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.mtx");
    mm::write_matrix(std::fs::File::create(&path).unwrap(), &a).unwrap();
    let a = mm::read_matrix_file(&path).unwrap();
    let coarse: Vec<Vec<usize>> = vec![(1..15).step_by(2).collect(), (1..7).step_by(2).collect()];
    let prob = Problem::Algebraic { matrix: a.clone(), coarse_sets: coarse };
    let h = build_hierarchy(&prob, &BuildConfig::new(CycleSpec::w_cycle(2, PolyFamily::BestApprox).unwrap())).unwrap();
    assert_eq!(h.dim(), 15);
    assert_eq!(h.a0.nrows(), 3);
    let b = vec![1.0; 15];
    let (_, rep) = pcg_solve(&a, &b, &AmliPreconditioner::new(&h), PcgOptions::default()).unwrap();
    assert!(rep.converged && rep.iterations < 10, "{rep:?}");
}

#[test]
fn non_symmetric_smoother_rejected() {
    let prob: Problem = gen_poisson(1, 3, 3).unwrap().into();
    let mut cfg = BuildConfig::new(CycleSpec::w_cycle(2, PolyFamily::BestApprox).unwrap());
    cfg.smoother = SmootherKind::GaussSeidel;
    assert!(matches!(build_hierarchy(&prob, &cfg), Err(AmliError::NonSymmetricSmoother(_))));
}

#[test]
fn identities_fail_under_horner_perturbation() {
    let r = verify_identities(20, 3, 2, 1e-3).unwrap();
    assert!(r.error_propagation > 1e-6, "{r:?}");
    let r = verify_identities(20, 3, 2, 0.0).unwrap();
    assert!(r.error_propagation < 1e-10);
}

fn family() -> impl Strategy<Value = PolyFamily> {
    prop_oneof![Just(PolyFamily::BestApprox), Just(PolyFamily::Chebyshev)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn partition_round_trip(dim in 1usize..=2, n in 1usize..6, seed in any::<u64>()) {
        let g = Grid { dim, n: 2 * n + 1 };
        let part = partition_fc(g).unwrap();
        let x: Vec<f64> = (0..g.ndofs()).map(|i| ((i as u64 ^ seed) % 97) as f64).collect();
        prop_assert_eq!(part.backward(&part.forward(&x)), x);
        prop_assert_eq!(part.n_coarse(), Grid { dim, n }.ndofs());
    }

    #[test]
    fn amli_operator_is_spd(dim in 1usize..=2, levels in 1usize..=3, fam in family(), nu2 in 1usize..=2) {
        let n0 = if dim == 1 { 3 } else { 1 };
        let nus: Vec<usize> = (0..levels).map(|k| if k == 0 { 1 } else { nu2 }).collect();
        let prob: Problem = gen_poisson(dim, levels + 1, n0).unwrap().into();
        let h = build_hierarchy(&prob, &BuildConfig::new(CycleSpec::new(nus, fam).unwrap())).unwrap();
        let b = assemble(&AmliPreconditioner::new(&h));
        prop_assert!(max_rel_dev(&b, &b.transpose()) < 1e-10);
        prop_assert!(dense_cholesky_ok(&((&b + b.transpose()) * 0.5)));
        let x: Vec<f64> = (0..h.dim()).map(|i| (i as f64).sin()).collect();
        let y = amli_apply(&h, &x).unwrap();
        let want = &b * nalgebra::DVector::from_vec(x);
        prop_assert!(y.iter().zip(want.iter()).all(|(p, q)| (p - q).abs() < 1e-10 * (1.0 + q.abs())));
    }

    #[test]
    fn measured_condition_within_bound(dim in 1usize..=2, levels in 2usize..=3, fam in family()) {
        let n0 = if dim == 1 { 3 } else { 1 };
        let cycle = CycleSpec::w_cycle(levels, fam).unwrap();
        let h = theory_hierarchy(dim, levels, n0, cycle.clone());
        let top = h.levels.len() - 1;
        let mut thetas: Vec<(f64, f64)> = h.thetas[..top].iter().map(|t| t.unwrap()).collect();
        thetas.push(measure_level_theta(&h, top).unwrap());
        let bound = multilevel_bound(&thetas, &cycle).unwrap();
        let kappa = measure_condition(&AmliPreconditioner::new(&h), &h.top().a, 1024).unwrap();
        prop_assert!(kappa <= bound.final_kappa_bound * (1.0 + 1e-8), "{} > {}", kappa, bound.final_kappa_bound);
    }

    #[test]
    fn pcg_reduces_residual(n in 2usize..40, shift in 0.01f64..2.0, tol_exp in 2i32..10) {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + shift));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 % 3.0).collect();
        let tol = 10f64.powi(-tol_exp);
        let id = amli::sparse::Identity(n);
        let (_, rep) = pcg_solve(&a, &b, &id, PcgOptions { tol, maxit: 10 * n }).unwrap();
        prop_assert!(rep.converged);
        prop_assert!(rep.residual_history.last().unwrap() <= &(tol * rep.residual_history[0]));
        prop_assert!(rep.iterations <= n + 1);
    }
}
