//! The `amli` command line: `poly`, `solve`, `analyze` and `verify`.

pub mod config;

pub use config::{ProblemKind, RhoModeName, RunConfig, SmootherName, VerifyConfig};

use crate::analysis::{
    self, block_factorization_inverse, measure_condition, measure_level_theta, multilevel_bound,
    threshold_table, verify_identities, BoundReport, ThresholdRow,
};
use crate::hierarchy::{
    build_hierarchy, galerkin_coarse, gen_poisson, BuildConfig, CycleSpec, Hierarchy, HierarchySummary,
    PolyFamily, Problem, RhoMode,
};
use crate::polyapprox::{
    best_error, best_q, best_q_on_reference, damping_bound, equioscillation_points, error_via_corollary,
    positivity_holds, ExtremePoint, SpectralInterval,
};
use crate::precond::{pcg_solve, AmliPreconditioner, PcgOptions, SolveReport};
use crate::sparse::{assemble, dense_cholesky_ok, mm, norm2, CsrMatrix};
use crate::{jsonfmt, AmliError};
use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {msg}")]
    Config { path: String, msg: String },
    #[error(transparent)]
    Amli(#[from] AmliError),
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<crate::SparseError> for CliError {
    fn from(e: crate::SparseError) -> Self {
        CliError::Amli(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "amli", version, about = "AMLI preconditioners, polynomial tables and bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Best-approximation coefficients, errors and equioscillation points.
    Poly,
    /// PCG with the configured AMLI preconditioner.
    Solve,
    /// Level recursion, uniformity verdict and degree table.
    Analyze,
    /// Identity and invariant checks; exits nonzero on any violation.
    Verify,
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    RunConfig::from_json(&text).map_err(|e| CliError::Config {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

pub fn build_problem(cfg: &RunConfig) -> Result<Problem, CliError> {
    match cfg.problem {
        ProblemKind::Poisson1d | ProblemKind::Poisson2d => {
            let dim = if cfg.problem == ProblemKind::Poisson1d { 1 } else { 2 };
            Ok(gen_poisson(dim, cfg.levels + 1, cfg.n0)?.into())
        }
        ProblemKind::Mtx => {
            let path = cfg.matrix.as_ref().ok_or_else(|| config_err("matrix", "required for problem mtx"))?;
            let coarse = cfg.coarse.clone().ok_or_else(|| config_err("coarse", "required for problem mtx"))?;
            if coarse.len() != cfg.levels {
                return Err(config_err(
                    "coarse",
                    &format!("{} coarse lists for {} levels", coarse.len(), cfg.levels),
                ));
            }
            let matrix = mm::read_matrix_file(Path::new(path))?;
            Ok(Problem::Algebraic {
                matrix,
                coarse_sets: coarse,
            })
        }
    }
}

fn config_err(field: &str, msg: &str) -> CliError {
    CliError::Config {
        path: format!("field `{field}`"),
        msg: msg.into(),
    }
}

pub fn cycle_spec(cfg: &RunConfig) -> Result<CycleSpec, CliError> {
    Ok(match &cfg.cycle {
        Some(nus) => CycleSpec::new(nus.clone(), cfg.family)?,
        None => CycleSpec::w_cycle(cfg.levels, cfg.family)?,
    })
}

pub fn build_config(cfg: &RunConfig) -> Result<BuildConfig, CliError> {
    let mut b = BuildConfig::new(cycle_spec(cfg)?);
    b.smoother = cfg.smoother_kind();
    b.coarse_threshold = cfg.coarse_threshold;
    b.dense_limit = cfg.dense_limit;
    b.lanczos_iters = cfg.lanczos_iters;
    b.widen = cfg.widen;
    b.rho = match cfg.rho_mode {
        RhoModeName::Theory => RhoMode::Theory {
            thetas: cfg.thetas.clone(),
        },
        RhoModeName::Measure => RhoMode::Measure,
        RhoModeName::Given => RhoMode::Given {
            rhos: cfg.rhos.clone().ok_or_else(|| config_err("rhos", "required for rho_mode given"))?,
        },
    };
    Ok(b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyRow {
    pub degree: usize,
    pub coeffs: Vec<f64>,
    pub error: f64,
    pub equioscillation: Vec<ExtremePoint>,
    pub positivity: Option<bool>,
    pub damping: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyReport {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub mu: Option<f64>,
    pub rows: Vec<PolyRow>,
}

impl PolyReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("degree,error,positivity,damping,coeffs\n");
        for r in &self.rows {
            let c: Vec<String> = r.coeffs.iter().map(|c| format!("{c:.16e}")).collect();
            s.push_str(&format!(
                "{},{:.16e},{},{},{}\n",
                r.degree,
                r.error,
                r.positivity.map(|b| b.to_string()).unwrap_or_default(),
                r.damping.map(|d| format!("{d:.16e}")).unwrap_or_default(),
                c.join(";")
            ));
        }
        s
    }
}

pub fn cmd_poly(cfg: &RunConfig) -> Result<PolyReport, CliError> {
    let iv = SpectralInterval::new(cfg.interval.0, cfg.interval.1).map_err(AmliError::from)?;
    let mut rows = Vec::new();
    for &m in &cfg.degrees {
        let q = best_q(m, &iv).map_err(AmliError::from)?;
        let (positivity, damping) = match cfg.mu {
            Some(mu) => (
                Some(positivity_holds(m, mu).map_err(AmliError::from)?),
                Some(damping_bound(m, mu).map_err(AmliError::from)?),
            ),
            None => (None, None),
        };
        rows.push(PolyRow {
            degree: m,
            error: best_error(m, &iv),
            equioscillation: equioscillation_points(&q, &iv, 4001, 1e-6),
            coeffs: q.coeffs,
            positivity,
            damping,
        });
    }
    Ok(PolyReport {
        lambda_min: iv.lambda_min,
        lambda_max: iv.lambda_max,
        mu: cfg.mu,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub n: usize,
    pub hierarchy: HierarchySummary,
    pub coarse_solves: usize,
    /// `||b - A x|| / ||b||`
    pub relative_residual: f64,
    pub report: SolveReport,
}

pub fn rhs_for(cfg: &RunConfig, n: usize, seed: u64) -> Result<Vec<f64>, CliError> {
    match &cfg.rhs {
        Some(path) => {
            let b = mm::read_vector_file(Path::new(path))?;
            if b.len() != n {
                return Err(config_err("rhs", &format!("length {} for dimension {n}", b.len())));
            }
            Ok(b)
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..n).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect())
        }
    }
}

pub fn solve_with(h: &Hierarchy, b: &[f64], opts: PcgOptions) -> Result<(Vec<f64>, SolveSummary), CliError> {
    let a = &h.top().a;
    let p = AmliPreconditioner::new(h);
    let (x, report) = pcg_solve(a, b, &p, opts)?;
    let mut r = b.to_vec();
    a.spmv_add(-1.0, &x, &mut r);
    let (nb, nr) = (norm2(b), norm2(&r));
    let summary = SolveSummary {
        n: a.nrows(),
        hierarchy: h.summary(),
        coarse_solves: p.coarse_solves(),
        relative_residual: if nb > 0.0 { nr / nb } else { 0.0 },
        report,
    };
    Ok((x, summary))
}

pub fn cmd_solve(cfg: &RunConfig, seed: u64) -> Result<SolveSummary, CliError> {
    let problem = build_problem(cfg)?;
    let h = build_hierarchy(&problem, &build_config(cfg)?)?;
    let b = rhs_for(cfg, h.dim(), seed)?;
    let (_, s) = solve_with(&h, &b, PcgOptions { tol: cfg.tol, maxit: cfg.maxit })?;
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    /// `given` or `measured`
    pub theta_source: String,
    pub bound: BoundReport,
    /// `kappa(B^{-1} A)` of the built hierarchy when the constants were measured.
    pub measured_kappa: Option<f64>,
    pub thresholds: Vec<ThresholdRow>,
    pub chebyshev_threshold_at_3: f64,
    pub chebyshev_threshold_at_3_as_quoted: f64,
    pub best_linear_threshold_at_3: f64,
}

impl AnalyzeReport {
    pub fn thresholds_csv(&self) -> String {
        let mut s = String::from("kappa_bar,chebyshev,best_linear,theta_ratio,required_degree\n");
        for r in &self.thresholds {
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                r.kappa_bar,
                r.chebyshev,
                r.best_linear,
                r.ratio,
                r.degree.map(|d| d.to_string()).unwrap_or_else(|| "infeasible".into())
            ));
        }
        s
    }
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<AnalyzeReport, CliError> {
    let cycle = cycle_spec(cfg)?;
    let (thetas, source, measured_kappa) = match &cfg.thetas {
        Some(t) => (t.clone(), "given", None),
        None => {
            let problem = build_problem(cfg)?;
            let mut bc = build_config(cfg)?;
            bc.rho = RhoMode::Theory { thetas: None };
            let h = build_hierarchy(&problem, &bc)?;
            let top = h.levels.len() - 1;
            if h.top().dim() > cfg.dense_limit {
                return Err(AmliError::ThetaRequired { level: h.top().k }.into());
            }
            let mut t: Vec<(f64, f64)> = h.thetas[..top].iter().map(|t| t.expect("theory mode")).collect();
            t.push(measure_level_theta(&h, top)?);
            if cycle.family == PolyFamily::Exact {
                t = vec![t[top]; cycle.levels()];
            }
            let k = measure_condition(&AmliPreconditioner::new(&h), &h.top().a, cfg.dense_limit)?;
            (t, "measured", Some(k))
        }
    };
    let bound = multilevel_bound(&thetas, &cycle)?;
    Ok(AnalyzeReport {
        theta_source: source.into(),
        bound,
        measured_kappa,
        thresholds: threshold_table(&cfg.kappa_bars, cfg.theta_ratio),
        chebyshev_threshold_at_3: analysis::chebyshev_threshold(3.0),
        chebyshev_threshold_at_3_as_quoted: analysis::STATED_CHEBYSHEV_THRESHOLD_AT_3,
        best_linear_threshold_at_3: analysis::best_linear_threshold(3.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("name,deviation,tolerance,passed\n");
        for c in &self.checks {
            s.push_str(&format!("{},{:.16e},{:.16e},{}\n", c.name, c.deviation, c.tolerance, c.passed));
        }
        s
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, name: impl Into<String>, deviation: f64, tolerance: f64) {
        self.0.push(Check {
            name: name.into(),
            deviation,
            tolerance,
            passed: deviation <= tolerance,
        });
    }

    fn flag(&mut self, name: impl Into<String>, ok: bool) {
        self.push(name, if ok { 0.0 } else { 1.0 }, 0.0);
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn dense_dev(x: &nalgebra::DMatrix<f64>, y: &nalgebra::DMatrix<f64>) -> f64 {
    (x - y).amax() / x.amax().max(y.amax()).max(f64::MIN_POSITIVE)
}

pub fn cmd_verify(cfg: &RunConfig, seed: u64) -> Result<VerifyReport, CliError> {
    let v = &cfg.verify;
    let mut c = Checks(Vec::new());

    // polynomial identities
    for (lo, hi) in [(1.0, 4.0), (0.5, 8.0), (2.0, 3.0)] {
        let iv = SpectralInterval::new(lo, hi).map_err(AmliError::from)?;
        let dev = (1..=10)
            .map(|m| rel(error_via_corollary(m, &iv), best_error(m, &iv)))
            .fold(0.0, f64::max);
        c.push(format!("error_corollary[{lo},{hi}]"), dev, 1e-14);
        let mut grid_dev = 0.0f64;
        let mut count_dev = 0usize;
        // stop once the error is too close to rounding for the grid to resolve it
        for m in (1..=8).take_while(|&m| best_error(m, &iv) > 1e-8) {
            let q = best_q(m, &iv).map_err(AmliError::from)?;
            let pts = equioscillation_points(&q, &iv, 20001, 1e-7);
            let sup = pts.iter().map(|p| p.error.abs()).fold(0.0, f64::max);
            grid_dev = grid_dev.max(rel(sup, best_error(m, &iv)));
            count_dev = count_dev.max(pts.len().abs_diff(m + 2));
        }
        c.push(format!("minimax_error[{lo},{hi}]"), grid_dev, 1e-7);
        c.push(format!("equioscillation_count[{lo},{hi}]"), count_dev as f64, 0.0);
    }
    let mut rec = 0.0f64;
    for a in [5.0 / 3.0, 3.0, 1.25] {
        let eta = -(a - (a * a - 1.0f64).sqrt());
        for m in 0..=10 {
            let (q0, q1, q2) = (
                best_q_on_reference(m, a).map_err(AmliError::from)?,
                best_q_on_reference(m + 1, a).map_err(AmliError::from)?,
                best_q_on_reference(m + 2, a).map_err(AmliError::from)?,
            );
            for i in 0..=100 {
                let t = -1.0 + 2.0 * i as f64 / 100.0;
                let lhs = q2.eval(t) / eta - 2.0 * t * q1.eval(t) + eta * q0.eval(t);
                rec = rec.max((lhs + 2.0).abs());
            }
        }
    }
    c.push("recurrence", rec, 1e-10);
    c.push("damping_bound(2,4)", (damping_bound(2, 4.0).map_err(AmliError::from)? - 1.0 / 6.0).abs(), 1e-15);
    c.flag(
        "positivity(1,8)=false,(2,8)=true",
        !positivity_holds(1, 8.0).map_err(AmliError::from)? && positivity_holds(2, 8.0).map_err(AmliError::from)?,
    );

    // two-level identities on random instances
    for s in 0..v.seeds as u64 {
        for nu in 1..=v.max_nu {
            let r = verify_identities(v.n, seed + s, nu, v.perturb_horner)?;
            let tag = format!("seed={},nu={nu}", seed + s);
            c.push(format!("mbar_forms[{tag}]"), r.mbar_forms, 1e-11);
            c.flag(format!("mbar_spd[{tag}]"), r.mbar_spd);
            c.push(format!("two_level_closed_form[{tag}]"), r.two_level_closed_form, 1e-11);
            c.push(format!("commutation[{tag}]"), r.commutation, 1e-10);
            c.push(format!("error_propagation[{tag}]"), r.error_propagation, 1e-10);
        }
    }

    // Poisson hierarchies
    for (dim, n0) in [(1usize, 3usize), (2, 1)] {
        let prob: Problem = gen_poisson(dim, v.levels + 1, n0)?.into();
        for family in [PolyFamily::BestApprox, PolyFamily::Chebyshev] {
            let cycle = CycleSpec::w_cycle(v.levels, family)?;
            let mut bc = BuildConfig::new(cycle.clone());
            bc.dense_limit = 1024;
            let h = build_hierarchy(&prob, &bc)?;
            let tag = format!("{dim}d,{}", family.name());
            let mut cong = 0.0f64;
            let mut galerkin = 0.0f64;
            for (i, lvl) in h.levels.iter().enumerate() {
                let ap = lvl.a.permute(&lvl.partition.perm);
                let j = lvl.j_dense();
                let lhs = j.transpose() * ap.to_dense() * &j;
                cong = cong.max(dense_dev(&lhs, &lvl.atilde_dense(h.coarse_matrix(i))));
                let nf = lvl.n_fine();
                let mut t: Vec<(usize, usize, f64)> = Vec::new();
                for r in 0..nf {
                    let (cols, vals) = lvl.w.row(r);
                    t.extend(cols.iter().zip(vals).map(|(&cc, &x)| (r, cc, x)));
                }
                t.extend((0..lvl.n_coarse()).map(|r| (nf + r, r, 1.0)));
                let p = CsrMatrix::from_triplets(lvl.dim(), lvl.n_coarse(), &t)?;
                let g = galerkin_coarse(&ap, &p)?;
                galerkin = galerkin.max(dense_dev(&g.to_dense(), &h.coarse_matrix(i).to_dense()));
            }
            c.push(format!("congruence[{tag}]"), cong, 1e-12);
            c.push(format!("galerkin[{tag}]"), galerkin, 1e-12);
            let b = assemble(&AmliPreconditioner::new(&h));
            c.push(format!("amli_symmetric[{tag}]"), dense_dev(&b, &b.transpose()), 1e-10);
            c.flag(format!("amli_spd[{tag}]"), dense_cholesky_ok(&((&b + b.transpose()) * 0.5)));
            let top = h.levels.len() - 1;
            let ldu = block_factorization_inverse(&h, top)?;
            c.push(format!("block_factorization[{tag}]"), dense_dev(&b, &ldu), 1e-10);
            let mut t: Vec<(f64, f64)> = h.thetas[..top].iter().map(|t| t.expect("theory mode")).collect();
            t.push(measure_level_theta(&h, top)?);
            let bound = multilevel_bound(&t, &cycle)?;
            let kappa = measure_condition(&AmliPreconditioner::new(&h), &h.top().a, 1024)?;
            c.push(
                format!("bound_soundness[{tag}]"),
                (kappa / bound.final_kappa_bound - 1.0).max(0.0),
                1e-8,
            );
        }
    }
    let passed = c.0.iter().all(|x| x.passed);
    Ok(VerifyReport {
        seed,
        checks: c.0,
        passed,
    })
}

fn write(out: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(out)?;
    let p = out.join(name);
    std::fs::write(&p, text)?;
    Ok(p)
}

/// Run one command; returns the process exit status.
pub fn run(cli: &Cli) -> Result<i32, CliError> {
    let cfg = load_config(cli.config.as_deref())?;
    let out = &cli.out;
    match cli.command {
        Command::Poly => {
            let r = cmd_poly(&cfg)?;
            println!("interval [{}, {}]", r.lambda_min, r.lambda_max);
            println!("{:>3} {:>24} {:>6} {:>10}", "m", "error", "points", "damping");
            for row in &r.rows {
                println!(
                    "{:>3} {:>24.16e} {:>6} {:>10}",
                    row.degree,
                    row.error,
                    row.equioscillation.len(),
                    row.damping.map(|d| format!("{d:.6}")).unwrap_or_else(|| "-".into())
                );
            }
            match cli.format {
                Format::Json => write(out, "poly.json", &jsonfmt::to_string(&r)?)?,
                Format::Csv => write(out, "poly.csv", &r.to_csv())?,
            };
            Ok(0)
        }
        Command::Solve => {
            let s = cmd_solve(&cfg, cli.seed)?;
            write(out, "residuals.csv", &s.report.to_csv())?;
            write(out, "solve.json", &jsonfmt::to_string(&s)?)?;
            println!(
                "n = {}, iterations = {}, converged = {}, kappa estimate = {:.6}, coarse solves = {}",
                s.n, s.report.iterations, s.report.converged, s.report.kappa_estimate, s.coarse_solves
            );
            Ok(if s.report.converged { 0 } else { 1 })
        }
        Command::Analyze => {
            let r = cmd_analyze(&cfg)?;
            write(out, "bounds.json", &jsonfmt::to_string(&r)?)?;
            if cli.format == Format::Csv {
                write(out, "thresholds.csv", &r.thresholds_csv())?;
            }
            for l in &r.bound.levels {
                println!(
                    "k = {:>2}  theta = ({:.6}, {:.6})  r = ({:.6}, {:.6})  rho = ({:.6}, {:.6})",
                    l.k, l.theta0, l.theta1, l.r0, l.r1, l.rho0, l.rho1
                );
            }
            println!("final kappa bound {:.6}, uniform = {}", r.bound.final_kappa_bound, r.bound.uniform);
            if let Some(k) = r.measured_kappa {
                println!("measured kappa {k:.6}");
            }
            Ok(0)
        }
        Command::Verify => {
            let r = cmd_verify(&cfg, cli.seed)?;
            match cli.format {
                Format::Json => write(out, "verify.json", &jsonfmt::to_string(&r)?)?,
                Format::Csv => write(out, "verify.csv", &r.to_csv())?,
            };
            for c in r.checks.iter().filter(|c| !c.passed) {
                eprintln!("FAILED {}: deviation {:.3e} > {:.3e}", c.name, c.deviation, c.tolerance);
            }
            println!(
                "{} of {} checks passed",
                r.checks.iter().filter(|c| c.passed).count(),
                r.checks.len()
            );
            Ok(if r.passed { 0 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_rows() {
        let mut cfg = RunConfig::default();
        cfg.degrees = vec![0, 1, 2];
        cfg.mu = Some(4.0);
        let r = cmd_poly(&cfg).unwrap();
        assert!((r.rows[0].coeffs[0] - 0.625).abs() < 1e-15);
        assert!((r.rows[0].error - 0.375).abs() < 1e-15);
        assert!((r.rows[1].coeffs[0] - 9.0 / 8.0).abs() < 1e-14);
        assert!((r.rows[1].coeffs[1] + 0.25).abs() < 1e-14);
        assert!((r.rows[1].error - 0.125).abs() < 1e-14);
        assert!((r.rows[2].damping.unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(r.rows[2].equioscillation.len(), 4);
        assert!(r.to_csv().lines().count() == 4);
    }

    #[test]
    fn trivial_tolerance_solve() {
        let mut cfg = RunConfig::default();
        cfg.levels = 2;
        cfg.n0 = 2;
        cfg.tol = 1.0;
        let s = cmd_solve(&cfg, 1).unwrap();
        assert_eq!(s.report.iterations, 0);
        assert!(s.report.converged);
    }

    #[test]
    fn analyze_given_thetas() {
        let mut cfg = RunConfig::default();
        cfg.thetas = Some(vec![(1.0, 1.0)]);
        cfg.family = PolyFamily::Exact;
        let r = cmd_analyze(&cfg).unwrap();
        assert_eq!(r.bound.final_kappa_bound, 1.0);
        assert!(r.bound.uniform);
        assert_eq!(r.chebyshev_threshold_at_3, 2.25);
    }

    #[test]
    fn mtx_requires_coarse_lists() {
        let mut cfg = RunConfig::default();
        cfg.problem = ProblemKind::Mtx;
        cfg.matrix = Some("a.mtx".into());
        assert!(matches!(build_problem(&cfg), Err(CliError::Config { .. })));
    }
}
