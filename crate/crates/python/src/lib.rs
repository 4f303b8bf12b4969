use amli::analysis::{multilevel_bound, required_degree as degree_for, verify_identities as identities};
use amli::hierarchy::{build_hierarchy, gen_poisson, BuildConfig, CycleSpec, PolyFamily, Problem, RhoMode};
use amli::polyapprox;
use amli::precond::{pcg_solve, AmliPreconditioner, PcgOptions};
use amli::LinearOperator;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn family(name: &str) -> PyResult<PolyFamily> {
    match name {
        "bestapprox" => Ok(PolyFamily::BestApprox),
        "chebyshev" => Ok(PolyFamily::Chebyshev),
        "exact" => Ok(PolyFamily::Exact),
        "identity" => Ok(PolyFamily::Identity),
        _ => Err(PyValueError::new_err(format!("unknown polynomial family `{name}`"))),
    }
}

#[pyclass(frozen)]
struct SpectralInterval {
    inner: polyapprox::SpectralInterval,
}

#[pymethods]
impl SpectralInterval {
    #[new]
    fn new(lambda_min: f64, lambda_max: f64) -> PyResult<Self> {
        Ok(Self {
            inner: polyapprox::SpectralInterval::new(lambda_min, lambda_max).map_err(err)?,
        })
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a
    }

    /// Monomial coefficients of the degree-`m` best approximation to 1/x.
    fn best_q(&self, m: usize) -> PyResult<Vec<f64>> {
        Ok(polyapprox::best_q(m, &self.inner).map_err(err)?.coeffs)
    }

    fn best_error(&self, m: usize) -> f64 {
        polyapprox::best_error(m, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!("SpectralInterval({}, {})", self.inner.lambda_min, self.inner.lambda_max)
    }
}

#[pyfunction]
fn best_q(m: usize, lambda_min: f64, lambda_max: f64) -> PyResult<Vec<f64>> {
    let iv = polyapprox::SpectralInterval::new(lambda_min, lambda_max).map_err(err)?;
    Ok(polyapprox::best_q(m, &iv).map_err(err)?.coeffs)
}

#[pyfunction]
fn best_error(m: usize, lambda_min: f64, lambda_max: f64) -> PyResult<f64> {
    let iv = polyapprox::SpectralInterval::new(lambda_min, lambda_max).map_err(err)?;
    Ok(polyapprox::best_error(m, &iv))
}

#[pyfunction]
fn cheb_t(k: usize, t: f64) -> f64 {
    polyapprox::cheb_t(k, t)
}

#[pyfunction]
fn damping_bound(m: usize, mu: f64) -> PyResult<f64> {
    polyapprox::damping_bound(m, mu).map_err(err)
}

#[pyfunction]
fn positivity_holds(m: usize, mu: f64) -> PyResult<bool> {
    polyapprox::positivity_holds(m, mu).map_err(err)
}

#[pyfunction]
fn required_degree(theta0: f64, theta1: f64, kappa_bar: f64) -> PyResult<usize> {
    degree_for(theta0, theta1, kappa_bar).map_err(err)
}

/// Final condition bound and uniformity verdict for per-level theta pairs.
#[pyfunction]
#[pyo3(signature = (thetas, nus, family_name = "bestapprox"))]
fn kappa_bound(thetas: Vec<(f64, f64)>, nus: Vec<usize>, family_name: &str) -> PyResult<(f64, bool)> {
    let cycle = CycleSpec::new(nus, family(family_name)?).map_err(err)?;
    let r = multilevel_bound(&thetas, &cycle).map_err(err)?;
    Ok((r.final_kappa_bound, r.uniform))
}

/// Largest deviations of the two-level identities on a random dense instance.
#[pyfunction]
#[pyo3(signature = (n, seed, nu, perturb = 0.0))]
fn verify_identities<'py>(py: Python<'py>, n: usize, seed: u64, nu: usize, perturb: f64) -> PyResult<Bound<'py, PyDict>> {
    let r = identities(n, seed, nu, perturb).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("mbar_forms", r.mbar_forms)?;
    d.set_item("mbar_spd", r.mbar_spd)?;
    d.set_item("two_level_closed_form", r.two_level_closed_form)?;
    d.set_item("commutation", r.commutation)?;
    d.set_item("error_propagation", r.error_propagation)?;
    Ok(d)
}

#[pyclass(frozen)]
struct Hierarchy {
    inner: amli::hierarchy::Hierarchy,
}

#[pymethods]
impl Hierarchy {
    /// AMLI hierarchy for the Poisson problem with `levels` refinements of an
    /// `n0`-point coarsest grid. `nus` defaults to a W-cycle.
    #[staticmethod]
    #[pyo3(signature = (dim, levels, n0 = 3, family_name = "bestapprox", nus = None))]
    fn poisson(dim: usize, levels: usize, n0: usize, family_name: &str, nus: Option<Vec<usize>>) -> PyResult<Self> {
        let fam = family(family_name)?;
        let cycle = match nus {
            Some(n) => CycleSpec::new(n, fam),
            None => CycleSpec::w_cycle(levels, fam),
        }
        .map_err(err)?;
        let problem: Problem = gen_poisson(dim, levels + 1, n0).map_err(err)?.into();
        let mut cfg = BuildConfig::new(cycle);
        cfg.rho = RhoMode::Measure;
        Ok(Self {
            inner: build_hierarchy(&problem, &cfg).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn rhos(&self) -> Vec<(f64, f64)> {
        self.inner.rhos.clone()
    }

    /// `B^{-1} x`
    fn apply(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        AmliPreconditioner::new(&self.inner).apply_checked(&x).map_err(err)
    }

    /// `A x` for the finest-level matrix.
    fn matvec(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let a = &self.inner.top().a;
        if x.len() != a.dim() {
            return Err(PyValueError::new_err(format!("expected length {}, got {}", a.dim(), x.len())));
        }
        Ok(a.apply(&x))
    }

    /// PCG with this preconditioner. Returns `(x, info)`.
    #[pyo3(signature = (b, tol = 1e-8, maxit = 500))]
    fn solve<'py>(&self, py: Python<'py>, b: Vec<f64>, tol: f64, maxit: usize) -> PyResult<(Vec<f64>, Bound<'py, PyDict>)> {
        let p = AmliPreconditioner::new(&self.inner);
        let (x, rep) = pcg_solve(&self.inner.top().a, &b, &p, PcgOptions { tol, maxit }).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("iterations", rep.iterations)?;
        d.set_item("converged", rep.converged)?;
        d.set_item("kappa_estimate", rep.kappa_estimate)?;
        d.set_item("residuals", rep.residual_history)?;
        d.set_item("coarse_solves", p.coarse_solves())?;
        Ok((x, d))
    }

    fn __repr__(&self) -> String {
        format!("Hierarchy(dim={}, levels={})", self.inner.dim(), self.inner.levels.len())
    }
}

#[pymodule]
fn pyamli(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<SpectralInterval>()?;
    m.add_class::<Hierarchy>()?;
    m.add_function(wrap_pyfunction!(best_q, m)?)?;
    m.add_function(wrap_pyfunction!(best_error, m)?)?;
    m.add_function(wrap_pyfunction!(cheb_t, m)?)?;
    m.add_function(wrap_pyfunction!(damping_bound, m)?)?;
    m.add_function(wrap_pyfunction!(positivity_holds, m)?)?;
    m.add_function(wrap_pyfunction!(required_degree, m)?)?;
    m.add_function(wrap_pyfunction!(kappa_bound, m)?)?;
    m.add_function(wrap_pyfunction!(verify_identities, m)?)?;
    Ok(())
}
