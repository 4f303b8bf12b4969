//! JSON run configuration. Every field has a default, so `{}` is a valid file.

use crate::hierarchy::{PolyFamily, SmootherKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Poisson1d,
    Poisson2d,
    Mtx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmootherName {
    Sgs,
    Jacobi,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhoModeName {
    Theory,
    Measure,
    Given,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Dimension of the random dense instances.
    pub n: usize,
    /// Number of random seeds, starting at `--seed`.
    pub seeds: usize,
    pub max_nu: usize,
    /// Added to the constant Horner coefficient of the preconditioner side.
    pub perturb_horner: f64,
    /// Refinement levels of the Poisson hierarchies checked.
    pub levels: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            n: 24,
            seeds: 5,
            max_nu: 3,
            perturb_horner: 0.0,
            levels: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub problem: ProblemKind,
    /// Refinement levels `l`; the grid hierarchy has `l + 1` grids.
    pub levels: usize,
    /// Interior points per direction on the coarsest grid.
    pub n0: usize,
    /// `nu_k` for `k = 1..=l`; a W-cycle when absent.
    pub cycle: Option<Vec<usize>>,
    pub family: PolyFamily,
    pub smoother: SmootherName,
    /// Jacobi relaxation weight.
    pub omega: f64,
    pub rho_mode: RhoModeName,
    /// Per-level `(theta0, theta1)`, `thetas[k-1]` for level `k`, or one pair for all.
    pub thetas: Option<Vec<(f64, f64)>>,
    /// `rhos[k] = rho^(k)` for `rho_mode = given`.
    pub rhos: Option<Vec<(f64, f64)>>,
    /// Matrix Market file for `problem = mtx`.
    pub matrix: Option<String>,
    /// Right-hand side file; a seeded random vector when absent.
    pub rhs: Option<String>,
    /// Coarse unknowns (0-based) per level, finest first, for `problem = mtx`.
    pub coarse: Option<Vec<Vec<usize>>>,
    pub tol: f64,
    pub maxit: usize,
    pub coarse_threshold: usize,
    pub dense_limit: usize,
    pub lanczos_iters: usize,
    pub widen: f64,
    /// `poly`: spectral interval and degrees.
    pub interval: (f64, f64),
    pub degrees: Vec<usize>,
    /// `poly`: condition number for the positivity and damping columns.
    pub mu: Option<f64>,
    /// `analyze`: targets for the threshold and degree table.
    pub kappa_bars: Vec<f64>,
    /// `analyze`: `theta1 / theta0` used for the degree column.
    pub theta_ratio: f64,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::Poisson2d,
            levels: 3,
            n0: 3,
            cycle: None,
            family: PolyFamily::BestApprox,
            smoother: SmootherName::Sgs,
            omega: 2.0 / 3.0,
            rho_mode: RhoModeName::Measure,
            thetas: None,
            rhos: None,
            matrix: None,
            rhs: None,
            coarse: None,
            tol: 1e-8,
            maxit: 500,
            coarse_threshold: 64,
            dense_limit: 1024,
            lanczos_iters: 30,
            widen: 1.01,
            interval: (1.0, 4.0),
            degrees: (0..=6).collect(),
            mu: None,
            kappa_bars: vec![1.5, 2.0, 3.0, 4.0, 5.0, 10.0],
            theta_ratio: 3f64.sqrt(),
            verify: VerifyConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn smoother_kind(&self) -> SmootherKind {
        match self.smoother {
            SmootherName::Sgs => SmootherKind::SymmetricGaussSeidel,
            SmootherName::Jacobi => SmootherKind::Jacobi { omega: self.omega },
            SmootherName::Exact => SmootherKind::Exact,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.cycle = Some(vec![1, 2, 2]);
        c.thetas = Some(vec![(0.9, 1.7)]);
        c.tol = 1e-10 / 3.0;
        c.family = PolyFamily::Chebyshev;
        let s = crate::jsonfmt::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&s).unwrap(), c);
    }

    #[test]
    fn unknown_field_reported_with_position() {
        let e = RunConfig::from_json("{\n  \"levles\": 3\n}").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("levles") && msg.contains("line 2"), "{msg}");
        let e = RunConfig::from_json("{\"family\": \"spline\"}").unwrap_err();
        assert!(e.to_string().contains("spline"));
    }
}
