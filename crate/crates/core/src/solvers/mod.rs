//! Distributionally robust risk parity solvers.
//!
//! * [`solve_scp_pga`]: exact risk parity solve per probability iterate,
//!   projected gradient ascent in `p`.
//! * [`solve_pgda`]: alternating projected descent in `y` and ascent in `p`.
//! * [`solve_robust_counterpart`]: the single convex minimization obtained by
//!   dualizing the inner maximization, used as an independent oracle.

mod config;
mod counterpart;
mod gll;
mod objective;
mod pgda;
mod scp;

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

pub use config::parse_config;
pub use counterpart::solve_robust_counterpart;
pub use objective::{
    bb_step, grad_p, grad_y, objective_f_rp, objective_f_rp_x_form, BB_MAX_STEP, BB_MIN_STEP,
};
pub use pgda::solve_pgda;
pub use scp::solve_scp_pga;

use crate::distance::AmbiguitySpec;
use crate::error::{DrrpError, Result};
use crate::projection::ProjectionConfig;
use crate::riskparity::RiskParityConfig;
use crate::scenario::{Portfolio, ProbabilityDistribution, ScenarioMatrix};

/// Backtracking gives up below this step and flags the iteration.
pub const ETA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub kappa: f64,
    /// Relative change in `p` that ends the outer loop.
    pub eps0: f64,
    pub beta: f64,
    pub tau: f64,
    /// GLL memory.
    pub m: usize,
    pub gamma0: f64,
    pub alpha0: f64,
    /// Initial proxy for PGDA; `None` means `10 * ones(n)`.
    pub y0: Option<DVector<f64>>,
    pub max_outer_iter: usize,
    pub grad_tol: f64,
    pub max_newton_iter: usize,
    pub projection: ProjectionConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let rp = RiskParityConfig::default();
        Self {
            kappa: 1.0,
            eps0: 1e-4,
            beta: 1e-6,
            tau: 0.9,
            m: 10,
            gamma0: 0.1,
            alpha0: 30.0,
            y0: None,
            max_outer_iter: 1000,
            grad_tol: rp.grad_tol,
            max_newton_iter: rp.max_newton_iter,
            projection: ProjectionConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("kappa", self.kappa),
            ("eps0", self.eps0),
            ("gamma0", self.gamma0),
            ("alpha0", self.alpha0),
            ("grad_tol", self.grad_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DrrpError::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("beta", self.beta), ("tau", self.tau)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(DrrpError::invalid(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if self.m == 0 || self.max_outer_iter == 0 || self.max_newton_iter == 0 {
            return Err(DrrpError::invalid(
                "m, max_outer_iter and max_newton_iter must be at least 1",
            ));
        }
        if let Some(y0) = &self.y0 {
            if y0.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(DrrpError::invalid("y0 must be strictly positive"));
            }
        }
        self.projection.validate()
    }

    pub fn risk_parity(&self) -> RiskParityConfig {
        RiskParityConfig {
            kappa: self.kappa,
            grad_tol: self.grad_tol,
            max_newton_iter: self.max_newton_iter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    ScpPga,
    Pgda,
    RobustCounterpart,
}

impl Algorithm {
    pub fn short_name(self) -> &'static str {
        match self {
            Algorithm::ScpPga => "scp",
            Algorithm::Pgda => "pgda",
            Algorithm::RobustCounterpart => "rc",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Algorithm {
    type Err = DrrpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "scp" | "scp-pga" => Ok(Algorithm::ScpPga),
            "pgda" => Ok(Algorithm::Pgda),
            "rc" | "robust-counterpart" => Ok(Algorithm::RobustCounterpart),
            other => Err(DrrpError::invalid(format!(
                "unknown algorithm '{other}' (expected scp, pgda or rc)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub algorithm: Algorithm,
    pub portfolio: Portfolio,
    /// Worst-case distribution; `None` for the robust counterpart, whose
    /// dual variables are not mapped back to scenario weights.
    pub adversarial_p: Option<ProbabilityDistribution>,
    /// `x' S(p*) x` of the normalized portfolio.
    pub worst_case_variance: f64,
    pub iterations: usize,
    /// Objective at the start of each outer iteration.
    pub objective_trace: Vec<f64>,
    /// `(gamma_k, eta_p)` per outer iteration; Newton step lengths for the
    /// robust counterpart.
    pub step_trace: Vec<(f64, f64)>,
    /// Iterations where backtracking hit [`ETA_FLOOR`].
    pub flagged_iterations: Vec<usize>,
    pub runtime_seconds: f64,
    pub converged: bool,
}

pub fn solve(
    algorithm: Algorithm,
    data: &ScenarioMatrix,
    q: &ProbabilityDistribution,
    spec: &AmbiguitySpec,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    match algorithm {
        Algorithm::ScpPga => solve_scp_pga(data, q, spec, cfg),
        Algorithm::Pgda => solve_pgda(data, q, spec, cfg),
        Algorithm::RobustCounterpart => solve_robust_counterpart(data, q, spec, cfg),
    }
}

pub(crate) fn check_inputs(
    data: &ScenarioMatrix,
    q: &ProbabilityDistribution,
    spec: &AmbiguitySpec,
    cfg: &SolverConfig,
) -> Result<()> {
    cfg.validate()?;
    if q.len() != data.n_scenarios() {
        return Err(DrrpError::dims("nominal distribution", data.n_scenarios(), q.len()));
    }
    if spec.n_scenarios() != data.n_scenarios() {
        return Err(DrrpError::dims("ambiguity spec", data.n_scenarios(), spec.n_scenarios()));
    }
    Ok(())
}

/// Relative change `||a - b|| / ||b||`.
pub(crate) fn relative_change(new: &DVector<f64>, old: &DVector<f64>) -> f64 {
    (new - old).norm() / old.norm()
}
