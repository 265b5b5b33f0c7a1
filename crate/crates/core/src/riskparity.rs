//! Nominal risk parity for a fixed covariance matrix.
//!
//! The proxy problem `min_y 1/2 y'Sy - kappa * sum ln y_i` is strictly convex
//! on the positive orthant and its minimizer satisfies `y_i [S y]_i = kappa`
//! for every asset, so normalizing `y` yields the equal risk contribution
//! portfolio.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{DrrpError, Result};
use crate::scenario::{Portfolio, ProxyPortfolio};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskParityConfig {
    pub kappa: f64,
    /// Target for `max_i |y_i [S y]_i - kappa| / kappa`.
    pub grad_tol: f64,
    pub max_newton_iter: usize,
}

impl Default for RiskParityConfig {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            grad_tol: 1e-10,
            max_newton_iter: 200,
        }
    }
}

impl RiskParityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(DrrpError::invalid(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !(self.grad_tol > 0.0) {
            return Err(DrrpError::invalid("grad_tol must be positive"));
        }
        if self.max_newton_iter == 0 {
            return Err(DrrpError::invalid("max_newton_iter must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskContributions {
    /// `R_i = w_i [S w]_i`; sums to the portfolio variance.
    pub contributions: DVector<f64>,
    /// Population standard deviation of `R` over its mean.
    pub cv: f64,
}

/// `1/2 y'Sy - kappa * sum ln y_i`.
pub fn proxy_objective(sigma: &DMatrix<f64>, y: &DVector<f64>, kappa: f64) -> f64 {
    0.5 * y.dot(&(sigma * y)) - kappa * y.iter().map(|v| v.ln()).sum::<f64>()
}

fn check_sigma(sigma: &DMatrix<f64>) -> Result<()> {
    let n = sigma.nrows();
    if n != sigma.ncols() {
        return Err(DrrpError::invalid("covariance matrix is not square"));
    }
    if n == 0 {
        return Err(DrrpError::invalid("empty covariance matrix"));
    }
    if sigma.iter().any(|v| !v.is_finite()) {
        return Err(DrrpError::invalid("covariance matrix has non-finite entries"));
    }
    if let Some(i) = (0..n).find(|&i| sigma[(i, i)] <= 0.0) {
        return Err(DrrpError::Degenerate(format!(
            "asset {i} has zero variance; risk parity is undefined"
        )));
    }
    Ok(())
}

/// Minimizer of the proxy objective.
pub fn solve_proxy(sigma: &DMatrix<f64>, cfg: &RiskParityConfig) -> Result<ProxyPortfolio> {
    solve_proxy_from(sigma, cfg, None)
}

/// As [`solve_proxy`], optionally warm-started from a previous solution.
/// Warm starts with the wrong length or nonpositive entries are ignored.
pub fn solve_proxy_from(
    sigma: &DMatrix<f64>,
    cfg: &RiskParityConfig,
    warm: Option<&DVector<f64>>,
) -> Result<ProxyPortfolio> {
    cfg.validate()?;
    check_sigma(sigma)?;
    let n = sigma.nrows();
    let kappa = cfg.kappa;

    // Work with S / s so the iteration is insensitive to the return scale.
    let scale = sigma.diagonal().mean();
    let s = sigma / scale;
    let root = scale.sqrt();

    let mut y = match warm {
        Some(w) if w.len() == n && w.iter().all(|v| *v > 0.0 && v.is_finite()) => w * root,
        _ => DVector::from_fn(n, |i, _| kappa.sqrt() / s[(i, i)].sqrt()),
    };

    let residual = |y: &DVector<f64>, sy: &DVector<f64>| {
        y.iter()
            .zip(sy.iter())
            .map(|(a, b)| (a * b - kappa).abs())
            .fold(0.0, f64::max)
            / kappa
    };

    let mut sy = &s * &y;
    let mut f = proxy_objective(&s, &y, kappa);
    let mut res = residual(&y, &sy);
    let mut polished = false;
    for _ in 0..cfg.max_newton_iter {
        if res <= cfg.grad_tol {
            // one extra step squeezes the residual to round-off
            if polished {
                break;
            }
            polished = true;
        }
        let grad = DVector::from_fn(n, |i, _| sy[i] - kappa / y[i]);
        let mut hess = s.clone();
        for i in 0..n {
            hess[(i, i)] += kappa / (y[i] * y[i]);
        }
        let chol = Cholesky::new(hess)
            .ok_or_else(|| DrrpError::Numerical("risk parity Hessian is not positive definite".into()))?;
        let dir = -chol.solve(&grad);
        let slope = grad.dot(&dir);

        // fraction-to-boundary keeps y strictly positive
        let mut alpha: f64 = 1.0;
        for i in 0..n {
            if dir[i] < 0.0 {
                alpha = alpha.min(-0.99 * y[i] / dir[i]);
            }
        }
        let slack = 1e-13 * (1.0 + f.abs());
        let mut accepted = false;
        for _ in 0..60 {
            let trial = &y + &dir * alpha;
            let ft = proxy_objective(&s, &trial, kappa);
            if ft <= f + 1e-4 * alpha * slope + slack {
                y = trial;
                f = ft;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        sy = &s * &y;
        res = residual(&y, &sy);
    }

    if res > cfg.grad_tol {
        return Err(DrrpError::NonConvergence {
            context: "risk parity Newton solve".into(),
            iterations: cfg.max_newton_iter,
            residual: res,
        });
    }
    ProxyPortfolio::new(y / root)
}

/// Long-only equal risk contribution portfolio.
pub fn solve_portfolio(sigma: &DMatrix<f64>, cfg: &RiskParityConfig) -> Result<Portfolio> {
    let y = solve_proxy(sigma, cfg)?;
    Ok(crate::projection::project_simplex(&y))
}

pub fn risk_contributions(w: &Portfolio, sigma: &DMatrix<f64>) -> Result<RiskContributions> {
    contributions_of(w.weights(), sigma)
}

pub(crate) fn contributions_of(w: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<RiskContributions> {
    if sigma.nrows() != sigma.ncols() || sigma.nrows() != w.len() {
        return Err(DrrpError::dims("risk_contributions", sigma.nrows(), w.len()));
    }
    let sw = sigma * w;
    let contributions = w.component_mul(&sw);
    let n = w.len() as f64;
    let mean = contributions.sum() / n;
    if mean <= 0.0 {
        return Err(DrrpError::Degenerate(
            "portfolio variance is zero; coefficient of variation undefined".into(),
        ));
    }
    let var = contributions.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    Ok(RiskContributions {
        cv: var.sqrt() / mean,
        contributions,
    })
}
