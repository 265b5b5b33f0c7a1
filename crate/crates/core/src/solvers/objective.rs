//! The minimax objective `f(y, p) = 1/2 y' S(p) y - kappa * sum ln y_i`,
//! its partial gradients and the Barzilai-Borwein step.

use nalgebra::DVector;

use crate::error::{DrrpError, Result};
use crate::moments::{portfolio_scenario_returns, scenario_variance, weighted_covariance};
use crate::scenario::{ProbabilityDistribution, ProxyPortfolio, ScenarioMatrix};

pub const BB_MIN_STEP: f64 = 1e-8;
pub const BB_MAX_STEP: f64 = 1e8;

fn check(data: &ScenarioMatrix, n: usize, p: &ProbabilityDistribution) -> Result<()> {
    if data.n_assets() != n {
        return Err(DrrpError::dims("proxy length", data.n_assets(), n));
    }
    if data.n_scenarios() != p.len() {
        return Err(DrrpError::dims("probability length", data.n_scenarios(), p.len()));
    }
    Ok(())
}

pub(crate) fn log_barrier(y: &DVector<f64>) -> f64 {
    y.iter().map(|v| v.ln()).sum()
}

/// Objective from precomputed scenario returns `pi = xi' y`.
#[inline]
pub(crate) fn f_from_returns(pi: &DVector<f64>, p: &DVector<f64>, kappa: f64, log_y: f64) -> f64 {
    0.5 * scenario_variance(pi, p) - kappa * log_y
}

/// Objective in the scenario form `1/2 (p'pi^2 - (p'pi)^2) - kappa sum ln y`.
pub fn objective_f_rp(
    data: &ScenarioMatrix,
    y: &ProxyPortfolio,
    p: &ProbabilityDistribution,
    kappa: f64,
) -> Result<f64> {
    check(data, y.len(), p)?;
    let pi = portfolio_scenario_returns(data, y.values())?;
    Ok(f_from_returns(&pi, p.as_vector(), kappa, log_barrier(y.values())))
}

/// Objective in the covariance form `1/2 y'S(p)y - kappa sum ln y`.
pub fn objective_f_rp_x_form(
    data: &ScenarioMatrix,
    y: &ProxyPortfolio,
    p: &ProbabilityDistribution,
    kappa: f64,
) -> Result<f64> {
    check(data, y.len(), p)?;
    let sigma = weighted_covariance(data, p)?;
    let y = y.values();
    Ok(0.5 * y.dot(&(sigma * y)) - kappa * log_barrier(y))
}

/// `S(p) y - kappa / y`, with `S(p) y` formed as `xi (p o (pi - p'pi))`.
pub fn grad_y(
    data: &ScenarioMatrix,
    y: &ProxyPortfolio,
    p: &ProbabilityDistribution,
    kappa: f64,
) -> Result<DVector<f64>> {
    check(data, y.len(), p)?;
    Ok(grad_y_raw(data, y.values(), p.as_vector(), kappa))
}

pub(crate) fn grad_y_raw(data: &ScenarioMatrix, y: &DVector<f64>, p: &DVector<f64>, kappa: f64) -> DVector<f64> {
    let pi = data.returns().tr_mul(y);
    let mean = p.dot(&pi);
    let weighted = DVector::from_fn(pi.len(), |t, _| p[t] * (pi[t] - mean));
    let mut g = data.returns() * weighted;
    for (gi, yi) in g.iter_mut().zip(y.iter()) {
        *gi -= kappa / yi;
    }
    g
}

/// `1/2 pi^2 - pi (pi'p)` for `pi = xi' y`. `y` may be any vector.
pub fn grad_p(data: &ScenarioMatrix, y: &DVector<f64>, p: &ProbabilityDistribution) -> Result<DVector<f64>> {
    check(data, y.len(), p)?;
    let pi = data.returns().tr_mul(y);
    Ok(grad_p_from_returns(&pi, p.as_vector()))
}

pub(crate) fn grad_p_from_returns(pi: &DVector<f64>, p: &DVector<f64>) -> DVector<f64> {
    let mean = p.dot(pi);
    pi.map(|v| 0.5 * v * v - v * mean)
}

/// Spectral step `||dx||^2 / |dx' dg|`, clamped to `[1e-8, 1e8]`. A vanishing
/// denominator keeps `previous`.
pub fn bb_step(
    prev_point: &DVector<f64>,
    point: &DVector<f64>,
    prev_grad: &DVector<f64>,
    grad: &DVector<f64>,
    previous: f64,
) -> f64 {
    let dx = point - prev_point;
    let dg = grad - prev_grad;
    let denom = dx.dot(&dg).abs();
    if denom < 1e-16 {
        return previous;
    }
    (dx.norm_squared() / denom).clamp(BB_MIN_STEP, BB_MAX_STEP)
}
