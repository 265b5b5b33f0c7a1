use std::time::Instant;

use nalgebra::DVector;

use super::gll::History;
use super::objective::{f_from_returns, grad_p_from_returns, grad_y_raw, log_barrier};
use super::scp::{finish, risk_parity_proxy, Trace};
use super::{bb_step, check_inputs, relative_change, Algorithm, SolverConfig, SolverReport, ETA_FLOOR};
use crate::distance::AmbiguitySpec;
use crate::error::{DrrpError, Result};
use crate::projection::{project_ambiguity, project_positive_orthant};
use crate::scenario::{ProbabilityDistribution, ScenarioMatrix};

/// Projected gradient descent-ascent with spectral steps and GLL searches.
pub fn solve_pgda(
    data: &ScenarioMatrix,
    q: &ProbabilityDistribution,
    spec: &AmbiguitySpec,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    check_inputs(data, q, spec, cfg)?;
    let start = Instant::now();
    let n = data.n_assets();
    let xi = data.returns();
    let kappa = cfg.kappa;

    let mut y = match &cfg.y0 {
        Some(y0) if y0.len() != n => return Err(DrrpError::dims("y0", n, y0.len())),
        Some(y0) => y0.clone(),
        None => DVector::from_element(n, 10.0),
    };
    let mut p = q.clone();
    let mut alpha = cfg.alpha0;
    let mut gamma = cfg.gamma0;
    let mut history = History::new(cfg.m);
    let mut prev: Option<(DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>)> = None;
    let mut eps = f64::INFINITY;
    let mut k = 0;
    let mut trace = Trace::default();

    let f = |y: &DVector<f64>, p: &DVector<f64>| {
        f_from_returns(&xi.tr_mul(y), p, kappa, log_barrier(y))
    };

    while eps > cfg.eps0 && k < cfg.max_outer_iter {
        let pk = p.as_vector().clone();
        let pi = xi.tr_mul(&y);
        let log_y = log_barrier(&y);
        let f_k = f_from_returns(&pi, &pk, kappa, log_y);
        history.push(f_k);
        let gy = grad_y_raw(data, &y, &pk, kappa);
        let gp = grad_p_from_returns(&pi, &pk);
        if let Some((y_prev, gy_prev, p_prev, gp_prev)) = &prev {
            alpha = bb_step(y_prev, &y, gy_prev, &gy, alpha);
            gamma = bb_step(p_prev, &pk, gp_prev, &gp, gamma);
        }

        // descent in y
        let g = project_positive_orthant(&(&y - &gy * alpha), cfg.projection.floor_eps) - &y;
        let slope_y = g.dot(&gy);
        let ceiling = history.max();
        let mut eta_y = 1.0;
        let mut y_bar = &y + &g;
        while f(&y_bar, &pk) > ceiling + cfg.beta * eta_y * slope_y {
            eta_y *= cfg.tau;
            if eta_y < ETA_FLOOR {
                trace.flagged.push(k);
                break;
            }
            y_bar = &y + &g * eta_y;
        }

        // ascent in p, evaluated at y^k
        let projected = project_ambiguity(&(&pk + &gp * gamma), q, spec, &cfg.projection)
            .map_err(|e| e.at_iteration("pgda", k))?;
        let h = projected.as_vector() - &pk;
        let slope_p = h.dot(&gp);
        let floor = history.min();
        let mut eta_p = 1.0;
        let mut p_bar = projected.into_inner();
        while f_from_returns(&pi, &p_bar, kappa, log_y) < floor + cfg.beta * eta_p * slope_p {
            eta_p *= cfg.tau;
            if eta_p < ETA_FLOOR {
                if trace.flagged.last() != Some(&k) {
                    trace.flagged.push(k);
                }
                break;
            }
            p_bar = &pk + &h * eta_p;
        }

        if y_bar.iter().any(|v| !v.is_finite()) {
            return Err(DrrpError::Numerical(format!("pgda iteration {k}: proxy diverged")));
        }
        let next = ProbabilityDistribution::from_projected(p_bar)?;
        if k >= 1 {
            let eps_p = relative_change(next.as_vector(), &pk);
            let eps_y = relative_change(&y_bar, &y);
            eps = eps_p.max(eps_y);
        }
        trace.objective.push(f_k);
        trace.steps.push((gamma, eta_p));
        prev = Some((y.clone(), gy, pk, gp));
        y = y_bar;
        p = next;
        k += 1;
    }

    // x* = x_RP(p^k)
    let y_rp = risk_parity_proxy(data, &p, cfg, Some(&y)).map_err(|e| e.at_iteration("pgda", k))?;
    trace.iterations = k;
    Ok(finish(Algorithm::Pgda, data, p, &y_rp, trace, eps <= cfg.eps0, start))
}
