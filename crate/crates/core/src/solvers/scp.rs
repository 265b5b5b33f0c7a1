use std::time::Instant;

use nalgebra::DVector;

use super::gll::History;
use super::objective::{f_from_returns, grad_p_from_returns, log_barrier};
use super::{bb_step, check_inputs, relative_change, Algorithm, SolverConfig, SolverReport, ETA_FLOOR};
use crate::distance::AmbiguitySpec;
use crate::error::Result;
use crate::moments::{scenario_variance, weighted_covariance};
use crate::projection::{project_ambiguity, project_simplex};
use crate::riskparity::solve_proxy_from;
use crate::scenario::{ProbabilityDistribution, ProxyPortfolio, ScenarioMatrix};

/// Exact risk parity proxy for the distribution `p`, warm-started.
pub(crate) fn risk_parity_proxy(
    data: &ScenarioMatrix,
    p: &ProbabilityDistribution,
    cfg: &SolverConfig,
    warm: Option<&DVector<f64>>,
) -> Result<ProxyPortfolio> {
    let sigma = weighted_covariance(data, p)?;
    solve_proxy_from(&sigma, &cfg.risk_parity(), warm)
}

pub(crate) fn finish(
    algorithm: Algorithm,
    data: &ScenarioMatrix,
    p: ProbabilityDistribution,
    y: &ProxyPortfolio,
    trace: Trace,
    converged: bool,
    start: Instant,
) -> SolverReport {
    let portfolio = project_simplex(y);
    let pi = data.returns().tr_mul(portfolio.weights());
    let worst_case_variance = scenario_variance(&pi, p.as_vector());
    SolverReport {
        algorithm,
        portfolio,
        adversarial_p: Some(p),
        worst_case_variance,
        iterations: trace.iterations,
        objective_trace: trace.objective,
        step_trace: trace.steps,
        flagged_iterations: trace.flagged,
        runtime_seconds: start.elapsed().as_secs_f64(),
        converged,
    }
}

#[derive(Debug, Default)]
pub(crate) struct Trace {
    pub iterations: usize,
    pub objective: Vec<f64>,
    pub steps: Vec<(f64, f64)>,
    pub flagged: Vec<usize>,
}

/// Sequential convex programming with projected gradient ascent.
pub fn solve_scp_pga(
    data: &ScenarioMatrix,
    q: &ProbabilityDistribution,
    spec: &AmbiguitySpec,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    check_inputs(data, q, spec, cfg)?;
    let start = Instant::now();
    let xi = data.returns();
    let mut trace = Trace::default();

    if spec.budget() == 0.0 {
        // p is pinned to q
        let y = risk_parity_proxy(data, q, cfg, None).map_err(|e| e.at_iteration("scp", 0))?;
        let pi = xi.tr_mul(y.values());
        trace.iterations = 1;
        trace.objective.push(f_from_returns(&pi, q.as_vector(), cfg.kappa, log_barrier(y.values())));
        trace.steps.push((cfg.gamma0, 0.0));
        return Ok(finish(Algorithm::ScpPga, data, q.clone(), &y, trace, true, start));
    }

    let mut p = q.clone();
    let mut y = risk_parity_proxy(data, &p, cfg, None).map_err(|e| e.at_iteration("scp", 0))?;
    let mut gamma = cfg.gamma0;
    let mut history = History::new(cfg.m);
    let mut prev: Option<(DVector<f64>, DVector<f64>)> = None;
    let mut eps = f64::INFINITY;
    let mut k = 0;

    while eps > cfg.eps0 && k < cfg.max_outer_iter {
        if k >= 1 {
            y = risk_parity_proxy(data, &p, cfg, Some(y.values())).map_err(|e| e.at_iteration("scp", k))?;
        }
        let pi = xi.tr_mul(y.values());
        let log_y = log_barrier(y.values());
        let pk = p.as_vector();
        let f_k = f_from_returns(&pi, pk, cfg.kappa, log_y);
        history.push(f_k);
        let grad = grad_p_from_returns(&pi, pk);
        if let Some((p_prev, g_prev)) = &prev {
            gamma = bb_step(p_prev, pk, g_prev, &grad, gamma);
        }

        let target = pk + &grad * gamma;
        let projected = project_ambiguity(&target, q, spec, &cfg.projection)
            .map_err(|e| e.at_iteration("scp", k))?;
        let h = projected.as_vector() - pk;
        let slope = h.dot(&grad);
        let floor = history.min();

        let mut eta = 1.0;
        let mut candidate = projected.into_inner();
        while f_from_returns(&pi, &candidate, cfg.kappa, log_y) < floor + cfg.beta * eta * slope {
            eta *= cfg.tau;
            if eta < ETA_FLOOR {
                trace.flagged.push(k);
                break;
            }
            candidate = pk + &h * eta;
        }

        let next = ProbabilityDistribution::from_projected(candidate)?;
        if k >= 1 {
            eps = relative_change(next.as_vector(), pk);
        }
        trace.objective.push(f_k);
        trace.steps.push((gamma, eta));
        prev = Some((pk.clone(), grad));
        p = next;
        k += 1;
    }

    // x* = x_RP(p^k)
    y = risk_parity_proxy(data, &p, cfg, Some(y.values())).map_err(|e| e.at_iteration("scp", k))?;
    trace.iterations = k;
    Ok(finish(Algorithm::ScpPga, data, p, &y, trace, eps <= cfg.eps0, start))
}
