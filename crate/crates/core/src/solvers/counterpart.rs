//! Robust counterpart: the inner maximization over the ambiguity set is
//! replaced by its convex dual, giving one smooth minimization over
//! `(y, c, rho, lambda)`:
//!
//! ```text
//! 1/2 [rho + 2 d lambda + lambda sum_t q_t g*(((pi_t - c)^2 - rho) / lambda)]
//!     - kappa sum ln y_i,     pi = xi' y.
//! ```
//!
//! `g*` is the conjugate of the divergence generator, so the ambiguity set
//! `1/2 sum q g(p/q) <= d` becomes the `2 d` term. Solved by damped Newton.

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector};

use super::objective::log_barrier;
use super::scp::{risk_parity_proxy, Trace};
use super::{check_inputs, Algorithm, SolverConfig, SolverReport};
use crate::distance::{conjugate, conjugate_derivatives, conjugate_domain_max, AmbiguitySpec, DistanceMeasure};
use crate::error::{DrrpError, Result};
use crate::moments::scenario_variance;
use crate::projection::project_simplex;
use crate::scenario::{ProbabilityDistribution, ProxyPortfolio, ScenarioMatrix};

struct Problem<'a> {
    xi: &'a DMatrix<f64>,
    q: &'a DVector<f64>,
    measure: DistanceMeasure,
    d: f64,
    kappa: f64,
    n: usize,
}

impl Problem<'_> {
    fn split<'z>(&self, z: &'z DVector<f64>) -> (nalgebra::DVectorView<'z, f64>, f64, f64, f64) {
        let n = self.n;
        (z.rows(0, n), z[n], z[n + 1], z[n + 2])
    }

    /// `(worst-case term, barrier-included objective)`, `None` off the domain.
    fn value(&self, z: &DVector<f64>) -> Option<(f64, f64)> {
        let (y, c, rho, lambda) = self.split(z);
        if lambda <= 0.0 || y.iter().any(|v| *v <= 0.0) {
            return None;
        }
        let pi = self.xi.tr_mul(&y);
        let mut sum = 0.0;
        for (t, &pt) in pi.iter().enumerate() {
            let s = ((pt - c) * (pt - c) - rho) / lambda;
            let v = conjugate(self.measure, s);
            if !v.is_finite() {
                return None;
            }
            sum += self.q[t] * v;
        }
        let worst = rho + 2.0 * self.d * lambda + lambda * sum;
        let y = y.into_owned();
        Some((worst, 0.5 * worst - self.kappa * log_barrier(&y)))
    }

    fn derivatives(&self, z: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let dim = n + 3;
        let (y, c, rho, lambda) = self.split(z);
        let pi = self.xi.tr_mul(&y);
        let t_len = pi.len();

        let mut grad = DVector::zeros(dim);
        // columns (xi_t, -1, 0, 0) carry the curvature of (pi_t - c)^2
        let mut e = DMatrix::zeros(dim, t_len);
        let mut w = DMatrix::zeros(dim, t_len);
        let mut e_weight = DVector::zeros(t_len);
        let mut w_weight = DVector::zeros(t_len);
        for t in 0..t_len {
            let r = pi[t] - c;
            let s = (r * r - rho) / lambda;
            let (d1, d2) = conjugate_derivatives(self.measure, s).expect("iterate inside domain");
            let qt = self.q[t];
            let xi_t = self.xi.column(t);

            // gradient of lambda g*(s): d1 * grad(r^2 - rho) + (g*(s) - s d1) e_lambda
            for i in 0..n {
                grad[i] += 0.5 * qt * d1 * 2.0 * r * xi_t[i];
            }
            grad[n] += 0.5 * qt * d1 * (-2.0 * r);
            grad[n + 1] += 0.5 * qt * (-d1);
            grad[n + 2] += 0.5 * qt * (conjugate(self.measure, s) - s * d1);

            e.view_mut((0, t), (n, 1)).copy_from(&xi_t);
            e[(n, t)] = -1.0;
            e_weight[t] = qt * d1;

            w.view_mut((0, t), (n, 1)).copy_from(&(xi_t * (2.0 * r)));
            w[(n, t)] = -2.0 * r;
            w[(n + 1, t)] = -1.0;
            w[(n + 2, t)] = -s;
            w_weight[t] = 0.5 * qt * d2 / lambda;
        }
        grad[n + 1] += 0.5;
        grad[n + 2] += self.d;
        for i in 0..n {
            grad[i] -= self.kappa / y[i];
        }

        let scaled = |m: &DMatrix<f64>, wt: &DVector<f64>| {
            let mut s = m.clone();
            for (mut col, &v) in s.column_iter_mut().zip(wt.iter()) {
                col *= v;
            }
            s * m.transpose()
        };
        let mut hess = scaled(&e, &e_weight) + scaled(&w, &w_weight);
        for i in 0..n {
            hess[(i, i)] += self.kappa / (y[i] * y[i]);
        }
        (grad, hess)
    }

    fn start(&self, y: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let pi = self.xi.tr_mul(y);
        let c = self.q.dot(&pi);
        let g = pi.map(|v| (v - c) * (v - c));
        let rho = self.q.dot(&g);
        let spread = g.iter().map(|v| v - rho).fold(0.0, f64::max);
        let lambda = if spread > 0.0 {
            2.0 * spread / conjugate_domain_max(self.measure)
        } else {
            1.0
        };
        let mut z = DVector::zeros(n + 3);
        z.rows_mut(0, n).copy_from(y);
        z[n] = c;
        z[n + 1] = rho;
        z[n + 2] = lambda;
        z
    }
}

/// Damped Newton on the dualized problem. Supports JS and Hellinger; the TV
/// conjugate is not differentiable.
pub fn solve_robust_counterpart(
    data: &ScenarioMatrix,
    q: &ProbabilityDistribution,
    spec: &AmbiguitySpec,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    check_inputs(data, q, spec, cfg)?;
    let start = Instant::now();
    let measure = spec.measure();
    if conjugate_derivatives(measure, 0.0).is_none() {
        return Err(DrrpError::invalid(format!(
            "robust counterpart needs a smooth conjugate; {measure} is not supported"
        )));
    }
    let y0 = risk_parity_proxy(data, q, cfg, None).map_err(|e| e.at_iteration("rc", 0))?;
    let mut trace = Trace::default();

    if spec.budget() == 0.0 {
        trace.iterations = 1;
        return Ok(report(data, q, &y0, None, trace, true, start));
    }

    let prob = Problem {
        xi: data.returns(),
        q: q.as_vector(),
        measure,
        d: spec.budget(),
        kappa: cfg.kappa,
        n: data.n_assets(),
    };
    let mut z = prob.start(y0.values());
    let (_, mut f) = prob
        .value(&z)
        .ok_or_else(|| DrrpError::Numerical("robust counterpart start outside the domain".into()))?;
    let mut converged = false;
    let mut k = 0;
    while k < cfg.max_outer_iter {
        let (grad, hess) = prob.derivatives(&z);
        let dir = newton_direction(hess, &grad)?;
        let decrement = -grad.dot(&dir);
        trace.objective.push(f);
        k += 1;
        if decrement <= 1e-20 * (1.0 + f.abs()) {
            trace.steps.push((1.0, 0.0));
            converged = true;
            break;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..80 {
            let trial = &z + &dir * step;
            if let Some((_, ft)) = prob.value(&trial) {
                if ft <= f - 1e-4 * step * decrement + 1e-14 * f.abs() {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            step *= 0.5;
        }
        trace.steps.push((1.0, step));
        match accepted {
            Some((trial, ft)) => {
                let stalled = (f - ft).abs() <= 1e-15 * (1.0 + f.abs()) && decrement <= 1e-12 * (1.0 + f.abs());
                z = trial;
                f = ft;
                if stalled {
                    converged = true;
                    break;
                }
            }
            None => {
                // no decrease representable: we are at round-off level
                converged = decrement <= 1e-10 * (1.0 + f.abs());
                break;
            }
        }
    }
    trace.iterations = k;

    let n = data.n_assets();
    let y = ProxyPortfolio::new(z.rows(0, n).into_owned())?;
    let worst = prob.value(&z).map(|(w, _)| w);
    Ok(report(data, q, &y, worst, trace, converged, start))
}

fn newton_direction(mut hess: DMatrix<f64>, grad: &DVector<f64>) -> Result<DVector<f64>> {
    let scale = hess.diagonal().amax().max(f64::MIN_POSITIVE);
    let mut jitter = 0.0;
    for _ in 0..12 {
        if let Some(chol) = Cholesky::new(hess.clone()) {
            return Ok(-chol.solve(grad));
        }
        let bump = if jitter == 0.0 { 1e-14 * scale } else { jitter * 9.0 };
        for i in 0..hess.nrows() {
            hess[(i, i)] += bump;
        }
        jitter += bump;
    }
    Err(DrrpError::Numerical("robust counterpart Hessian is not positive definite".into()))
}

fn report(
    data: &ScenarioMatrix,
    q: &ProbabilityDistribution,
    y: &ProxyPortfolio,
    worst: Option<f64>,
    trace: Trace,
    converged: bool,
    start: Instant,
) -> SolverReport {
    let portfolio = project_simplex(y);
    let scale = y.values().sum();
    let worst_case_variance = match worst {
        Some(w) => w / (scale * scale),
        None => {
            let pi = data.returns().tr_mul(portfolio.weights());
            scenario_variance(&pi, q.as_vector())
        }
    };
    SolverReport {
        algorithm: Algorithm::RobustCounterpart,
        portfolio,
        adversarial_p: None,
        worst_case_variance,
        iterations: trace.iterations,
        objective_trace: trace.objective,
        step_trace: trace.steps,
        flagged_iterations: trace.flagged,
        runtime_seconds: start.elapsed().as_secs_f64(),
        converged,
    }
}
