//! Ambiguity-set projection by a primal log-barrier interior point method.
//!
//! Each scenario carries a small block of variables: `p_t` alone for JS,
//! `(p_t, r_t)` with `r_t^2 <= p_t` for Hellinger, and `(p_t, z_t)` with
//! `z_t >= |p_t - q_t|` for TV. In these encodings the distance constraint
//! is `a(x) <= d` with `a` smooth (JS) or linear (Hellinger, TV), so the
//! barrier Hessian is block diagonal plus one rank-one term and the
//! equality-constrained Newton step costs O(T).

use nalgebra::DVector;

use super::{dual, ProjectionConfig, ProjectionReport};
use crate::distance::{divergence_slices, term, term_derivative, term_second_derivative, DistanceMeasure};
use crate::error::{DrrpError, Result};
use crate::scenario::ProbabilityDistribution;

type Block = [f64; 2];
type BlockHess = [[f64; 2]; 2];

struct Problem<'a> {
    u: &'a [f64],
    q: &'a [f64],
    sqrt_q: Vec<f64>,
    measure: DistanceMeasure,
    d: f64,
}

impl Problem<'_> {
    fn paired(&self) -> bool {
        self.measure != DistanceMeasure::JensenShannon
    }

    /// Scenario `t`'s share of the distance constraint `a(x)`.
    fn a_term(&self, t: usize, x: Block) -> (f64, Block, BlockHess) {
        let q = self.q[t];
        match self.measure {
            DistanceMeasure::JensenShannon => (
                term(self.measure, x[0], q),
                [term_derivative(self.measure, x[0], q), 0.0],
                [[term_second_derivative(self.measure, x[0], q), 0.0], [0.0, 0.0]],
            ),
            DistanceMeasure::Hellinger => {
                let s = self.sqrt_q[t];
                (0.5 * (x[0] + q) - x[1] * s, [0.5, -s], [[0.0; 2]; 2])
            }
            DistanceMeasure::TotalVariation => (0.5 * x[1], [0.0, 0.5], [[0.0; 2]; 2]),
            DistanceMeasure::KullbackLeibler => unreachable!(),
        }
    }

    /// Local barrier `-sum ln(slack)`; `None` outside the interior.
    fn local_barrier(&self, t: usize, x: Block) -> Option<(f64, Block, BlockHess)> {
        let q = self.q[t];
        match self.measure {
            DistanceMeasure::JensenShannon => {
                let p = x[0];
                (p > 0.0).then(|| (-p.ln(), [-1.0 / p, 0.0], [[1.0 / (p * p), 0.0], [0.0, 0.0]]))
            }
            DistanceMeasure::Hellinger => {
                let (p, r) = (x[0], x[1]);
                let s = p - r * r;
                if s <= 0.0 || r <= 0.0 {
                    return None;
                }
                // -ln(p - r^2) - ln r
                let g = [-1.0 / s, 2.0 * r / s - 1.0 / r];
                let h = [
                    [1.0 / (s * s), -2.0 * r / (s * s)],
                    [-2.0 * r / (s * s), 2.0 / s + 4.0 * r * r / (s * s) + 1.0 / (r * r)],
                ];
                Some((-s.ln() - r.ln(), g, h))
            }
            DistanceMeasure::TotalVariation => {
                let (p, z) = (x[0], x[1]);
                let s1 = z - p + q;
                let s2 = z + p - q;
                if p <= 0.0 || s1 <= 0.0 || s2 <= 0.0 {
                    return None;
                }
                let g = [-1.0 / p + 1.0 / s1 - 1.0 / s2, -1.0 / s1 - 1.0 / s2];
                let i1 = 1.0 / (s1 * s1);
                let i2 = 1.0 / (s2 * s2);
                let h = [[1.0 / (p * p) + i1 + i2, -i1 + i2], [-i1 + i2, i1 + i2]];
                Some((-p.ln() - s1.ln() - s2.ln(), g, h))
            }
            DistanceMeasure::KullbackLeibler => unreachable!(),
        }
    }

    fn a_total(&self, x: &[Block]) -> f64 {
        (0..x.len()).map(|t| self.a_term(t, x[t]).0).sum()
    }

    /// Barrier objective `tau/2 ||p - u||^2 + barriers`, or `None` if infeasible.
    fn value(&self, x: &[Block], tau: f64) -> Option<f64> {
        let slack = self.d - self.a_total(x);
        if slack <= 0.0 {
            return None;
        }
        let mut f = -slack.ln();
        for (t, xt) in x.iter().enumerate() {
            let diff = xt[0] - self.u[t];
            f += 0.5 * tau * diff * diff + self.local_barrier(t, *xt)?.0;
        }
        Some(f)
    }

    fn start(&self) -> Result<Vec<Block>> {
        let n = self.q.len();
        let uniform = 1.0 / n as f64;
        for k in 0..60 {
            let delta = 0.5f64.powi(k);
            let mix = if self.q.iter().all(|v| *v > 0.0) { 0.0 } else { delta };
            let x: Vec<Block> = self
                .q
                .iter()
                .map(|&qt| {
                    let p = (1.0 - mix) * qt + mix * uniform;
                    let aux = match self.measure {
                        DistanceMeasure::Hellinger => (1.0 - delta) * p.sqrt(),
                        DistanceMeasure::TotalVariation => (p - qt).abs() + delta * self.d * uniform,
                        _ => 0.0,
                    };
                    [p, aux]
                })
                .collect();
            if self.value(&x, 1.0).is_some() {
                return Ok(x);
            }
        }
        Err(DrrpError::Numerical("no strictly feasible barrier start found".into()))
    }
}

fn solve2(h: &BlockHess, b: Block, paired: bool) -> Block {
    if !paired {
        return [b[0] / h[0][0], 0.0];
    }
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    [
        (h[1][1] * b[0] - h[0][1] * b[1]) / det,
        (h[0][0] * b[1] - h[1][0] * b[0]) / det,
    ]
}

fn dot(a: &[Block], b: &[Block]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x[0] * y[0] + x[1] * y[1]).sum()
}

/// Least-squares fit of `u - p = theta + lambda * phi'(p)` over coordinates
/// where the nonnegativity and kink barriers are inactive. More accurate than
/// `1 / (tau * slack)` once the distance slack nears rounding level.
fn multipliers(p: &[f64], u: &[f64], q: &[f64], measure: DistanceMeasure) -> Option<(f64, f64)> {
    let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&pt, &ut), &qt) in p.iter().zip(u).zip(q) {
        if pt <= 1e-7 || (measure == DistanceMeasure::TotalVariation && (pt - qt).abs() <= 1e-7) {
            continue;
        }
        let x = term_derivative(measure, pt, qt);
        let y = ut - pt;
        n += 1.0;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let det = n * sxx - sx * sx;
    if n < 2.0 || det <= 1e-12 * n * sxx.max(1e-300) {
        return None;
    }
    let lambda = (n * sxy - sx * sy) / det;
    let theta = (sy - lambda * sx) / n;
    (lambda >= 0.0).then_some((lambda, theta))
}

pub(super) fn project(
    u: &[f64],
    q: &[f64],
    measure: DistanceMeasure,
    d: f64,
    cfg: &ProjectionConfig,
) -> Result<ProjectionReport> {
    let prob = Problem {
        u,
        q,
        sqrt_q: q.iter().map(|v| v.sqrt()).collect(),
        measure,
        d,
    };
    let paired = prob.paired();
    let n = q.len();
    let n_ineq = (if measure == DistanceMeasure::TotalVariation { 3 * n } else if paired { 2 * n } else { n }) + 1;

    let mut x = prob.start()?;
    let mut tau = 1.0;
    let mut nu = 0.0;
    let mut newton_steps = 0;
    let gap_target = 1e-2 * cfg.kkt_tol;

    for _ in 0..cfg.max_ip_iter {
        for _ in 0..100 {
            let slack = d - prob.a_total(&x);
            let mut grad = vec![[0.0; 2]; n];
            let mut hess = vec![[[0.0; 2]; 2]; n];
            let mut ga = vec![[0.0; 2]; n];
            for t in 0..n {
                let (_, at, ah) = prob.a_term(t, x[t]);
                let (_, bg, bh) = prob
                    .local_barrier(t, x[t])
                    .ok_or_else(|| DrrpError::Numerical("barrier iterate left the interior".into()))?;
                ga[t] = at;
                for i in 0..2 {
                    grad[t][i] = bg[i] + at[i] / slack;
                    for j in 0..2 {
                        hess[t][i][j] = bh[i][j] + ah[i][j] / slack;
                    }
                }
                grad[t][0] += tau * (x[t][0] - u[t]);
                hess[t][0][0] += tau;
            }
            // H = B + w g g'; equality row e picks the p coordinates.
            let w = 1.0 / (slack * slack);
            let binv = |v: &[Block]| -> Vec<Block> { (0..n).map(|t| solve2(&hess[t], v[t], paired)).collect() };
            let bg = binv(&ga);
            let denom = 1.0 + w * dot(&ga, &bg);
            let hinv = |v: &[Block]| -> Vec<Block> {
                let bv = binv(v);
                let c = w * dot(&ga, &bv) / denom;
                bv.iter().zip(&bg).map(|(a, b)| [a[0] - c * b[0], a[1] - c * b[1]]).collect()
            };
            let e: Vec<Block> = vec![[1.0, 0.0]; n];
            let hg = hinv(&grad);
            let he = hinv(&e);
            let residual_sum: f64 = x.iter().map(|b| b[0]).sum::<f64>() - 1.0;
            // e'dx = -residual_sum keeps drift from accumulating
            nu = (residual_sum - dot(&e, &hg)) / dot(&e, &he);
            let dx: Vec<Block> = hg.iter().zip(&he).map(|(a, b)| [-a[0] - nu * b[0], -a[1] - nu * b[1]]).collect();
            let decrement = -dot(&grad, &dx) + nu * residual_sum;
            newton_steps += 1;
            if decrement <= 0.0 {
                // the Newton system is at rounding level
                break;
            }
            let f0 = prob.value(&x, tau).expect("interior iterate");
            let slope = dot(&grad, &dx);
            let mut step = 1.0;
            let mut moved = false;
            for _ in 0..80 {
                let trial: Vec<Block> = x
                    .iter()
                    .zip(&dx)
                    .map(|(a, b)| [a[0] + step * b[0], a[1] + step * b[1]])
                    .collect();
                if let Some(ft) = prob.value(&trial, tau) {
                    // close to the centre the decrease is below the rounding of f
                    if decrement < 1e-3 || ft <= f0 + 1e-4 * step * slope {
                        x = trial;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !moved || decrement <= 1e-12 {
                break;
            }
        }
        if n_ineq as f64 / tau <= gap_target {
            break;
        }
        tau *= 10.0;
    }

    let raw: Vec<f64> = x.iter().map(|b| b[0]).collect();
    let slack = d - prob.a_total(&x);
    let (lambda, theta) = multipliers(&raw, u, q, measure).unwrap_or((1.0 / (tau * slack), nu / tau));
    let sum: f64 = raw.iter().sum();
    let dist = divergence_slices(measure, &raw, q);
    let fixed_point = raw
        .iter()
        .zip(u)
        .zip(q)
        .map(|((&p, &ui), &qi)| (p - dual::prox(measure, ui - theta, qi, lambda, p)).abs())
        .fold(0.0, f64::max);
    let p = ProbabilityDistribution::from_projected(DVector::from_vec(raw))?;
    Ok(ProjectionReport {
        p,
        lambda,
        theta,
        stationarity: fixed_point,
        feasibility: (sum - 1.0).abs().max(dist - d).max(0.0),
        complementarity: lambda * (dist - d).abs() / u.iter().map(|v| v.abs()).fold(1.0, f64::max),
        iterations: newton_steps,
    })
}
