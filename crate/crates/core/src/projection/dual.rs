//! Ambiguity-set projection by Lagrangian decomposition.
//!
//! For multipliers `lambda` (distance) and `theta` (sum) the Lagrangian
//! separates over scenarios, and each coordinate solves
//! `min_{p >= 0} 1/2 (p - v)^2 + lambda * phi(p, q_t)` with `v = u_t - theta`.
//! `theta(lambda)` is the root of `sum p - 1`, and `lambda` is the root of
//! `D(p(lambda)) - d`; both maps are monotone.

use std::cell::RefCell;

use nalgebra::DVector;

use super::{ProjectionConfig, ProjectionReport};
use crate::distance::{divergence_slices, term_second_derivative, DistanceMeasure};
use crate::error::{DrrpError, Result};
use crate::roots::{brent, newton_bracketed};
use crate::scenario::ProbabilityDistribution;

const LN_FLOOR: f64 = -700.0;

/// Minimizer of `1/2 (p - v)^2 + lambda * phi(p, q)` over `p >= 0`.
pub(super) fn prox(measure: DistanceMeasure, v: f64, q: f64, lambda: f64, warm: f64) -> f64 {
    if lambda == 0.0 {
        return v.max(0.0);
    }
    let h = 0.5 * lambda;
    match measure {
        DistanceMeasure::TotalVariation => {
            let p = if v > q + h {
                v - h
            } else if v < q - h {
                v + h
            } else {
                q
            };
            p.max(0.0)
        }
        DistanceMeasure::Hellinger => {
            if q == 0.0 {
                return (v - h).max(0.0);
            }
            // stationarity in r = sqrt(p): r^2 + a - c / r = 0
            let a = h - v;
            let c = h * q.sqrt();
            let hi = ((-a).max(0.0) + c).sqrt().max(1.0);
            let x0 = if warm > 0.0 && warm.sqrt() < hi {
                warm.sqrt()
            } else if a > 0.0 {
                (c / a).min(0.5 * hi)
            } else {
                0.5 * hi
            };
            let r = newton_bracketed(
                |r| (r * r + a - c / r, 2.0 * r + c / (r * r)),
                0.0,
                hi,
                x0,
                1e-16,
            );
            r * r
        }
        DistanceMeasure::JensenShannon => {
            if q == 0.0 {
                return (v - h * std::f64::consts::LN_2).max(0.0);
            }
            // stationarity in w = ln p: e^w - v + h (ln 2 + w - ln(e^w + q)) = 0
            let f = |w: f64| {
                let e = w.exp();
                (
                    e - v + h * (std::f64::consts::LN_2 + w - (e + q).ln()),
                    e + h * q / (e + q),
                )
            };
            let big = v.max(q);
            let w_hi = big.ln();
            let w_lo = ((0.5 * q).ln() + 2.0 * (v - big) / lambda).max(LN_FLOOR);
            if w_lo == LN_FLOOR && f(LN_FLOOR).0 >= 0.0 {
                return 0.0;
            }
            let x0 = if warm > 0.0 { warm.ln() } else { w_hi };
            newton_bracketed(f, w_lo, w_hi, x0, 1e-16).exp()
        }
        DistanceMeasure::KullbackLeibler => unreachable!("KL never defines an ambiguity set"),
    }
}

struct Solver<'a> {
    u: &'a [f64],
    q: &'a [f64],
    measure: DistanceMeasure,
    warm: RefCell<Vec<f64>>,
    last_theta: RefCell<Option<f64>>,
    /// Recent `distance` results keyed by the bits of lambda; the root
    /// finder revisits its bracket ends.
    memo: RefCell<Vec<(u64, (f64, f64, Vec<f64>))>>,
    evals: RefCell<usize>,
}

impl Solver<'_> {
    fn primal(&self, lambda: f64, theta: f64) -> Vec<f64> {
        let mut warm = self.warm.borrow_mut();
        let p: Vec<f64> = self
            .u
            .iter()
            .zip(self.q)
            .zip(warm.iter())
            .map(|((&u, &q), &w)| prox(self.measure, u - theta, q, lambda, w))
            .collect();
        warm.copy_from_slice(&p);
        *self.evals.borrow_mut() += 1;
        p
    }

    /// Sensitivity of one prox output to its input `v`.
    fn dp_dv(&self, p: f64, q: f64, lambda: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        match self.measure {
            DistanceMeasure::TotalVariation => f64::from(p != q || lambda == 0.0),
            m => 1.0 / (1.0 + lambda * term_second_derivative(m, p, q)),
        }
    }

    /// `1 - sum p` at `theta`, nondecreasing in `theta`, and its slope.
    fn residual(&self, lambda: f64, theta: f64) -> (f64, f64) {
        let p = self.primal(lambda, theta);
        let slope = p.iter().zip(self.q).map(|(&pi, &qi)| self.dp_dv(pi, qi, lambda)).sum();
        (1.0 - p.iter().sum::<f64>(), slope)
    }

    /// Sum multiplier for a fixed distance multiplier.
    fn theta(&self, lambda: f64) -> f64 {
        let t = self.u.len() as f64;
        // theta moves little between neighbouring lambdas
        let start = self
            .last_theta
            .borrow()
            .unwrap_or_else(|| (self.u.iter().sum::<f64>() - 1.0) / t);
        let (f0, s0) = self.residual(lambda, start);
        if f0 == 0.0 {
            return start;
        }
        // walk from the start with overshooting Newton steps until the sign flips
        let dir = -f0.signum();
        let mut step = if s0 > 0.0 { 1.5 * f0.abs() / s0 } else { 1.0 / t };
        let mut near = start;
        let far = loop {
            let x = near + dir * step;
            let (fx, _) = self.residual(lambda, x);
            if fx == 0.0 {
                *self.last_theta.borrow_mut() = Some(x);
                return x;
            }
            if fx.signum() != f0.signum() {
                break x;
            }
            near = x;
            step *= 2.0;
        };
        let (lo, hi) = if near < far { (near, far) } else { (far, near) };
        let guess = if s0 > 0.0 { (start - f0 / s0).clamp(lo, hi) } else { 0.5 * (lo + hi) };
        let theta = newton_bracketed(|th| self.residual(lambda, th), lo, hi, guess, 1e-16);
        *self.last_theta.borrow_mut() = Some(theta);
        theta
    }

    fn distance(&self, lambda: f64) -> (f64, f64, Vec<f64>) {
        let key = lambda.to_bits();
        if let Some((_, hit)) = self.memo.borrow().iter().find(|(k, _)| *k == key) {
            return hit.clone();
        }
        let theta = self.theta(lambda);
        let p = self.primal(lambda, theta);
        let out = (divergence_slices(self.measure, &p, self.q), theta, p);
        let mut memo = self.memo.borrow_mut();
        if memo.len() == 4 {
            memo.remove(0);
        }
        memo.push((key, out.clone()));
        out
    }
}

pub(super) fn project(
    u: &[f64],
    q: &[f64],
    measure: DistanceMeasure,
    d: f64,
    cfg: &ProjectionConfig,
) -> Result<ProjectionReport> {
    let solver = Solver {
        u,
        q,
        measure,
        warm: RefCell::new(q.to_vec()),
        last_theta: RefCell::new(None),
        memo: RefCell::new(Vec::new()),
        evals: RefCell::new(0),
    };

    // Bracket the distance multiplier: lambda = 0 is infeasible here.
    let scale = u.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let mut lo = 0.0;
    let mut hi = 1e-3 * scale;
    let mut doublings = 0;
    // on the boundary to rounding: the caller's simplex test and lambda = 0
    // can disagree in the last bits
    if solver.distance(0.0).0 <= d {
        hi = 0.0;
    }
    while hi > 0.0 && solver.distance(hi).0 > d {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(DrrpError::Numerical(
                "could not bracket the distance multiplier".into(),
            ));
        }
    }
    let lambda = if hi == 0.0 {
        0.0
    } else {
        brent(|lam| solver.distance(lam).0 - d, lo, hi, 1e-15 * hi, cfg.max_ip_iter.max(200)).0
    };
    let (dist, theta, raw) = solver.distance(lambda);

    let sum: f64 = raw.iter().sum();
    let fixed_point = raw
        .iter()
        .zip(u)
        .zip(q)
        .map(|((&p, &ui), &qi)| (p - prox(measure, ui - theta, qi, lambda, p)).abs())
        .fold(0.0, f64::max);
    let p = ProbabilityDistribution::from_projected(DVector::from_vec(raw))?;
    let iterations = *solver.evals.borrow();
    Ok(ProjectionReport {
        p,
        lambda,
        theta,
        stationarity: fixed_point,
        feasibility: (sum - 1.0).abs().max(dist - d).max(0.0),
        complementarity: lambda * (dist - d).abs() / u.iter().map(|v| v.abs()).fold(1.0, f64::max),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{term, term_derivative};

    #[test]
    fn prox_satisfies_stationarity() {
        for m in [DistanceMeasure::JensenShannon, DistanceMeasure::Hellinger] {
            for &(v, q, lam) in &[(0.3, 0.1, 0.5), (-0.2, 0.3, 1.0), (2.0, 0.01, 0.01), (-5.0, 0.2, 0.1)] {
                let p = prox(m, v, q, lam, 0.0);
                assert!(p >= 0.0);
                if p > 1e-300 {
                    let g = p - v + lam * term_derivative(m, p, q);
                    assert!(g.abs() <= 1e-12 * (1.0 + v.abs()), "{m} v={v} q={q}: {g}");
                }
            }
        }
    }

    #[test]
    fn prox_minimizes_on_grid() {
        for m in DistanceMeasure::AMBIGUITY {
            for &(v, q, lam) in &[(0.3, 0.1, 0.5), (-0.2, 0.3, 1.0), (0.15, 0.2, 0.3), (0.5, 0.0, 0.4)] {
                let p = prox(m, v, q, lam, 0.0);
                let obj = |x: f64| 0.5 * (x - v) * (x - v) + lam * term(m, x, q);
                let best = obj(p);
                for k in 0..=2000 {
                    let x = k as f64 / 1000.0;
                    assert!(best <= obj(x) + 1e-12);
                }
            }
        }
    }
}
