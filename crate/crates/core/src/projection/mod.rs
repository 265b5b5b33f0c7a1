//! Feasibility-restoring projections: the positive orthant for the proxy
//! weights, normalization onto the portfolio simplex, and the Euclidean
//! projection onto the ambiguity set
//!
//! ```text
//! min ||u - p||^2  s.t.  p >= 0, 1'p = 1, D(p, q) <= d.
//! ```

mod barrier;
mod dual;

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::distance::{divergence_slices, AmbiguitySpec};
use crate::error::{DrrpError, Result};
use crate::scenario::{Portfolio, ProbabilityDistribution, ProxyPortfolio};

/// How the ambiguity-set projection is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionMethod {
    /// Lagrangian decomposition: a closed-form or 1-D Newton prox per
    /// scenario, root finding on the sum multiplier and on the distance
    /// multiplier. Exact to round-off.
    #[default]
    Dual,
    /// Primal log-barrier interior point on the auxiliary-variable
    /// encodings (square-root variables for Hellinger, absolute-value
    /// variables for TV).
    Barrier,
}

impl fmt::Display for ProjectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProjectionMethod::Dual => "dual",
            ProjectionMethod::Barrier => "barrier",
        })
    }
}

impl FromStr for ProjectionMethod {
    type Err = DrrpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dual" => Ok(ProjectionMethod::Dual),
            "barrier" => Ok(ProjectionMethod::Barrier),
            other => Err(DrrpError::invalid(format!(
                "unknown projection method '{other}' (expected dual or barrier)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionConfig {
    pub kkt_tol: f64,
    pub max_ip_iter: usize,
    /// Replacement for nonpositive proxy entries.
    pub floor_eps: f64,
    pub method: ProjectionMethod,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            kkt_tol: 1e-8,
            max_ip_iter: 100,
            floor_eps: 1e-8,
            method: ProjectionMethod::Dual,
        }
    }
}

impl ProjectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kkt_tol > 0.0) || !(self.floor_eps > 0.0) {
            return Err(DrrpError::invalid("kkt_tol and floor_eps must be positive"));
        }
        if self.max_ip_iter == 0 {
            return Err(DrrpError::invalid("max_ip_iter must be at least 1"));
        }
        Ok(())
    }
}

/// Optimality certificate of an ambiguity-set projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionReport {
    pub p: ProbabilityDistribution,
    /// Multiplier of the distance constraint.
    pub lambda: f64,
    /// Multiplier of the sum-to-one constraint.
    pub theta: f64,
    pub stationarity: f64,
    pub feasibility: f64,
    /// `lambda |D(p) - d|` divided by `max(1, max |u|)`; lambda scales with
    /// the input.
    pub complementarity: f64,
    pub iterations: usize,
}

pub fn project_positive_orthant(z: &DVector<f64>, floor_eps: f64) -> DVector<f64> {
    z.map(|v| if v > 0.0 { v } else { floor_eps })
}

/// `y / sum(y)` for a strictly positive proxy.
pub fn project_simplex(y: &ProxyPortfolio) -> Portfolio {
    let v = y.values();
    Portfolio::from_normalized(v / v.sum())
}

/// Checked variant of [`project_simplex`] for raw vectors.
pub fn project_simplex_vec(y: &DVector<f64>) -> Result<Portfolio> {
    Ok(project_simplex(&ProxyPortfolio::new(y.clone())?))
}

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub(crate) fn euclidean_simplex(u: &[f64]) -> Vec<f64> {
    let mut sorted = u.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cum += v;
        let t = (cum - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    u.iter().map(|&v| (v - theta).max(0.0)).collect()
}

pub fn project_ambiguity(
    u: &DVector<f64>,
    q: &ProbabilityDistribution,
    spec: &AmbiguitySpec,
    cfg: &ProjectionConfig,
) -> Result<ProbabilityDistribution> {
    project_ambiguity_with_report(u, q, spec, cfg).map(|r| r.p)
}

pub fn project_ambiguity_with_report(
    u: &DVector<f64>,
    q: &ProbabilityDistribution,
    spec: &AmbiguitySpec,
    cfg: &ProjectionConfig,
) -> Result<ProjectionReport> {
    cfg.validate()?;
    let t = q.len();
    if u.len() != t {
        return Err(DrrpError::dims("project_ambiguity", t, u.len()));
    }
    if spec.n_scenarios() != t {
        return Err(DrrpError::dims("ambiguity spec", t, spec.n_scenarios()));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(DrrpError::invalid("projection input has non-finite entries"));
    }
    let d = spec.budget();
    let measure = spec.measure();
    if d == 0.0 {
        return Ok(ProjectionReport {
            p: q.clone(),
            lambda: 0.0,
            theta: 0.0,
            stationarity: 0.0,
            feasibility: 0.0,
            complementarity: 0.0,
            iterations: 0,
        });
    }

    // Distance constraint inactive: plain simplex projection is optimal.
    let simplex = euclidean_simplex(u.as_slice());
    if divergence_slices(measure, &simplex, q.as_slice()) <= d {
        let p = ProbabilityDistribution::from_projected(DVector::from_vec(simplex))?;
        return Ok(ProjectionReport {
            p,
            lambda: 0.0,
            theta: 0.0,
            stationarity: 0.0,
            feasibility: 0.0,
            complementarity: 0.0,
            iterations: 0,
        });
    }

    let report = match cfg.method {
        ProjectionMethod::Dual => dual::project(u.as_slice(), q.as_slice(), measure, d, cfg)?,
        ProjectionMethod::Barrier => barrier::project(u.as_slice(), q.as_slice(), measure, d, cfg)?,
    };
    let worst = report
        .stationarity
        .max(report.feasibility)
        .max(report.complementarity);
    if worst > cfg.kkt_tol {
        return Err(DrrpError::NonConvergence {
            context: format!("{} projection onto {measure} ambiguity set", cfg.method),
            iterations: report.iterations,
            residual: worst,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{divergence, DistanceMeasure};
    use approx::assert_abs_diff_eq;
    use nalgebra::dvector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn orthant_examples() {
        assert_eq!(
            project_positive_orthant(&dvector![1.0, -2.0, 3.0], 1e-8),
            dvector![1.0, 1e-8, 3.0]
        );
        assert_eq!(project_positive_orthant(&dvector![0.5, 2.0], 1e-8), dvector![0.5, 2.0]);
        assert_eq!(project_positive_orthant(&dvector![-1.0, 0.0], 1e-6), dvector![1e-6, 1e-6]);
    }

    #[test]
    fn simplex_normalization_examples() {
        let x = project_simplex_vec(&dvector![2.0, 2.0]).unwrap();
        assert_eq!(x.weights(), &dvector![0.5, 0.5]);
        let x = project_simplex_vec(&dvector![1.0, 2.0, 1.0]).unwrap();
        assert_eq!(x.weights(), &dvector![0.25, 0.5, 0.25]);
        let w = dvector![0.1, 0.2, 0.7];
        let x = project_simplex_vec(&w).unwrap();
        assert!((x.weights() - w).amax() <= 1e-15);
        assert!(project_simplex_vec(&dvector![1.0, 0.0]).is_err());
    }

    #[test]
    fn euclidean_simplex_projection() {
        assert_eq!(euclidean_simplex(&[0.2, 0.8]), vec![0.2, 0.8]);
        assert_eq!(euclidean_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = euclidean_simplex(&[0.5, 0.5, 0.5]);
        for v in p {
            assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    fn spec(m: DistanceMeasure, omega: f64, t: usize) -> AmbiguitySpec {
        AmbiguitySpec::new(m, omega, t).unwrap()
    }

    #[test]
    fn trivial_cases() {
        let q = ProbabilityDistribution::uniform(4);
        let cfg = ProjectionConfig::default();
        for m in DistanceMeasure::AMBIGUITY {
            let p = project_ambiguity(q.as_vector(), &q, &spec(m, 0.3, 4), &cfg).unwrap();
            assert!((p.as_vector() - q.as_vector()).amax() <= 1e-15);
            let u = dvector![5.0, -1.0, 0.3, 0.0];
            let p = project_ambiguity(&u, &q, &spec(m, 0.0, 4), &cfg).unwrap();
            assert_eq!(p, q);
            let inside = dvector![0.3, 0.25, 0.25, 0.2];
            let p = project_ambiguity(&inside, &q, &spec(m, 0.5, 4), &cfg).unwrap();
            assert!((p.as_vector() - &inside).amax() <= 1e-15);
        }
    }

    #[test]
    fn active_constraint_lands_on_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let cfg = ProjectionConfig::default();
        for m in DistanceMeasure::AMBIGUITY {
            for _ in 0..50 {
                let t = rng.random_range(2..40);
                let q = ProbabilityDistribution::uniform(t);
                let s = spec(m, 0.2, t);
                let u = DVector::from_fn(t, |_, _| rng.random_range(-1.0..1.0));
                let r = project_ambiguity_with_report(&u, &q, &s, &cfg).unwrap();
                let dist = divergence(m, &r.p, &q).unwrap();
                assert!(dist <= s.budget() + 1e-8);
                if r.lambda > 0.0 {
                    assert!((dist - s.budget()).abs() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn barrier_agrees_with_dual() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let dual = ProjectionConfig::default();
        let barrier = ProjectionConfig { method: ProjectionMethod::Barrier, ..Default::default() };
        for m in DistanceMeasure::AMBIGUITY {
            for _ in 0..30 {
                let t = rng.random_range(2..30);
                let raw: Vec<f64> = (0..t).map(|_| rng.random_range(0.2..1.0)).collect();
                let sum: f64 = raw.iter().sum();
                let q = ProbabilityDistribution::from_slice(&raw.iter().map(|v| v / sum).collect::<Vec<_>>()).unwrap();
                let s = spec(m, rng.random_range(0.05..0.6), t);
                let u = q.as_vector() + DVector::from_fn(t, |_, _| rng.random_range(-0.5..0.5));
                let a = project_ambiguity(&u, &q, &s, &dual).unwrap();
                let b = project_ambiguity(&u, &q, &s, &barrier).unwrap();
                assert!((a.as_vector() - b.as_vector()).norm() <= 1e-6, "{m}");
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let q = ProbabilityDistribution::uniform(3);
        let cfg = ProjectionConfig::default();
        let s = spec(DistanceMeasure::Hellinger, 0.3, 3);
        assert!(project_ambiguity(&dvector![1.0, 0.0], &q, &s, &cfg).is_err());
        assert!(project_ambiguity(&dvector![1.0, f64::NAN, 0.0], &q, &s, &cfg).is_err());
        assert!("barrier".parse::<ProjectionMethod>().is_ok());
        assert!("ipopt".parse::<ProjectionMethod>().is_err());
    }
}
