//! Probability-weighted moment estimates and portfolio variance in both the
//! covariance ("x") form and the scenario-probability ("p") form.

use nalgebra::{DMatrix, DVector};

use crate::error::{DrrpError, Result};
use crate::scenario::{MomentEstimates, ProbabilityDistribution, ScenarioMatrix};

/// Quadratic forms below this are treated as evidence of a non-PSD matrix.
const NEGATIVE_VARIANCE_TOL: f64 = 1e-12;

fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(DrrpError::dims(context, expected, found));
    }
    Ok(())
}

/// `sum_t p_t * xi_t`.
pub fn weighted_mean(data: &ScenarioMatrix, p: &ProbabilityDistribution) -> Result<DVector<f64>> {
    check_len("weighted_mean", data.n_scenarios(), p.len())?;
    Ok(data.returns() * p.as_vector())
}

/// `sum_t p_t (xi_t - mu)(xi_t - mu)^T` with the biased (1/T-style) normalization.
pub fn weighted_covariance(
    data: &ScenarioMatrix,
    p: &ProbabilityDistribution,
) -> Result<DMatrix<f64>> {
    Ok(estimate_moments(data, p)?.sigma)
}

pub fn estimate_moments(
    data: &ScenarioMatrix,
    p: &ProbabilityDistribution,
) -> Result<MomentEstimates> {
    let mu = weighted_mean(data, p)?;
    let mut centered = data.returns().clone();
    for mut col in centered.column_iter_mut() {
        col -= &mu;
    }
    let mut scaled = centered.clone();
    for (mut col, &pt) in scaled.column_iter_mut().zip(p.as_slice()) {
        col *= pt;
    }
    let sigma = scaled * centered.transpose();
    let sigma = (&sigma + sigma.transpose()) * 0.5;
    Ok(MomentEstimates { mu, sigma })
}

/// Scenario returns of the (possibly unnormalized) weight vector `w`: `xi^T w`.
pub fn portfolio_scenario_returns(data: &ScenarioMatrix, w: &DVector<f64>) -> Result<DVector<f64>> {
    check_len("portfolio_scenario_returns", data.n_assets(), w.len())?;
    Ok(data.returns().tr_mul(w))
}

/// `w^T sigma w`, with tiny negative round-off clamped to zero.
pub fn portfolio_variance_x_form(w: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<f64> {
    if sigma.nrows() != sigma.ncols() {
        return Err(DrrpError::invalid("covariance matrix is not square"));
    }
    check_len("portfolio_variance_x_form", sigma.nrows(), w.len())?;
    clamp_variance(w.dot(&(sigma * w)))
}

/// Variance of the portfolio return scenarios under `p`, computed without
/// forming the `T x T` outer product of scenario returns.
pub fn portfolio_variance_p_form(
    data: &ScenarioMatrix,
    w: &DVector<f64>,
    p: &ProbabilityDistribution,
) -> Result<f64> {
    check_len("portfolio_variance_p_form", data.n_scenarios(), p.len())?;
    let pi = portfolio_scenario_returns(data, w)?;
    Ok(scenario_variance(&pi, p.as_vector()))
}

/// `p^T pi^2 - (p^T pi)^2`, evaluated in centered two-pass form.
pub(crate) fn scenario_variance(pi: &DVector<f64>, p: &DVector<f64>) -> f64 {
    let mean = p.dot(pi);
    pi.iter()
        .zip(p.iter())
        .map(|(&x, &pt)| pt * (x - mean) * (x - mean))
        .sum::<f64>()
        .max(0.0)
}

fn clamp_variance(v: f64) -> Result<f64> {
    if v < -NEGATIVE_VARIANCE_TOL {
        return Err(DrrpError::Numerical(format!(
            "negative quadratic form {v:e}: covariance is not PSD"
        )));
    }
    Ok(v.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dvector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one_asset_pm1() -> ScenarioMatrix {
        // Matrix needs two assets; the second is a zero series.
        ScenarioMatrix::from_rows(&[vec![1.0, -1.0], vec![0.0, 0.0]]).unwrap()
    }

    fn random_instance(rng: &mut ChaCha8Rng, n: usize, t: usize) -> (ScenarioMatrix, ProbabilityDistribution) {
        let data = ScenarioMatrix::new(DMatrix::from_fn(n, t, |_, _| rng.random_range(-0.1..0.1))).unwrap();
        let raw: Vec<f64> = (0..t).map(|_| rng.random_range(0.0..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let p = ProbabilityDistribution::from_slice(&raw.iter().map(|v| v / s).collect::<Vec<_>>()).unwrap();
        (data, p)
    }

    #[test]
    fn weighted_mean_examples() {
        let d = one_asset_pm1();
        let half = ProbabilityDistribution::uniform(2);
        assert_abs_diff_eq!(weighted_mean(&d, &half).unwrap()[0], 0.0);
        let skew = ProbabilityDistribution::from_slice(&[0.75, 0.25]).unwrap();
        assert_abs_diff_eq!(weighted_mean(&d, &skew).unwrap()[0], 0.5, epsilon = 1e-15);
        let data = ScenarioMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let e = ProbabilityDistribution::indicator(3, 1);
        assert_eq!(weighted_mean(&data, &e).unwrap(), dvector![2.0, 5.0]);
        assert!(weighted_mean(&data, &half).is_err());
    }

    #[test]
    fn weighted_covariance_examples() {
        let d = one_asset_pm1();
        let half = ProbabilityDistribution::uniform(2);
        assert_abs_diff_eq!(weighted_covariance(&d, &half).unwrap()[(0, 0)], 1.0);
        let skew = ProbabilityDistribution::from_slice(&[0.75, 0.25]).unwrap();
        assert_abs_diff_eq!(weighted_covariance(&d, &skew).unwrap()[(0, 0)], 0.75, epsilon = 1e-15);
        let data = ScenarioMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, -5.0, 6.0]]).unwrap();
        let s = weighted_covariance(&data, &ProbabilityDistribution::indicator(3, 2)).unwrap();
        assert_eq!(s, DMatrix::zeros(2, 2));
    }

    #[test]
    fn uniform_weights_match_biased_sample_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (data, _) = random_instance(&mut rng, 4, 30);
        let q = ProbabilityDistribution::uniform(30);
        let m = estimate_moments(&data, &q).unwrap();
        let x = data.returns();
        for i in 0..4 {
            let mi = x.row(i).mean();
            assert_abs_diff_eq!(m.mu[i], mi, epsilon = 1e-12);
            for j in 0..4 {
                let mj = x.row(j).mean();
                let c: f64 = (0..30).map(|t| (x[(i, t)] - mi) * (x[(j, t)] - mj)).sum::<f64>() / 30.0;
                assert_abs_diff_eq!(m.sigma[(i, j)], c, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn covariance_is_psd_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let n = rng.random_range(2..6);
            let t = rng.random_range(2..12);
            let (data, p) = random_instance(&mut rng, n, t);
            let s = weighted_covariance(&data, &p).unwrap();
            assert!((&s - s.transpose()).amax() <= 1e-12);
            let eig = s.symmetric_eigenvalues();
            let max = eig.max();
            assert!(eig.min() >= -1e-10 * max.max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn scenario_returns_examples() {
        let data = ScenarioMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(portfolio_scenario_returns(&data, &dvector![0.5, 0.5]).unwrap(), dvector![2.0, 3.0]);
        assert_eq!(portfolio_scenario_returns(&data, &dvector![0.0, 1.0]).unwrap(), dvector![3.0, 4.0]);
        assert_eq!(portfolio_scenario_returns(&data, &dvector![0.0, 0.0]).unwrap(), dvector![0.0, 0.0]);
        assert!(portfolio_scenario_returns(&data, &dvector![1.0]).is_err());
    }

    #[test]
    fn variance_x_form_examples() {
        let w = dvector![0.5, 0.5];
        assert_abs_diff_eq!(portfolio_variance_x_form(&w, &DMatrix::identity(2, 2)).unwrap(), 0.5);
        let s = DMatrix::from_diagonal(&dvector![0.04, 0.01]);
        let v = portfolio_variance_x_form(&dvector![1.0 / 3.0, 2.0 / 3.0], &s).unwrap();
        assert_abs_diff_eq!(v, 0.08 / 9.0, epsilon = 1e-15);
        assert_eq!(portfolio_variance_x_form(&w, &DMatrix::zeros(2, 2)).unwrap(), 0.0);
        let bad = DMatrix::from_diagonal(&dvector![-1.0, 0.0]);
        assert!(portfolio_variance_x_form(&dvector![1.0, 0.0], &bad).is_err());
    }

    #[test]
    fn variance_p_form_examples() {
        let d = one_asset_pm1();
        let v = portfolio_variance_p_form(&d, &dvector![1.0, 0.0], &ProbabilityDistribution::uniform(2)).unwrap();
        assert_abs_diff_eq!(v, 1.0);
        let v = portfolio_variance_p_form(&d, &dvector![1.0, 0.0], &ProbabilityDistribution::indicator(2, 0)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn variance_forms_agree_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let n = rng.random_range(2..8);
            let t = rng.random_range(2..40);
            let (data, p) = random_instance(&mut rng, n, t);
            let w = DVector::from_fn(n, |_, _| rng.random_range(0.0..2.0));
            let x = portfolio_variance_x_form(&w, &weighted_covariance(&data, &p).unwrap()).unwrap();
            let pf = portfolio_variance_p_form(&data, &w, &p).unwrap();
            assert!((x - pf).abs() <= 1e-10 * x.max(1.0));
        }
    }
}
