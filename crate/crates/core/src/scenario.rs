//! Domain types shared by every solver: the scenario panel, probability
//! vectors over scenarios, and portfolio weight vectors.

use nalgebra::{DMatrix, DVector};

use crate::error::{DrrpError, Result};

/// Asset return observations, stored as an `n x T` matrix (assets by scenarios).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioMatrix {
    returns: DMatrix<f64>,
    asset_labels: Option<Vec<String>>,
    period_labels: Option<Vec<String>>,
}

impl ScenarioMatrix {
    pub fn new(returns: DMatrix<f64>) -> Result<Self> {
        let (n, t) = returns.shape();
        if n < 2 {
            return Err(DrrpError::invalid(format!("need at least 2 assets, got {n}")));
        }
        if t < 2 {
            return Err(DrrpError::invalid(format!("need at least 2 scenarios, got {t}")));
        }
        if let Some(idx) = returns.iter().position(|v| !v.is_finite()) {
            let (i, j) = (idx % n, idx / n);
            return Err(DrrpError::invalid(format!(
                "non-finite return for asset {i} in scenario {j}"
            )));
        }
        Ok(Self {
            returns,
            asset_labels: None,
            period_labels: None,
        })
    }

    /// Build from row-major asset series: `rows[i][t]` is asset `i` in period `t`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let t = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != t) {
            return Err(DrrpError::dims("scenario rows", t, bad.len()));
        }
        Self::new(DMatrix::from_fn(n, t, |i, j| rows[i][j]))
    }

    pub fn with_asset_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n_assets() {
            return Err(DrrpError::dims("asset labels", self.n_assets(), labels.len()));
        }
        self.asset_labels = Some(labels);
        Ok(self)
    }

    pub fn with_period_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n_scenarios() {
            return Err(DrrpError::dims(
                "period labels",
                self.n_scenarios(),
                labels.len(),
            ));
        }
        self.period_labels = Some(labels);
        Ok(self)
    }

    pub fn n_assets(&self) -> usize {
        self.returns.nrows()
    }

    pub fn n_scenarios(&self) -> usize {
        self.returns.ncols()
    }

    pub fn returns(&self) -> &DMatrix<f64> {
        &self.returns
    }

    pub fn asset_labels(&self) -> Option<&[String]> {
        self.asset_labels.as_deref()
    }

    pub fn period_labels(&self) -> Option<&[String]> {
        self.period_labels.as_deref()
    }

    /// Contiguous block of scenarios `[start, end)`, labels carried along.
    pub fn window(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.n_scenarios() {
            return Err(DrrpError::invalid(format!(
                "window [{start}, {end}) outside 0..{}",
                self.n_scenarios()
            )));
        }
        let mut out = Self::new(self.returns.columns(start, end - start).into_owned())?;
        out.asset_labels = self.asset_labels.clone();
        out.period_labels = self
            .period_labels
            .as_ref()
            .map(|l| l[start..end].to_vec());
        Ok(out)
    }
}

/// Discrete probability mass over the `T` scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityDistribution(DVector<f64>);

impl ProbabilityDistribution {
    /// Sums within this band of one are renormalized, anything else is rejected.
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(probs: DVector<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(DrrpError::invalid("empty probability vector"));
        }
        if let Some(v) = probs.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(DrrpError::invalid(format!("invalid probability entry {v}")));
        }
        let sum = probs.sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(DrrpError::invalid(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(Self(probs / sum))
    }

    pub fn from_slice(probs: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(probs))
    }

    /// Clip tiny negative round-off to zero and renormalize. Used on the
    /// output of projections, where drift is expected to be at the 1e-12 level.
    pub(crate) fn from_projected(mut probs: DVector<f64>) -> Result<Self> {
        for v in probs.iter_mut() {
            if *v < 0.0 && *v > -1e-10 {
                *v = 0.0;
            }
        }
        Self::new(probs)
    }

    pub fn uniform(t: usize) -> Self {
        Self(DVector::from_element(t, 1.0 / t as f64))
    }

    /// All mass on scenario `index`.
    pub fn indicator(t: usize, index: usize) -> Self {
        let mut v = DVector::zeros(t);
        v[index] = 1.0;
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }
}

/// Long-only, fully invested weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio(DVector<f64>);

impl Portfolio {
    pub const SUM_TOLERANCE: f64 = 1e-10;

    pub fn new(weights: DVector<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(DrrpError::invalid("empty weight vector"));
        }
        if let Some(v) = weights.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(DrrpError::invalid(format!("invalid portfolio weight {v}")));
        }
        let sum = weights.sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(DrrpError::invalid(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self(weights))
    }

    pub fn from_slice(weights: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(weights))
    }

    pub fn equal(n: usize) -> Self {
        Self(DVector::from_element(n, 1.0 / n as f64))
    }

    pub(crate) fn from_normalized(weights: DVector<f64>) -> Self {
        Self(weights)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }
}

/// Unnormalized, strictly positive stand-in for the portfolio weights used
/// by the log-barrier risk parity objective.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxyPortfolio(DVector<f64>);

impl ProxyPortfolio {
    pub fn new(y: DVector<f64>) -> Result<Self> {
        if y.is_empty() {
            return Err(DrrpError::invalid("empty proxy vector"));
        }
        if let Some(v) = y.iter().find(|v| !v.is_finite() || **v <= 0.0) {
            return Err(DrrpError::invalid(format!(
                "proxy entries must be strictly positive, found {v}"
            )));
        }
        Ok(Self(y))
    }

    pub fn from_slice(y: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(y))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }
}

/// Probability-weighted first and second moments.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimates {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_matrix_rejects_small_or_nonfinite() {
        assert!(ScenarioMatrix::from_rows(&[vec![1.0, 2.0]]).is_err());
        assert!(ScenarioMatrix::from_rows(&[vec![1.0], vec![2.0]]).is_err());
        let err = ScenarioMatrix::from_rows(&[vec![1.0, f64::NAN], vec![0.0, 1.0]]).unwrap_err();
        assert!(err.to_string().contains("asset 0"));
        assert!(ScenarioMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0]]).is_err());
    }

    #[test]
    fn window_keeps_labels() {
        let m = ScenarioMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]])
            .unwrap()
            .with_period_labels(vec!["a".into(), "b".into(), "c".into()])
            .unwrap();
        let w = m.window(1, 3).unwrap();
        assert_eq!(w.returns()[(1, 0)], 5.0);
        assert_eq!(w.period_labels().unwrap(), &["b".to_string(), "c".to_string()]);
        assert!(m.window(2, 2).is_err());
    }

    #[test]
    fn probability_renormalizes_small_drift() {
        let p = ProbabilityDistribution::from_slice(&[0.5, 0.5 + 5e-10]).unwrap();
        assert!((p.as_vector().sum() - 1.0).abs() < 1e-15);
        assert!(ProbabilityDistribution::from_slice(&[0.5, 0.6]).is_err());
        assert!(ProbabilityDistribution::from_slice(&[1.5, -0.5]).is_err());
    }

    #[test]
    fn portfolio_and_proxy_validation() {
        assert!(Portfolio::from_slice(&[0.25, 0.75]).is_ok());
        assert!(Portfolio::from_slice(&[0.5, 0.6]).is_err());
        assert!(Portfolio::from_slice(&[-0.1, 1.1]).is_err());
        assert!(ProxyPortfolio::from_slice(&[1.0, 0.0]).is_err());
        assert!(ProxyPortfolio::from_slice(&[1.0, 2.0]).is_ok());
    }
}
