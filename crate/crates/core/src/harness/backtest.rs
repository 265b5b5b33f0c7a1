use std::io::Write;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::distance::{AmbiguitySpec, DistanceMeasure};
use crate::error::{DrrpError, Result};
use crate::moments::weighted_covariance;
use crate::riskparity::solve_portfolio;
use crate::scenario::{ProbabilityDistribution, ScenarioMatrix};
use crate::solvers::{solve, Algorithm, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestConfig {
    pub calibration_periods: usize,
    pub holding_periods: usize,
    /// Robustness degrees of the robust strategies; a nominal strategy is
    /// always included.
    pub omegas: Vec<f64>,
    pub distance: DistanceMeasure,
    /// Per-period risk-free rate subtracted for excess returns.
    pub risk_free_rate: f64,
    pub periods_per_year: f64,
    pub algorithm: Algorithm,
    pub solver: SolverConfig,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            calibration_periods: 104,
            holding_periods: 26,
            omegas: vec![0.15, 0.3, 0.45],
            distance: DistanceMeasure::Hellinger,
            risk_free_rate: 0.0,
            periods_per_year: 52.0,
            algorithm: Algorithm::ScpPga,
            solver: SolverConfig::default(),
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.calibration_periods < 2 {
            return Err(DrrpError::invalid("calibration_periods must be at least 2"));
        }
        if self.holding_periods < 1 {
            return Err(DrrpError::invalid("holding_periods must be at least 1"));
        }
        if !(self.periods_per_year > 0.0) {
            return Err(DrrpError::invalid("periods_per_year must be positive"));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceSummary {
    /// Mean excess return times periods per year, in percent.
    pub annualized_return: f64,
    /// Sample standard deviation of excess returns times sqrt(periods per
    /// year), in percent.
    pub annualized_volatility: f64,
    /// `NaN` when the volatility is zero.
    pub sharpe: f64,
    /// Mean of `1/2 ||x_new - x_drifted||_1` over rebalances after the first.
    pub avg_turnover: f64,
    /// Wealth after each out-of-sample period, starting from 1.
    pub wealth_path: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyResult {
    pub name: String,
    pub summary: PerformanceSummary,
    /// Weights held at the start of each out-of-sample period (after drift).
    pub held_weights: Vec<DVector<f64>>,
    pub period_returns: Vec<f64>,
    /// `(period index, turnover)` for every rebalance after the first.
    pub turnovers: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestResult {
    /// Scenario indices of the out-of-sample periods.
    pub periods: Vec<usize>,
    pub period_labels: Vec<String>,
    pub strategies: Vec<StrategyResult>,
}

fn strategy_name(omega: Option<f64>, distance: DistanceMeasure) -> String {
    match omega {
        None => "nominal".to_string(),
        Some(w) => format!("{distance}_{w}"),
    }
}

/// Rolling calibrate-and-hold backtest. Each rebalance calibrates on the
/// preceding `calibration_periods` scenarios and holds the weights,
/// drifting with realized returns, for `holding_periods`.
pub fn run_backtest(data: &ScenarioMatrix, cfg: &BacktestConfig) -> Result<BacktestResult> {
    cfg.validate()?;
    let total = data.n_scenarios();
    let cal = cfg.calibration_periods;
    if total < cal + cfg.holding_periods {
        return Err(DrrpError::invalid(format!(
            "insufficient history: {total} periods, need at least {}",
            cal + cfg.holding_periods
        )));
    }
    let rebalances: Vec<usize> = (cal..total).step_by(cfg.holding_periods).collect();
    let strategies: Vec<Option<f64>> = std::iter::once(None).chain(cfg.omegas.iter().map(|w| Some(*w))).collect();

    // weights[r][s]: allocation of strategy s at rebalance r
    let weights: Vec<Vec<DVector<f64>>> = rebalances
        .par_iter()
        .map(|&start| {
            let window = data.window(start - cal, start)?;
            let q = ProbabilityDistribution::uniform(cal);
            strategies
                .iter()
                .map(|omega| match omega {
                    None => {
                        let sigma = weighted_covariance(&window, &q)?;
                        Ok(solve_portfolio(&sigma, &cfg.solver.risk_parity())?.weights().clone())
                    }
                    Some(w) => {
                        let spec = AmbiguitySpec::new(cfg.distance, *w, cal)?;
                        let report = solve(cfg.algorithm, &window, &q, &spec, &cfg.solver)?;
                        Ok(report.portfolio.weights().clone())
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let periods: Vec<usize> = (cal..total).collect();
    let xi = data.returns();
    let mut results = Vec::with_capacity(strategies.len());
    for (s, omega) in strategies.iter().enumerate() {
        let mut held_weights = Vec::with_capacity(periods.len());
        let mut period_returns = Vec::with_capacity(periods.len());
        let mut turnovers = Vec::new();
        let mut wealth_path = Vec::with_capacity(periods.len());
        let mut wealth = 1.0;
        let mut current: Option<DVector<f64>> = None;
        for (r, &start) in rebalances.iter().enumerate() {
            let target = weights[r][s].clone();
            if let Some(drifted) = &current {
                turnovers.push((start, 0.5 * (&target - drifted).abs().sum()));
            }
            let mut w = target;
            let end = (start + cfg.holding_periods).min(total);
            for t in start..end {
                let ret = xi.column(t).dot(&w);
                let growth = 1.0 + ret;
                if growth <= 0.0 {
                    return Err(DrrpError::Numerical(format!("portfolio wiped out in period {t}")));
                }
                held_weights.push(w.clone());
                period_returns.push(ret);
                wealth *= growth;
                wealth_path.push((t, wealth));
                // buy and hold: each position grows with its own return
                w = DVector::from_fn(w.len(), |i, _| w[i] * (1.0 + xi[(i, t)]) / growth);
            }
            current = Some(w);
        }
        let summary = summarize(&period_returns, &turnovers, wealth_path, cfg);
        results.push(StrategyResult {
            name: strategy_name(*omega, cfg.distance),
            summary,
            held_weights,
            period_returns,
            turnovers,
        });
    }
    let period_labels = periods
        .iter()
        .map(|&t| data.period_labels().map_or_else(|| t.to_string(), |l| l[t].clone()))
        .collect();
    Ok(BacktestResult {
        periods,
        period_labels,
        strategies: results,
    })
}

fn summarize(
    returns: &[f64],
    turnovers: &[(usize, f64)],
    wealth_path: Vec<(usize, f64)>,
    cfg: &BacktestConfig,
) -> PerformanceSummary {
    let excess: Vec<f64> = returns.iter().map(|r| r - cfg.risk_free_rate).collect();
    let n = excess.len() as f64;
    let mean = excess.iter().sum::<f64>() / n;
    let var = if excess.len() > 1 {
        excess.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let annualized_return = 100.0 * mean * cfg.periods_per_year;
    let annualized_volatility = 100.0 * var.sqrt() * cfg.periods_per_year.sqrt();
    let sharpe = if annualized_volatility > 0.0 {
        annualized_return / annualized_volatility
    } else {
        f64::NAN
    };
    let avg_turnover = if turnovers.is_empty() {
        0.0
    } else {
        turnovers.iter().map(|(_, v)| v).sum::<f64>() / turnovers.len() as f64
    };
    PerformanceSummary {
        annualized_return,
        annualized_volatility,
        sharpe,
        avg_turnover,
        wealth_path,
    }
}

/// Wealth of every strategy per period, plus each robust strategy's wealth
/// relative to the nominal one in percent.
pub fn write_backtest_csv<W: Write>(result: &BacktestResult, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["period".to_string(), "label".to_string()];
    for s in &result.strategies {
        header.push(format!("wealth_{}", s.name));
    }
    for s in result.strategies.iter().skip(1) {
        header.push(format!("relative_{}", s.name));
    }
    w.write_record(&header)?;
    for (k, (&t, label)) in result.periods.iter().zip(&result.period_labels).enumerate() {
        let mut rec = vec![t.to_string(), label.clone()];
        let nominal = result.strategies[0].summary.wealth_path[k].1;
        for s in &result.strategies {
            rec.push(s.summary.wealth_path[k].1.to_string());
        }
        for s in result.strategies.iter().skip(1) {
            rec.push((100.0 * (s.summary.wealth_path[k].1 / nominal - 1.0)).to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per strategy with the summary statistics.
pub fn write_summary_csv<W: Write>(result: &BacktestResult, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["strategy", "annualized_return_pct", "annualized_volatility_pct", "sharpe", "avg_turnover"])?;
    for s in &result.strategies {
        w.write_record([
            s.name.clone(),
            s.summary.annualized_return.to_string(),
            s.summary.annualized_volatility.to_string(),
            s.summary.sharpe.to_string(),
            s.summary.avg_turnover.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_synthetic;
    use nalgebra::DMatrix;

    fn small_cfg() -> BacktestConfig {
        BacktestConfig {
            calibration_periods: 40,
            holding_periods: 10,
            omegas: vec![0.2],
            ..Default::default()
        }
    }

    #[test]
    fn accounting_and_turnover() {
        let data = generate_synthetic(4, 100, 21).unwrap();
        let res = run_backtest(&data, &small_cfg()).unwrap();
        assert_eq!(res.strategies.len(), 2);
        assert_eq!(res.periods.len(), 60);
        for s in &res.strategies {
            let mut wealth = 1.0;
            for (w, t) in s.held_weights.iter().zip(&res.periods) {
                wealth *= 1.0 + data.returns().column(*t).dot(w);
            }
            let last = s.summary.wealth_path.last().unwrap().1;
            assert!((wealth - last).abs() <= 1e-12 * last);
            assert_eq!(s.turnovers.len(), 5);
            assert!(s.turnovers.iter().all(|(_, v)| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn zero_returns_are_degenerate() {
        let data = ScenarioMatrix::new(DMatrix::zeros(3, 60)).unwrap();
        assert!(matches!(run_backtest(&data, &small_cfg()), Err(DrrpError::Degenerate(_))));
    }

    #[test]
    fn short_history_rejected() {
        let data = generate_synthetic(3, 45, 1).unwrap();
        let err = run_backtest(&data, &small_cfg()).unwrap_err();
        assert!(err.to_string().contains("insufficient history"));
    }

    #[test]
    fn flat_excess_gives_nan_sharpe() {
        let cfg = small_cfg();
        let s = summarize(&[0.01, 0.01, 0.01], &[], vec![], &cfg);
        assert_eq!(s.annualized_volatility, 0.0);
        assert!(s.sharpe.is_nan());
        assert!((s.annualized_return - 52.0).abs() < 1e-12);
    }
}
