//! Distributionally robust risk parity.
//!
//! Scenario-weighted moment estimation, f-divergence ambiguity sets, nominal
//! risk parity, projections onto the ambiguity set, the minimax solvers and
//! an experiment harness (synthetic data, benchmarks, in-sample diagnostics,
//! rolling backtests).
//!
//! ```
//! use drrp_core::{generate_synthetic, solve_scp_pga, AmbiguitySpec, DistanceMeasure,
//!     ProbabilityDistribution, SolverConfig};
//!
//! let data = generate_synthetic(5, 60, 7).unwrap();
//! let q = ProbabilityDistribution::uniform(60);
//! let spec = AmbiguitySpec::new(DistanceMeasure::Hellinger, 0.2, 60).unwrap();
//! let report = solve_scp_pga(&data, &q, &spec, &SolverConfig::default()).unwrap();
//! assert!(report.converged);
//! assert!((report.portfolio.weights().sum() - 1.0).abs() < 1e-12);
//! ```

pub mod data;
pub mod distance;
pub mod error;
pub mod harness;
pub mod moments;
pub mod projection;
pub mod riskparity;
mod roots;
pub mod scenario;
pub mod solvers;

pub use data::{generate_synthetic, load_returns_csv, read_returns_csv, write_returns_csv};
pub use distance::{budget, conjugate, divergence, generator, practical_upper_bound, AmbiguitySpec, DistanceMeasure};
pub use error::{DrrpError, Result};
pub use harness::{
    run_backtest, run_benchmark, run_benchmark_on, run_insample, write_backtest_csv, write_benchmark_csv, write_contributions_csv,
    write_insample_csv, write_summary_csv, write_weights_csv, BacktestConfig, BacktestResult, BenchmarkConfig,
    BenchmarkRow, InsampleRow, InsampleTable, PerformanceSummary, StrategyResult,
};
pub use moments::{
    estimate_moments, portfolio_scenario_returns, portfolio_variance_p_form, portfolio_variance_x_form,
    weighted_covariance, weighted_mean,
};
pub use projection::{
    project_ambiguity, project_ambiguity_with_report, project_positive_orthant, project_simplex, ProjectionConfig,
    ProjectionMethod, ProjectionReport,
};
pub use riskparity::{risk_contributions, solve_portfolio, solve_proxy, RiskContributions, RiskParityConfig};
pub use scenario::{MomentEstimates, Portfolio, ProbabilityDistribution, ProxyPortfolio, ScenarioMatrix};
pub use solvers::{
    bb_step, grad_p, grad_y, objective_f_rp, objective_f_rp_x_form, parse_config, solve, solve_pgda,
    solve_robust_counterpart, solve_scp_pga, Algorithm, SolverConfig, SolverReport,
};
