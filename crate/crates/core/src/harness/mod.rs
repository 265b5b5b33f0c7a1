//! Experiment drivers: the scaling benchmark, the in-sample variance and
//! risk-contribution diagnostic, and the rolling-window backtest. Every
//! table can be written as CSV.

mod backtest;
mod benchmark;
mod insample;

pub use backtest::{
    run_backtest, write_backtest_csv, write_summary_csv, BacktestConfig, BacktestResult, PerformanceSummary, StrategyResult,
};
pub use benchmark::{run_benchmark, run_benchmark_on, write_benchmark_csv, BenchmarkConfig, BenchmarkRow};
pub use insample::{
    run_insample, write_contributions_csv, write_insample_csv, write_weights_csv, InsampleRow, InsampleTable,
};
