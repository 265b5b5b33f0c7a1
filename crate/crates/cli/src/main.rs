//! `drrp`: distributionally robust risk parity from the command line.
//!
//! Exit codes: 0 success, 2 input or parse error, 3 solver non-convergence,
//! 4 numerical failure.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use drrp_core::{
    generate_synthetic, load_returns_csv, parse_config, run_backtest, run_benchmark, run_benchmark_on, run_insample,
    solve, write_backtest_csv, write_benchmark_csv, write_contributions_csv, write_insample_csv, write_summary_csv,
    write_weights_csv, Algorithm, AmbiguitySpec, BacktestConfig, BenchmarkConfig, DistanceMeasure, DrrpError,
    ProbabilityDistribution, ScenarioMatrix, SolverConfig,
};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "drrp", version, about = "Distributionally robust risk parity portfolios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one robust risk parity problem.
    Solve(SolveArgs),
    /// Time the solvers over a grid of sizes, radii and distances.
    Benchmark(BenchmarkArgs),
    /// Compare nominal and robust portfolios on one panel.
    Insample(InsampleArgs),
    /// Rolling calibrate-and-hold backtest.
    Backtest(BacktestArgs),
}

#[derive(Args)]
struct Common {
    /// Returns CSV: a period column, then one column per asset.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Seed of the synthetic panel used when --data is absent.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Assets in the synthetic panel.
    #[arg(long, default_value_t = 10)]
    assets: usize,
    /// Periods in the synthetic panel.
    #[arg(long, default_value_t = 520)]
    periods: usize,
    /// key = value overrides of the solver settings.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// js, hellinger or tv.
    #[arg(long, default_value = "hellinger")]
    distance: DistanceMeasure,
    /// Degree of robustness in [0, 1).
    #[arg(long, default_value_t = 0.3)]
    omega: f64,
    /// scp, pgda or rc.
    #[arg(long, default_value = "scp")]
    algo: Algorithm,
    /// Output directory; the report goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "js,hellinger,tv")]
    distance: Vec<DistanceMeasure>,
    #[arg(long, value_delimiter = ',', default_value = "0.15,0.3,0.45")]
    omega: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "scp")]
    algo: Vec<Algorithm>,
    /// Synthetic sizes as NxT; ignored with --data.
    #[arg(long, value_delimiter = ',', default_value = "10x100,50x500", value_parser = parse_size)]
    sizes: Vec<(usize, usize)>,
    /// Leave out the timing columns so reruns give identical files.
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InsampleArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "js,hellinger,tv")]
    distance: Vec<DistanceMeasure>,
    #[arg(long, value_delimiter = ',', default_value = "0.15,0.3,0.45")]
    omega: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BacktestArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "hellinger")]
    distance: DistanceMeasure,
    #[arg(long, value_delimiter = ',', default_value = "0.15,0.3,0.45")]
    omega: Vec<f64>,
    #[arg(long, default_value = "scp")]
    algo: Algorithm,
    /// Periods in each calibration window.
    #[arg(long, default_value_t = 104)]
    calibration: usize,
    /// Periods between rebalances.
    #[arg(long, default_value_t = 26)]
    holding: usize,
    /// Per-period risk-free rate.
    #[arg(long, default_value_t = 0.0)]
    risk_free: f64,
    #[arg(long, default_value_t = 52.0)]
    periods_per_year: f64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (n, t) = s.split_once('x').ok_or_else(|| format!("expected NxT, got '{s}'"))?;
    let n = n.trim().parse().map_err(|_| format!("bad asset count in '{s}'"))?;
    let t = t.trim().parse().map_err(|_| format!("bad period count in '{s}'"))?;
    Ok((n, t))
}

enum Failure {
    Core(DrrpError),
    /// Outputs were written but the solver stopped at its iteration cap.
    NotConverged(String),
}

impl From<DrrpError> for Failure {
    fn from(e: DrrpError) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(e.into())
    }
}

fn exit_code(e: &DrrpError) -> u8 {
    match e {
        DrrpError::NonConvergence { .. } => 3,
        DrrpError::Numerical(_) => 4,
        _ => 2,
    }
}

struct Run {
    command: &'static str,
    started: Instant,
    started_unix: f64,
    outputs: Vec<String>,
}

impl Run {
    fn new(command: &'static str) -> Self {
        Self {
            command,
            started: Instant::now(),
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64()),
            outputs: Vec::new(),
        }
    }

    fn create(&mut self, dir: &Path, name: &str) -> Result<std::fs::File, Failure> {
        self.outputs.push(name.to_string());
        Ok(std::fs::File::create(dir.join(name))?)
    }

    fn finish(self, dir: &Path, common: &Common, cfg: &SolverConfig, args: Value) -> Result<(), Failure> {
        let manifest = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "data": match &common.data {
                Some(path) => json!({ "path": path.display().to_string() }),
                None => json!({ "synthetic": { "seed": common.seed, "assets": common.assets, "periods": common.periods } }),
            },
            "arguments": args,
            "solver": output::config_json(cfg),
            "started_unix": self.started_unix,
            "wall_clock_seconds": self.started.elapsed().as_secs_f64(),
            "outputs": self.outputs,
        });
        output::write_json(&dir.join("manifest.json"), &manifest)
    }
}

fn read_error(path: &Path, e: DrrpError) -> Failure {
    match e {
        DrrpError::Io(io) => Failure::Core(DrrpError::InvalidInput(format!("cannot read {}: {io}", path.display()))),
        other => Failure::Core(other),
    }
}

fn load_returns(path: &Path) -> Result<ScenarioMatrix, Failure> {
    load_returns_csv(path).map_err(|e| read_error(path, e))
}

fn load_config(common: &Common) -> Result<SolverConfig, Failure> {
    let cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| read_error(path, e.into()))?;
            parse_config(&text, SolverConfig::default())?
        }
        None => SolverConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn load_data(common: &Common) -> Result<ScenarioMatrix, Failure> {
    Ok(match &common.data {
        Some(path) => load_returns(path)?,
        None => generate_synthetic(common.assets, common.periods, common.seed)?,
    })
}

fn cmd_solve(args: &SolveArgs) -> Result<(), Failure> {
    let mut run = Run::new("solve");
    let cfg = load_config(&args.common)?;
    let data = load_data(&args.common)?;
    let t = data.n_scenarios();
    let q = ProbabilityDistribution::uniform(t);
    let spec = AmbiguitySpec::new(args.distance, args.omega, t)?;
    let report = solve(args.algo, &data, &q, &spec, &cfg)?;
    let labels = output::asset_labels(&data);
    let json = output::report_json(&report, &spec, &labels);

    match &args.out {
        None => println!("{}", serde_json::to_string_pretty(&json).expect("serializable report")),
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            run.outputs.push("report.json".into());
            output::write_json(&dir.join("report.json"), &json)?;
            let file = run.create(dir, "weights.csv")?;
            output::write_weights(&labels, report.portfolio.as_slice(), file)?;
            let echo = json!({ "distance": args.distance.to_string(), "omega": args.omega, "algo": args.algo.to_string() });
            run.finish(dir, &args.common, &cfg, echo)?;
        }
    }
    if !report.converged {
        return Err(Failure::NotConverged(format!(
            "{} stopped after {} iterations without meeting eps0 = {}",
            args.algo, report.iterations, cfg.eps0
        )));
    }
    Ok(())
}

fn cmd_benchmark(args: &BenchmarkArgs) -> Result<(), Failure> {
    let mut run = Run::new("benchmark");
    let cfg = load_config(&args.common)?;
    let bench = BenchmarkConfig {
        sizes: args.sizes.clone(),
        omegas: args.omega.clone(),
        distances: args.distance.clone(),
        algorithms: args.algo.clone(),
        seed: args.common.seed,
        solver: cfg.clone(),
    };
    let rows = match &args.common.data {
        Some(path) => run_benchmark_on(&[load_returns(path)?], &bench)?,
        None => run_benchmark(&bench)?,
    };
    std::fs::create_dir_all(&args.out)?;
    let file = run.create(&args.out, "benchmark.csv")?;
    write_benchmark_csv(&rows, file, !args.no_timing)?;
    for r in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "warning: n={} T={} omega={} {} {}: {}",
            r.n,
            r.t,
            r.omega,
            r.distance,
            r.algorithm,
            r.error.as_deref().unwrap_or_default()
        );
    }
    let echo = json!({
        "distance": args.distance.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "omega": args.omega,
        "algo": args.algo.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "sizes": args.sizes.iter().map(|(n, t)| format!("{n}x{t}")).collect::<Vec<_>>(),
        "size_seeds": "seed + index of the size",
    });
    run.finish(&args.out, &args.common, &cfg, echo)
}

fn cmd_insample(args: &InsampleArgs) -> Result<(), Failure> {
    let mut run = Run::new("insample");
    let cfg = load_config(&args.common)?;
    let data = load_data(&args.common)?;
    let table = run_insample(&data, &args.omega, &args.distance, &cfg)?;
    std::fs::create_dir_all(&args.out)?;
    write_insample_csv(&table, run.create(&args.out, "insample.csv")?)?;
    write_weights_csv(&table, run.create(&args.out, "weights.csv")?)?;
    write_contributions_csv(&table, run.create(&args.out, "contributions.csv")?)?;
    let echo = json!({
        "distance": args.distance.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "omega": args.omega,
        "algo": Algorithm::ScpPga.to_string(),
    });
    run.finish(&args.out, &args.common, &cfg, echo)
}

fn cmd_backtest(args: &BacktestArgs) -> Result<(), Failure> {
    let mut run = Run::new("backtest");
    let cfg = load_config(&args.common)?;
    let data = load_data(&args.common)?;
    let bt = BacktestConfig {
        calibration_periods: args.calibration,
        holding_periods: args.holding,
        omegas: args.omega.clone(),
        distance: args.distance,
        risk_free_rate: args.risk_free,
        periods_per_year: args.periods_per_year,
        algorithm: args.algo,
        solver: cfg.clone(),
    };
    let result = run_backtest(&data, &bt)?;
    std::fs::create_dir_all(&args.out)?;
    write_backtest_csv(&result, run.create(&args.out, "backtest.csv")?)?;
    write_summary_csv(&result, run.create(&args.out, "summary.csv")?)?;
    let echo = json!({
        "distance": args.distance.to_string(),
        "omega": args.omega,
        "algo": args.algo.to_string(),
        "calibration": args.calibration,
        "holding": args.holding,
        "risk_free": args.risk_free,
        "periods_per_year": args.periods_per_year,
    });
    run.finish(&args.out, &args.common, &cfg, echo)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Insample(a) => cmd_insample(a),
        Command::Backtest(a) => cmd_backtest(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NotConverged(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
