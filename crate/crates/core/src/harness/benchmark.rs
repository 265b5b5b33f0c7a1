use std::io::Write;

use rayon::prelude::*;

use crate::data::generate_synthetic;
use crate::distance::{AmbiguitySpec, DistanceMeasure};
use crate::error::Result;
use crate::moments::weighted_covariance;
use crate::riskparity::solve_portfolio;
use crate::scenario::{ProbabilityDistribution, ScenarioMatrix};
use crate::solvers::{solve, Algorithm, SolverConfig};

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    /// `(n, T)` pairs; each gets its own synthetic panel.
    pub sizes: Vec<(usize, usize)>,
    pub omegas: Vec<f64>,
    pub distances: Vec<DistanceMeasure>,
    pub algorithms: Vec<Algorithm>,
    pub seed: u64,
    pub solver: SolverConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            sizes: vec![(10, 100), (50, 500)],
            omegas: vec![0.15, 0.3, 0.45],
            distances: DistanceMeasure::AMBIGUITY.to_vec(),
            algorithms: vec![Algorithm::ScpPga],
            seed: 0,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub n: usize,
    pub t: usize,
    pub omega: f64,
    pub distance: DistanceMeasure,
    pub algorithm: Algorithm,
    pub runtime_seconds: f64,
    pub iterations: usize,
    pub time_per_iteration: f64,
    pub worst_case_variance: f64,
    pub nominal_variance: f64,
    /// `||x - x_scp||_2` when SCP-PGA ran on the same cell.
    pub gap_to_scp: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

struct Cell {
    size: usize,
    omega: f64,
    distance: DistanceMeasure,
    algorithm: Algorithm,
}

/// Runs every `(size, omega, distance, algorithm)` cell on seeded synthetic
/// panels, the `i`-th size drawn with `seed + i`. Cells run in parallel; rows
/// come back in grid order. A failing cell is recorded in its row's `error`
/// and does not stop the run.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<Vec<BenchmarkRow>> {
    let panels: Vec<ScenarioMatrix> = cfg
        .sizes
        .iter()
        .enumerate()
        .map(|(i, &(n, t))| generate_synthetic(n, t, cfg.seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;
    run_benchmark_on(&panels, cfg)
}

/// Same grid on caller-supplied panels; `cfg.sizes` and `cfg.seed` are
/// ignored.
pub fn run_benchmark_on(panels: &[ScenarioMatrix], cfg: &BenchmarkConfig) -> Result<Vec<BenchmarkRow>> {
    let sizes: Vec<(usize, usize)> = panels.iter().map(|d| (d.n_assets(), d.n_scenarios())).collect();
    let nominal: Vec<Result<f64>> = panels
        .par_iter()
        .map(|data| {
            let q = ProbabilityDistribution::uniform(data.n_scenarios());
            let sigma = weighted_covariance(data, &q)?;
            let x = solve_portfolio(&sigma, &cfg.solver.risk_parity())?;
            Ok(x.weights().dot(&(&sigma * x.weights())))
        })
        .collect();

    let mut cells = Vec::new();
    for size in 0..sizes.len() {
        for &omega in &cfg.omegas {
            for &distance in &cfg.distances {
                for &algorithm in &cfg.algorithms {
                    cells.push(Cell { size, omega, distance, algorithm });
                }
            }
        }
    }

    let results: Vec<_> = cells
        .par_iter()
        .map(|cell| {
            let data = &panels[cell.size];
            let t = data.n_scenarios();
            let q = ProbabilityDistribution::uniform(t);
            AmbiguitySpec::new(cell.distance, cell.omega, t)
                .and_then(|spec| solve(cell.algorithm, data, &q, &spec, &cfg.solver))
        })
        .collect();

    let mut rows: Vec<BenchmarkRow> = cells
        .iter()
        .zip(&results)
        .map(|(cell, res)| {
            let (n, t) = sizes[cell.size];
            let nominal_variance = nominal[cell.size].as_ref().copied().unwrap_or(f64::NAN);
            let mut row = BenchmarkRow {
                n,
                t,
                omega: cell.omega,
                distance: cell.distance,
                algorithm: cell.algorithm,
                runtime_seconds: f64::NAN,
                iterations: 0,
                time_per_iteration: f64::NAN,
                worst_case_variance: f64::NAN,
                nominal_variance,
                gap_to_scp: None,
                converged: false,
                error: None,
            };
            match res {
                Ok(r) => {
                    row.runtime_seconds = r.runtime_seconds;
                    row.iterations = r.iterations;
                    row.time_per_iteration = r.runtime_seconds / r.iterations.max(1) as f64;
                    row.worst_case_variance = r.worst_case_variance;
                    row.converged = r.converged;
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();

    for (i, cell) in cells.iter().enumerate() {
        let scp = cells.iter().position(|c| {
            c.size == cell.size && c.omega == cell.omega && c.distance == cell.distance && c.algorithm == Algorithm::ScpPga
        });
        if let (Some(j), Ok(mine)) = (scp, &results[i]) {
            if let Ok(reference) = &results[j] {
                rows[i].gap_to_scp = Some((mine.portfolio.weights() - reference.portfolio.weights()).norm());
            }
        }
    }
    Ok(rows)
}

/// CSV of the benchmark table. Timing columns vary run to run; leave them
/// out for byte-identical output.
pub fn write_benchmark_csv<W: Write>(rows: &[BenchmarkRow], writer: W, include_timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["n", "T", "omega", "distance", "algorithm"];
    if include_timing {
        header.extend(["runtime_s", "time_per_iter_s"]);
    }
    header.extend([
        "iterations",
        "worst_case_variance",
        "nominal_variance",
        "gap_to_scp",
        "converged",
        "error",
    ]);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.n.to_string(),
            r.t.to_string(),
            r.omega.to_string(),
            r.distance.to_string(),
            r.algorithm.to_string(),
        ];
        if include_timing {
            rec.push(r.runtime_seconds.to_string());
            rec.push(r.time_per_iteration.to_string());
        }
        rec.extend([
            r.iterations.to_string(),
            r.worst_case_variance.to_string(),
            r.nominal_variance.to_string(),
            r.gap_to_scp.map_or_else(String::new, |g| g.to_string()),
            r.converged.to_string(),
            r.error.clone().unwrap_or_default(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid_is_ordered_and_reproducible() {
        let cfg = BenchmarkConfig {
            sizes: vec![(4, 40)],
            omegas: vec![0.0, 0.2],
            distances: DistanceMeasure::AMBIGUITY.to_vec(),
            algorithms: vec![Algorithm::ScpPga, Algorithm::RobustCounterpart],
            seed: 5,
            solver: SolverConfig::default(),
        };
        let rows = run_benchmark(&cfg).unwrap();
        assert_eq!(rows.len(), 12);
        for r in rows.iter().filter(|r| r.omega == 0.0 && r.error.is_none()) {
            assert!((r.worst_case_variance - r.nominal_variance).abs() <= 1e-12 * r.nominal_variance);
        }
        // TV has no smooth conjugate: the RC cell fails but the run continues
        assert!(rows
            .iter()
            .any(|r| r.algorithm == Algorithm::RobustCounterpart && r.distance == DistanceMeasure::TotalVariation && r.error.is_some()));

        let mut a = Vec::new();
        let mut b = Vec::new();
        write_benchmark_csv(&rows, &mut a, false).unwrap();
        write_benchmark_csv(&run_benchmark(&cfg).unwrap(), &mut b, false).unwrap();
        assert_eq!(a, b);
    }
}
