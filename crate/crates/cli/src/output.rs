use std::io::Write;
use std::path::Path;

use drrp_core::{AmbiguitySpec, ScenarioMatrix, SolverConfig, SolverReport};
use serde_json::{json, Map, Value};

use crate::Failure;

pub fn asset_labels(data: &ScenarioMatrix) -> Vec<String> {
    data.asset_labels()
        .map(<[String]>::to_vec)
        .unwrap_or_else(|| (0..data.n_assets()).map(|i| format!("asset{i}")).collect())
}

/// JSON has no NaN or infinity; those become null.
fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

pub fn config_json(cfg: &SolverConfig) -> Value {
    json!({
        "kappa": cfg.kappa,
        "eps0": cfg.eps0,
        "beta": cfg.beta,
        "tau": cfg.tau,
        "m": cfg.m,
        "gamma0": cfg.gamma0,
        "alpha0": cfg.alpha0,
        "y0": cfg.y0.as_ref().map(|y| y.iter().copied().collect::<Vec<_>>()),
        "max_outer_iter": cfg.max_outer_iter,
        "grad_tol": cfg.grad_tol,
        "max_newton_iter": cfg.max_newton_iter,
        "kkt_tol": cfg.projection.kkt_tol,
        "max_ip_iter": cfg.projection.max_ip_iter,
        "floor_eps": cfg.projection.floor_eps,
        "projection_method": cfg.projection.method.to_string(),
    })
}

pub fn report_json(report: &SolverReport, spec: &AmbiguitySpec, labels: &[String]) -> Value {
    let weights: Map<String, Value> = labels
        .iter()
        .zip(report.portfolio.as_slice())
        .map(|(l, w)| (l.clone(), json!(w)))
        .collect();
    json!({
        "algorithm": report.algorithm.to_string(),
        "distance": spec.measure().to_string(),
        "omega": spec.omega(),
        "budget": spec.budget(),
        "converged": report.converged,
        "iterations": report.iterations,
        "runtime_seconds": report.runtime_seconds,
        "worst_case_variance": num(report.worst_case_variance),
        "weights": weights,
        "adversarial_p": report.adversarial_p.as_ref().map(|p| p.as_slice().to_vec()),
        "trace": {
            "objective": report.objective_trace.iter().map(|&v| num(v)).collect::<Vec<_>>(),
            "steps": report.step_trace.iter().map(|&(g, e)| json!([num(g), num(e)])).collect::<Vec<_>>(),
            "flagged_iterations": report.flagged_iterations,
        },
    })
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), Failure> {
    let mut file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value).map_err(std::io::Error::from)?;
    writeln!(file)?;
    Ok(())
}

pub fn write_weights<W: Write>(labels: &[String], weights: &[f64], writer: W) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(writer);
    let mut write = || -> csv::Result<()> {
        w.write_record(["asset", "weight"])?;
        for (l, x) in labels.iter().zip(weights) {
            w.write_record([l.as_str(), &x.to_string()])?;
        }
        w.flush()?;
        Ok(())
    };
    write().map_err(|e| Failure::Core(e.into()))
}
