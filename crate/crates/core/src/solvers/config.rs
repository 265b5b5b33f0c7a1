//! Plain `key = value` overrides for [`SolverConfig`]. Blank lines and
//! `#` comments are ignored.

use nalgebra::DVector;

use super::SolverConfig;
use crate::error::{DrrpError, Result};

fn parse_err(row: usize, column: usize, message: impl Into<String>) -> DrrpError {
    DrrpError::Parse {
        row,
        column,
        message: message.into(),
    }
}

pub fn parse_config(text: &str, base: SolverConfig) -> Result<SolverConfig> {
    let mut cfg = base;
    for (idx, raw) in text.lines().enumerate() {
        let row = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(parse_err(row, 1, format!("expected key = value, got '{line}'")));
        };
        let key = key.trim();
        let value = value.trim();
        let column = raw.find('=').map_or(1, |c| c + 2);
        let real = || {
            value
                .parse::<f64>()
                .map_err(|_| parse_err(row, column, format!("{key}: '{value}' is not a number")))
        };
        let count = || {
            value
                .parse::<usize>()
                .map_err(|_| parse_err(row, column, format!("{key}: '{value}' is not a count")))
        };
        match key {
            "kappa" => cfg.kappa = real()?,
            "eps0" => cfg.eps0 = real()?,
            "beta" => cfg.beta = real()?,
            "tau" => cfg.tau = real()?,
            "m" => cfg.m = count()?,
            "gamma0" => cfg.gamma0 = real()?,
            "alpha0" => cfg.alpha0 = real()?,
            "max_outer_iter" => cfg.max_outer_iter = count()?,
            "grad_tol" => cfg.grad_tol = real()?,
            "max_newton_iter" => cfg.max_newton_iter = count()?,
            "kkt_tol" => cfg.projection.kkt_tol = real()?,
            "max_ip_iter" => cfg.projection.max_ip_iter = count()?,
            "floor_eps" => cfg.projection.floor_eps = real()?,
            "projection_method" => {
                cfg.projection.method = value
                    .parse()
                    .map_err(|e: DrrpError| parse_err(row, column, e.to_string()))?
            }
            "y0" => {
                let vals = value
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| parse_err(row, column, "y0 must be a comma-separated list of numbers"))?;
                cfg.y0 = Some(DVector::from_vec(vals));
            }
            other => return Err(parse_err(row, 1, format!("unknown key '{other}'"))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}
