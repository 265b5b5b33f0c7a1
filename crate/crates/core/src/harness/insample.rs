use std::io::Write;

use nalgebra::DMatrix;

use crate::distance::{AmbiguitySpec, DistanceMeasure};
use crate::error::{DrrpError, Result};
use crate::moments::weighted_covariance;
use crate::riskparity::{risk_contributions, solve_portfolio};
use crate::scenario::{Portfolio, ProbabilityDistribution, ScenarioMatrix};
use crate::solvers::{solve_scp_pga, SolverConfig};

/// Variances and contribution CVs of the nominal and robust portfolios, each
/// evaluated under the nominal covariance and under the robust solve's
/// worst-case covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct InsampleRow {
    pub omega: f64,
    pub distance: DistanceMeasure,
    pub var_nominal_nom: f64,
    pub var_robust_nom: f64,
    pub var_nominal_wc: f64,
    pub var_robust_wc: f64,
    pub cv_nominal_nom: f64,
    pub cv_robust_nom: f64,
    pub cv_nominal_wc: f64,
    pub cv_robust_wc: f64,
}

#[derive(Debug, Clone)]
pub struct InsampleTable {
    pub asset_labels: Vec<String>,
    pub nominal: Portfolio,
    pub rows: Vec<InsampleRow>,
    /// Robust portfolio per row, same order as `rows`.
    pub robust: Vec<Portfolio>,
    pub sigma_nominal: DMatrix<f64>,
    /// Worst-case covariance per row.
    pub sigma_worst: Vec<DMatrix<f64>>,
}

pub fn run_insample(
    data: &ScenarioMatrix,
    omegas: &[f64],
    distances: &[DistanceMeasure],
    cfg: &SolverConfig,
) -> Result<InsampleTable> {
    let t = data.n_scenarios();
    let q = ProbabilityDistribution::uniform(t);
    let sigma_nominal = weighted_covariance(data, &q)?;
    let nominal = solve_portfolio(&sigma_nominal, &cfg.risk_parity())?;
    let var = |x: &Portfolio, s: &DMatrix<f64>| x.weights().dot(&(s * x.weights()));

    let mut rows = Vec::new();
    let mut robust = Vec::new();
    let mut sigma_worst = Vec::new();
    for &distance in distances {
        for &omega in omegas {
            let spec = AmbiguitySpec::new(distance, omega, t)?;
            let report = solve_scp_pga(data, &q, &spec, cfg)?;
            let p = report
                .adversarial_p
                .as_ref()
                .ok_or_else(|| DrrpError::Numerical("solver returned no adversarial distribution".into()))?;
            let wc = weighted_covariance(data, p)?;
            let x = report.portfolio;
            rows.push(InsampleRow {
                omega,
                distance,
                var_nominal_nom: var(&nominal, &sigma_nominal),
                var_robust_nom: var(&x, &sigma_nominal),
                var_nominal_wc: var(&nominal, &wc),
                var_robust_wc: var(&x, &wc),
                cv_nominal_nom: risk_contributions(&nominal, &sigma_nominal)?.cv,
                cv_robust_nom: risk_contributions(&x, &sigma_nominal)?.cv,
                cv_nominal_wc: risk_contributions(&nominal, &wc)?.cv,
                cv_robust_wc: risk_contributions(&x, &wc)?.cv,
            });
            robust.push(x);
            sigma_worst.push(wc);
        }
    }
    let asset_labels = data
        .asset_labels()
        .map(<[String]>::to_vec)
        .unwrap_or_else(|| (0..data.n_assets()).map(|i| format!("asset{i}")).collect());
    Ok(InsampleTable {
        asset_labels,
        nominal,
        rows,
        robust,
        sigma_nominal,
        sigma_worst,
    })
}

fn row_label(r: &InsampleRow) -> String {
    format!("{}_{}", r.distance, r.omega)
}

pub fn write_insample_csv<W: Write>(table: &InsampleTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "omega",
        "distance",
        "var_nominal_nom",
        "var_robust_nom",
        "var_nominal_wc",
        "var_robust_wc",
        "cv_nominal_nom",
        "cv_robust_nom",
        "cv_nominal_wc",
        "cv_robust_wc",
    ])?;
    for r in &table.rows {
        let vals = [
            r.var_nominal_nom,
            r.var_robust_nom,
            r.var_nominal_wc,
            r.var_robust_wc,
            r.cv_nominal_nom,
            r.cv_robust_nom,
            r.cv_nominal_wc,
            r.cv_robust_wc,
        ];
        let mut rec = vec![r.omega.to_string(), r.distance.to_string()];
        rec.extend(vals.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per asset, one column per portfolio.
pub fn write_weights_csv<W: Write>(table: &InsampleTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["asset".to_string(), "nominal".to_string()];
    header.extend(table.rows.iter().map(row_label));
    w.write_record(&header)?;
    for (i, asset) in table.asset_labels.iter().enumerate() {
        let mut rec = vec![asset.clone(), table.nominal.weights()[i].to_string()];
        rec.extend(table.robust.iter().map(|x| x.weights()[i].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Long format: asset, portfolio, covariance used, contribution.
pub fn write_contributions_csv<W: Write>(table: &InsampleTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["asset", "portfolio", "covariance", "contribution"])?;
    let mut emit = |portfolio: &str, covariance: &str, x: &Portfolio, s: &DMatrix<f64>| -> Result<()> {
        let rc = risk_contributions(x, s)?;
        for (asset, v) in table.asset_labels.iter().zip(rc.contributions.iter()) {
            w.write_record([asset.as_str(), portfolio, covariance, &v.to_string()])?;
        }
        Ok(())
    };
    emit("nominal", "nominal", &table.nominal, &table.sigma_nominal)?;
    for ((r, x), wc) in table.rows.iter().zip(&table.robust).zip(&table.sigma_worst) {
        let label = row_label(r);
        emit(&label, "nominal", x, &table.sigma_nominal)?;
        emit("nominal", &label, &table.nominal, wc)?;
        emit(&label, &label, x, wc)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_synthetic;

    #[test]
    fn parity_holds_under_own_covariance() {
        let data = generate_synthetic(6, 120, 3).unwrap();
        let table = run_insample(&data, &[0.0, 0.3], &DistanceMeasure::AMBIGUITY, &SolverConfig::default()).unwrap();
        assert_eq!(table.rows.len(), 6);
        for r in &table.rows {
            assert!(r.cv_nominal_nom <= 1e-8);
            assert!(r.cv_robust_wc <= 1e-6);
            if r.omega == 0.0 {
                assert!((r.var_robust_nom - r.var_nominal_nom).abs() <= 1e-12 * r.var_nominal_nom);
                assert!((r.var_robust_wc - r.var_nominal_wc).abs() <= 1e-12 * r.var_nominal_wc);
            }
        }
        let mut buf = Vec::new();
        write_insample_csv(&table, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 7);
        let mut buf = Vec::new();
        write_weights_csv(&table, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 7);
        let mut buf = Vec::new();
        write_contributions_csv(&table, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 6 * (1 + 3 * 6));
    }
}
