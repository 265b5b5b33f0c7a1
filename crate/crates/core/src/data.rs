//! Return panels: CSV ingestion and seeded synthetic generation.

use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{DrrpError, Result};
use crate::scenario::ScenarioMatrix;

/// Reads a panel whose header names the assets and whose first column holds
/// period labels. Rows are periods.
pub fn load_returns_csv(path: impl AsRef<Path>) -> Result<ScenarioMatrix> {
    let file = std::fs::File::open(path.as_ref())?;
    read_returns_csv(file)
}

pub fn read_returns_csv<R: Read>(reader: R) -> Result<ScenarioMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 3 {
        return Err(DrrpError::invalid(format!(
            "need a period column and at least 2 asset columns, found {} columns",
            header.len()
        )));
    }
    let assets: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let n = assets.len();

    let mut periods = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record?;
        // header is row 1
        let row = idx + 2;
        if record.len() != n + 1 {
            return Err(DrrpError::Parse {
                row,
                column: record.len().min(n + 1),
                message: format!("expected {} fields, found {}", n + 1, record.len()),
            });
        }
        periods.push(record[0].to_string());
        for (j, cell) in record.iter().skip(1).enumerate() {
            let column = j + 2;
            if cell.is_empty() {
                return Err(DrrpError::Parse {
                    row,
                    column,
                    message: format!("empty cell for asset '{}'", assets[j]),
                });
            }
            let v: f64 = cell.parse().map_err(|_| DrrpError::Parse {
                row,
                column,
                message: format!("'{cell}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(DrrpError::Parse {
                    row,
                    column,
                    message: format!("non-finite value '{cell}'"),
                });
            }
            values.push(v);
        }
    }
    let t = periods.len();
    if t < 2 {
        return Err(DrrpError::invalid(format!(
            "insufficient rows: need at least 2 periods, found {t}"
        )));
    }
    // values is period-major; the panel is assets by periods
    let returns = DMatrix::from_row_slice(t, n, &values).transpose();
    ScenarioMatrix::new(returns)?
        .with_asset_labels(assets)?
        .with_period_labels(periods)
}

/// Writes a panel in the layout [`read_returns_csv`] expects.
pub fn write_returns_csv<W: std::io::Write>(data: &ScenarioMatrix, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let n = data.n_assets();
    let mut header = vec!["period".to_string()];
    match data.asset_labels() {
        Some(l) => header.extend(l.iter().cloned()),
        None => header.extend((0..n).map(|i| format!("asset{i}"))),
    }
    w.write_record(&header)?;
    for t in 0..data.n_scenarios() {
        let label = data
            .period_labels()
            .map_or_else(|| t.to_string(), |l| l[t].clone());
        let mut rec = vec![label];
        rec.extend((0..n).map(|i| format!("{:e}", data.returns()[(i, t)])));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// I.i.d. zero-mean Gaussian returns, each asset with its own volatility
/// drawn from `U[1%, 5%]` per period.
pub fn generate_synthetic(n: usize, t: usize, seed: u64) -> Result<ScenarioMatrix> {
    if n < 2 || t < 2 {
        return Err(DrrpError::invalid(format!(
            "synthetic panel needs n >= 2 and T >= 2, got n={n}, T={t}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vols: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..0.05)).collect();
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    // draw period by period so prefixes of T agree across panel lengths
    let mut returns = DMatrix::zeros(n, t);
    for j in 0..t {
        for i in 0..n {
            returns[(i, j)] = vols[i] * std_normal.sample(&mut rng);
        }
    }
    ScenarioMatrix::new(returns)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_well_formed_panel() {
        let text = "date,A,B\n2020-01,0.01,-0.02\n2020-02,0.03,0.00\n2020-03,-0.01,0.02\n";
        let m = read_returns_csv(text.as_bytes()).unwrap();
        assert_eq!((m.n_assets(), m.n_scenarios()), (2, 3));
        assert_eq!(m.returns()[(1, 0)], -0.02);
        assert_eq!(m.returns()[(0, 2)], -0.01);
        assert_eq!(m.asset_labels().unwrap(), &["A".to_string(), "B".to_string()]);
    }

    #[test]
    fn blank_cell_names_location() {
        let text = "date,A,B\n1,0.01,0.02\n2,,0.01\n";
        match read_returns_csv(text.as_bytes()).unwrap_err() {
            DrrpError::Parse { row, column, .. } => assert_eq!((row, column), (3, 2)),
            other => panic!("unexpected {other}"),
        }
        let text = "date,A,B\n1,0.01,abc\n2,0.0,0.01\n";
        assert!(matches!(read_returns_csv(text.as_bytes()), Err(DrrpError::Parse { row: 2, column: 3, .. })));
        let text = "date,A,B\n1,0.01,NaN\n2,0.0,0.01\n";
        assert!(read_returns_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn header_only_is_insufficient() {
        let err = read_returns_csv("date,A,B\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("insufficient rows"));
        assert!(read_returns_csv("date,A\n1,0.1\n2,0.2\n".as_bytes()).is_err());
    }

    #[test]
    fn round_trips_through_writer() {
        let data = generate_synthetic(3, 5, 1).unwrap();
        let mut buf = Vec::new();
        write_returns_csv(&data, &mut buf).unwrap();
        let back = read_returns_csv(buf.as_slice()).unwrap();
        assert_eq!(back.returns(), data.returns());
    }

    #[test]
    fn synthetic_is_seeded() {
        let a = generate_synthetic(4, 50, 9).unwrap();
        let b = generate_synthetic(4, 50, 9).unwrap();
        let c = generate_synthetic(4, 50, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let sd: Vec<f64> = (0..4)
            .map(|i| {
                let row = a.returns().row(i);
                (row.map(|v| v * v).mean()).sqrt()
            })
            .collect();
        assert!(sd.iter().all(|s| *s > 0.003 && *s < 0.1));
        assert!(generate_synthetic(1, 10, 0).is_err());
    }
}
