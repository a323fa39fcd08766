use std::path::Path;

use crate::error::{Error, Result};

/// Scores for one basin at one forecast horizon. NSE fields are `None`
/// when undefined (every window had constant observations).
#[derive(Debug, Clone, PartialEq)]
pub struct BasinEval {
    pub basin_id: String,
    pub horizon: usize,
    pub n_windows: usize,
    pub n_skipped: usize,
    pub nse_windowed: Option<f64>,
    pub nse_pooled: Option<f64>,
    pub runoff_ratio: f64,
}

/// Aggregate over the basins of one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub horizon: usize,
    pub n_basins: usize,
    pub mean_windowed: f64,
    pub median_windowed: f64,
    pub mean_pooled: f64,
    pub median_pooled: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub basins: Vec<BasinEval>,
    pub aggregates: Vec<Aggregate>,
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Median; NaN for an empty slice.
pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Mean/median per horizon over basins with a defined NSE. Basin rows
/// are kept in input order; aggregates do not depend on it.
pub fn summarize(basins: Vec<BasinEval>) -> Result<EvalReport> {
    if basins.is_empty() {
        return Err(Error::Data("no basin results to summarize".into()));
    }
    let mut horizons: Vec<usize> = basins.iter().map(|b| b.horizon).collect();
    horizons.sort_unstable();
    horizons.dedup();
    let aggregates = horizons
        .into_iter()
        .map(|h| {
            let rows: Vec<&BasinEval> = basins.iter().filter(|b| b.horizon == h).collect();
            let w: Vec<f64> = rows.iter().filter_map(|b| b.nse_windowed).collect();
            let p: Vec<f64> = rows.iter().filter_map(|b| b.nse_pooled).collect();
            Aggregate {
                horizon: h,
                n_basins: w.len(),
                mean_windowed: mean(&w),
                median_windowed: median(&w),
                mean_pooled: mean(&p),
                median_pooled: median(&p),
            }
        })
        .collect();
    Ok(EvalReport { basins, aggregates })
}

const HEADER: [&str; 7] = ["basin_id", "horizon", "n_windows", "n_skipped", "nse_windowed", "nse_pooled", "runoff_ratio"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl EvalReport {
    pub fn aggregate(&self, horizon: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.horizon == horizon)
    }

    /// CSV with basin rows followed by `__mean__` and `__median__` rows
    /// per horizon.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: csv::Error| Error::Io(e.into());
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(HEADER).map_err(io)?;
        for b in &self.basins {
            w.write_record([
                b.basin_id.clone(),
                b.horizon.to_string(),
                b.n_windows.to_string(),
                b.n_skipped.to_string(),
                opt(b.nse_windowed),
                opt(b.nse_pooled),
                b.runoff_ratio.to_string(),
            ])
            .map_err(io)?;
        }
        for a in &self.aggregates {
            let rows: Vec<&BasinEval> = self.basins.iter().filter(|b| b.horizon == a.horizon).collect();
            let rr: Vec<f64> = rows.iter().map(|b| b.runoff_ratio).collect();
            let n_windows: usize = rows.iter().map(|b| b.n_windows).sum();
            let n_skipped: usize = rows.iter().map(|b| b.n_skipped).sum();
            for (label, wv, pv, r) in [
                ("__mean__", a.mean_windowed, a.mean_pooled, mean(&rr)),
                ("__median__", a.median_windowed, a.median_pooled, median(&rr)),
            ] {
                w.write_record([
                    label.to_string(),
                    a.horizon.to_string(),
                    n_windows.to_string(),
                    n_skipped.to_string(),
                    wv.to_string(),
                    pv.to_string(),
                    r.to_string(),
                ])
                .map_err(io)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a report written by [`EvalReport::write_csv`]; aggregates are
    /// recomputed from the basin rows.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let csv_err = |row: usize, msg: String| Error::Csv { path: path.to_path_buf(), row, msg };
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(1, e.to_string()))?;
        let header = r.headers().map_err(|e| csv_err(1, e.to_string()))?.clone();
        if header.iter().ne(HEADER) {
            return Err(csv_err(1, "unexpected report header".into()));
        }
        let mut basins = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let row = i + 2;
            let rec = rec.map_err(|e| csv_err(row, e.to_string()))?;
            if rec[0].starts_with("__") {
                continue;
            }
            let int = |j: usize| rec[j].parse::<usize>().map_err(|_| csv_err(row, format!("bad `{}`", HEADER[j])));
            let float = |j: usize| rec[j].parse::<f64>().map_err(|_| csv_err(row, format!("bad `{}`", HEADER[j])));
            let optf = |j: usize| if rec[j].is_empty() { Ok(None) } else { float(j).map(Some) };
            basins.push(BasinEval {
                basin_id: rec[0].to_string(),
                horizon: int(1)?,
                n_windows: int(2)?,
                n_skipped: int(3)?,
                nse_windowed: optf(4)?,
                nse_pooled: optf(5)?,
                runoff_ratio: float(6)?,
            });
        }
        summarize(basins)
    }
}
