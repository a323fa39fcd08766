use std::ops::Range;

use crate::data::BasinSeries;
use crate::error::{Error, Result};

/// Nash–Sutcliffe efficiency `1 − Σ(ŷ−y)² / Σ(y−ȳ)²`.
pub fn nse(y_obs: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y_obs.len() != y_hat.len() {
        return Err(Error::shape("nse", (y_obs.len(), 1), (y_hat.len(), 1)));
    }
    if y_obs.len() < 2 {
        return Err(Error::UndefinedNse);
    }
    let mean = y_obs.iter().sum::<f64>() / y_obs.len() as f64;
    let den: f64 = y_obs.iter().map(|y| (y - mean) * (y - mean)).sum();
    if den == 0.0 || !den.is_finite() {
        return Err(Error::UndefinedNse);
    }
    let num: f64 = y_obs.iter().zip(y_hat).map(|(y, p)| (p - y) * (p - y)).sum();
    let v = 1.0 - num / den;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite("nse".into()))
    }
}

/// Window-averaged NSE with the count of windows skipped for constant
/// observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowedNse {
    pub mean: f64,
    pub n_scored: usize,
    pub n_skipped: usize,
}

pub fn windowed_nse(obs: &[Vec<f64>], preds: &[Vec<f64>]) -> Result<WindowedNse> {
    if obs.len() != preds.len() {
        return Err(Error::shape("windowed_nse", (obs.len(), 1), (preds.len(), 1)));
    }
    let mut sum = 0.0;
    let mut n_scored = 0;
    let mut n_skipped = 0;
    for (o, p) in obs.iter().zip(preds) {
        match nse(o, p) {
            Ok(v) => {
                sum += v;
                n_scored += 1;
            }
            Err(Error::UndefinedNse) => n_skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if n_scored == 0 {
        return Err(Error::UndefinedNse);
    }
    Ok(WindowedNse { mean: sum / n_scored as f64, n_scored, n_skipped })
}

/// NSE over all window steps concatenated.
pub fn pooled_nse(obs: &[Vec<f64>], preds: &[Vec<f64>]) -> Result<f64> {
    if obs.len() != preds.len() {
        return Err(Error::shape("pooled_nse", (obs.len(), 1), (preds.len(), 1)));
    }
    let o: Vec<f64> = obs.iter().flatten().copied().collect();
    let p: Vec<f64> = preds.iter().flatten().copied().collect();
    nse(&o, &p)
}

/// `Σ flow / Σ precip` over rows `range`; precipitation is the driver
/// column named `precip`.
pub fn runoff_ratio(series: &BasinSeries, range: Range<usize>) -> Result<f64> {
    let col = series
        .driver_names
        .iter()
        .position(|n| n == "precip")
        .ok_or_else(|| Error::Data(format!("basin {}: no `precip` column", series.basin_id)))?;
    if range.end > series.len() {
        return Err(Error::Data(format!("basin {}: range beyond series", series.basin_id)));
    }
    let p: f64 = range.clone().map(|i| series.drivers.get(i, col)).sum();
    if p <= 0.0 {
        return Err(Error::Data(format!("basin {}: zero precipitation over range", series.basin_id)));
    }
    let q: f64 = series.response[range].iter().sum();
    Ok(q / p)
}
