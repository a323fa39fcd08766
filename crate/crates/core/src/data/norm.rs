use std::ops::Range;

use crate::data::series::BasinSeries;
use crate::error::{Error, Result};

/// Per-feature z-score statistics. Constant features are flagged and
/// passed through unchanged (mean 0, std 1).
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub x_mean: Vec<f64>,
    pub x_std: Vec<f64>,
    pub x_constant: Vec<bool>,
    pub y_mean: f64,
    pub y_std: f64,
    pub y_constant: bool,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, bool) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std > 1e-12 * mean.abs().max(1.0) {
        (mean, std, false)
    } else {
        (0.0, 1.0, true)
    }
}

/// Fits statistics on rows `range` of the series.
pub fn fit_norm(series: &BasinSeries, range: Range<usize>) -> Result<NormStats> {
    if range.is_empty() || range.end > series.len() {
        return Err(Error::Data(format!("basin {}: empty normalization range", series.basin_id)));
    }
    let d = series.d_x();
    let mut x_mean = Vec::with_capacity(d);
    let mut x_std = Vec::with_capacity(d);
    let mut x_constant = Vec::with_capacity(d);
    for j in 0..d {
        let (m, s, c) = mean_std(range.clone().map(|i| series.drivers.get(i, j)));
        x_mean.push(m);
        x_std.push(s);
        x_constant.push(c);
    }
    let (y_mean, y_std, y_constant) = mean_std(series.response[range].iter().copied());
    Ok(NormStats { x_mean, x_std, x_constant, y_mean, y_std, y_constant })
}

impl NormStats {
    pub fn d_x(&self) -> usize {
        self.x_mean.len()
    }

    pub fn normalize_y(&self, y: f64) -> f64 {
        (y - self.y_mean) / self.y_std
    }

    pub fn denormalize_y(&self, y: f64) -> f64 {
        y * self.y_std + self.y_mean
    }

    /// `key=value` records; floats use round-trip formatting.
    pub fn to_records(&self) -> Vec<(String, String)> {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let flags = |v: &[bool]| v.iter().map(|&b| if b { "1" } else { "0" }).collect::<Vec<_>>().join(",");
        vec![
            ("norm.x_mean".into(), join(&self.x_mean)),
            ("norm.x_std".into(), join(&self.x_std)),
            ("norm.x_constant".into(), flags(&self.x_constant)),
            ("norm.y_mean".into(), self.y_mean.to_string()),
            ("norm.y_std".into(), self.y_std.to_string()),
            ("norm.y_constant".into(), flags(&[self.y_constant])),
        ]
    }

    pub fn from_records(records: &[(String, String)]) -> Result<Self> {
        let get = |key: &str| -> Result<&str> {
            records
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::Checkpoint(format!("missing `{key}`")))
        };
        let bad = |key: &str| Error::Checkpoint(format!("bad value for `{key}`"));
        let floats = |key: &str| -> Result<Vec<f64>> {
            let s = get(key)?;
            if s.is_empty() {
                return Ok(vec![]);
            }
            s.split(',').map(|t| t.parse().map_err(|_| bad(key))).collect()
        };
        let flags = |key: &str| -> Result<Vec<bool>> {
            let s = get(key)?;
            if s.is_empty() {
                return Ok(vec![]);
            }
            s.split(',')
                .map(|t| match t {
                    "1" => Ok(true),
                    "0" => Ok(false),
                    _ => Err(bad(key)),
                })
                .collect()
        };
        let scalar = |key: &str| -> Result<f64> { get(key)?.parse().map_err(|_| bad(key)) };
        let stats = NormStats {
            x_mean: floats("norm.x_mean")?,
            x_std: floats("norm.x_std")?,
            x_constant: flags("norm.x_constant")?,
            y_mean: scalar("norm.y_mean")?,
            y_std: scalar("norm.y_std")?,
            y_constant: flags("norm.y_constant")?.first().copied().ok_or_else(|| bad("norm.y_constant"))?,
        };
        if stats.x_std.len() != stats.d_x() || stats.x_constant.len() != stats.d_x() {
            return Err(Error::Checkpoint("inconsistent normalization record lengths".into()));
        }
        Ok(stats)
    }
}

/// Normalized copy of the series (drivers, response and sim response).
pub fn apply_norm(series: &BasinSeries, stats: &NormStats) -> Result<BasinSeries> {
    if series.d_x() != stats.d_x() {
        return Err(Error::Data(format!(
            "basin {}: {} driver columns but statistics for {}",
            series.basin_id,
            series.d_x(),
            stats.d_x()
        )));
    }
    let mut out = series.clone();
    let d = series.d_x();
    for (i, v) in out.drivers.as_mut_slice().iter_mut().enumerate() {
        let j = i % d;
        *v = (*v - stats.x_mean[j]) / stats.x_std[j];
    }
    out.response.iter_mut().for_each(|y| *y = stats.normalize_y(*y));
    if let Some(sim) = &mut out.sim_response {
        sim.iter_mut().for_each(|y| *y = stats.normalize_y(*y));
    }
    Ok(out)
}

/// Maps normalized responses back to physical units.
pub fn invert_norm(y: &[f64], stats: &NormStats) -> Vec<f64> {
    y.iter().map(|&v| stats.denormalize_y(v)).collect()
}
