use std::ops::Range;

use chrono::NaiveDateTime;

use crate::data::series::BasinSeries;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// One sample: `t_in` history steps followed by `k` forecast steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub x_hist: Matrix,
    pub y_hist: Vec<f64>,
    pub x_fcst: Matrix,
    pub y_fcst: Vec<f64>,
    pub basin: usize,
    /// Timestamp of the first history step.
    pub t_start: NaiveDateTime,
    /// Series row of the first forecast step.
    pub origin: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub t_in: usize,
    pub k: usize,
    pub stride: usize,
}

impl WindowSpec {
    pub fn new(t_in: usize, k: usize, stride: usize) -> Result<Self> {
        if t_in == 0 || k == 0 || stride == 0 {
            return Err(Error::InvalidConfig(format!("window spec needs positive t_in, k, stride (got {t_in}, {k}, {stride})")));
        }
        Ok(WindowSpec { t_in, k, stride })
    }

    pub fn span(&self) -> usize {
        self.t_in + self.k
    }

    /// Windows over a series of `len` rows: ⌊(len − (t_in+k)) / stride⌋ + 1.
    pub fn count(&self, len: usize) -> usize {
        if len < self.span() {
            0
        } else {
            (len - self.span()) / self.stride + 1
        }
    }
}

/// Sliding windows over the whole series, earliest first.
pub fn make_windows(series: &BasinSeries, spec: WindowSpec) -> Result<Vec<Window>> {
    if series.len() < spec.span() {
        return Err(Error::Data(format!(
            "basin {}: series of {} rows is shorter than one window ({} + {})",
            series.basin_id,
            series.len(),
            spec.t_in,
            spec.k
        )));
    }
    make_windows_in(series, spec, spec.t_in..series.len(), 0, 0)
}

/// Windows whose forecast rows all lie in `targets` and whose history
/// starts at or after `floor`. `basin` is recorded on each window.
pub fn make_windows_in(
    series: &BasinSeries,
    spec: WindowSpec,
    targets: Range<usize>,
    floor: usize,
    basin: usize,
) -> Result<Vec<Window>> {
    if targets.end > series.len() {
        return Err(Error::Data(format!("basin {}: target range beyond series end", series.basin_id)));
    }
    let first = targets.start.max(floor + spec.t_in);
    let mut out = Vec::new();
    let mut origin = first;
    while origin + spec.k <= targets.end {
        out.push(window_at(series, spec, origin, basin)?);
        origin += spec.stride;
    }
    Ok(out)
}

/// The window whose first forecast step is row `origin`.
pub fn window_at(series: &BasinSeries, spec: WindowSpec, origin: usize, basin: usize) -> Result<Window> {
    if origin < spec.t_in || origin + spec.k > series.len() {
        return Err(Error::Data(format!("basin {}: no room for a window at row {origin}", series.basin_id)));
    }
    let d = series.d_x();
    let rows = |a: usize, b: usize| Matrix::from_vec(b - a, d, series.drivers.as_slice()[a * d..b * d].to_vec());
    let h0 = origin - spec.t_in;
    Ok(Window {
        x_hist: rows(h0, origin)?,
        y_hist: series.response[h0..origin].to_vec(),
        x_fcst: rows(origin, origin + spec.k)?,
        y_fcst: series.response[origin..origin + spec.k].to_vec(),
        basin,
        t_start: series.timestamps[h0],
        origin,
    })
}

/// Unit vector `e_i` of length `n`.
pub fn one_hot_basin(i: usize, n: usize) -> Result<Vec<f64>> {
    if i >= n {
        return Err(Error::InvalidConfig(format!("basin index {i} out of range for {n} basins")));
    }
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    Ok(v)
}

/// Copy of the series with basin `i`'s one-hot code appended to every row.
pub fn append_one_hot(series: &BasinSeries, i: usize, n: usize) -> Result<BasinSeries> {
    let code = one_hot_basin(i, n)?;
    let d = series.d_x();
    let mut data = Vec::with_capacity(series.len() * (d + n));
    for r in 0..series.len() {
        data.extend_from_slice(series.drivers.row(r));
        data.extend_from_slice(&code);
    }
    let mut out = series.clone();
    out.drivers = Matrix::from_vec(series.len(), d + n, data)?;
    out.driver_names.extend((0..n).map(|j| format!("basin_{j}")));
    Ok(out)
}
