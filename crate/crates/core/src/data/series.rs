use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, TimeDelta};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// One basin's aligned driver and response series on a uniform time step.
#[derive(Debug, Clone, PartialEq)]
pub struct BasinSeries {
    pub basin_id: String,
    pub timestamps: Vec<NaiveDateTime>,
    pub driver_names: Vec<String>,
    /// `len x d_x`
    pub drivers: Matrix,
    pub response: Vec<f64>,
    pub sim_response: Option<Vec<f64>>,
}

impl BasinSeries {
    pub fn new(
        basin_id: impl Into<String>,
        timestamps: Vec<NaiveDateTime>,
        driver_names: Vec<String>,
        drivers: Matrix,
        response: Vec<f64>,
        sim_response: Option<Vec<f64>>,
    ) -> Result<Self> {
        let s = BasinSeries { basin_id: basin_id.into(), timestamps, driver_names, drivers, response, sim_response };
        s.validate()?;
        Ok(s)
    }

    /// Series on a regular grid starting at `start`.
    pub fn regular(
        basin_id: impl Into<String>,
        start: NaiveDateTime,
        step: TimeDelta,
        driver_names: Vec<String>,
        drivers: Matrix,
        response: Vec<f64>,
        sim_response: Option<Vec<f64>>,
    ) -> Result<Self> {
        let timestamps = (0..drivers.rows()).map(|i| start + step * i as i32).collect();
        BasinSeries::new(basin_id, timestamps, driver_names, drivers, response, sim_response)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.timestamps.len();
        if n == 0 {
            return Err(Error::Data(format!("basin {}: empty series", self.basin_id)));
        }
        if self.drivers.rows() != n || self.response.len() != n {
            return Err(Error::Data(format!(
                "basin {}: {} timestamps, {} driver rows, {} responses",
                self.basin_id,
                n,
                self.drivers.rows(),
                self.response.len()
            )));
        }
        if self.driver_names.len() != self.drivers.cols() {
            return Err(Error::Data(format!("basin {}: driver names do not match columns", self.basin_id)));
        }
        if let Some(sim) = &self.sim_response {
            if sim.len() != n {
                return Err(Error::Data(format!("basin {}: sim_flow length {} != {}", self.basin_id, sim.len(), n)));
            }
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !self.drivers.is_finite() || !finite(&self.response) || !self.sim_response.as_deref().is_none_or(finite) {
            return Err(Error::Data(format!("basin {}: missing or non-finite values", self.basin_id)));
        }
        if n > 1 {
            let step = self.timestamps[1] - self.timestamps[0];
            if step <= TimeDelta::zero() {
                return Err(Error::Data(format!("basin {}: timestamps not increasing", self.basin_id)));
            }
            if let Some(i) = (2..n).find(|&i| self.timestamps[i] - self.timestamps[i - 1] != step) {
                return Err(Error::Data(format!(
                    "basin {}: non-uniform time step at index {i} ({})",
                    self.basin_id, self.timestamps[i]
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn d_x(&self) -> usize {
        self.drivers.cols()
    }

    /// Time step, or `None` for a single-row series.
    pub fn step(&self) -> Option<TimeDelta> {
        (self.len() > 1).then(|| self.timestamps[1] - self.timestamps[0])
    }

    /// Number of rows with timestamp at or before `t`.
    pub fn rows_through(&self, t: NaiveDateTime) -> usize {
        self.timestamps.partition_point(|&ts| ts <= t)
    }

    /// Rows `start..end` as a new series.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::Data(format!("basin {}: bad slice {start}..{end} of {}", self.basin_id, self.len())));
        }
        let d = self.d_x();
        let drivers = Matrix::from_vec(end - start, d, self.drivers.as_slice()[start * d..end * d].to_vec())?;
        Ok(BasinSeries {
            basin_id: self.basin_id.clone(),
            timestamps: self.timestamps[start..end].to_vec(),
            driver_names: self.driver_names.clone(),
            drivers,
            response: self.response[start..end].to_vec(),
            sim_response: self.sim_response.as_ref().map(|s| s[start..end].to_vec()),
        })
    }

    /// Copy whose response is the simulated one.
    pub fn with_sim_as_response(&self) -> Result<Self> {
        let sim = self
            .sim_response
            .clone()
            .ok_or_else(|| Error::Data(format!("basin {}: no sim_flow column", self.basin_id)))?;
        let mut out = self.clone();
        out.response = sim;
        Ok(out)
    }
}

pub fn format_timestamp(t: NaiveDateTime) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}

/// Parses ISO-8601 date-times (`T` or space separated, optional seconds)
/// or plain dates.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t);
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().and_then(|d| d.and_hms_opt(0, 0, 0))
}

/// Reads `timestamp,<drivers...>,flow[,sim_flow]`. Row numbers in errors
/// are file line numbers (the header is line 1).
pub fn ingest_csv(path: &Path) -> Result<BasinSeries> {
    let csv_err = |row: usize, msg: String| Error::Csv { path: path.to_path_buf(), row, msg };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(1, e.to_string()))?;
    let header: Vec<String> = reader.headers().map_err(|e| csv_err(1, e.to_string()))?.iter().map(String::from).collect();
    if header.first().map(String::as_str) != Some("timestamp") {
        return Err(csv_err(1, "first column must be `timestamp`".into()));
    }
    let has_sim = header.last().map(String::as_str) == Some("sim_flow");
    let flow_col = header.len() - 1 - usize::from(has_sim);
    if flow_col < 1 || header[flow_col] != "flow" {
        return Err(csv_err(1, "missing `flow` column".into()));
    }
    let driver_names: Vec<String> = header[1..flow_col].to_vec();
    let d_x = driver_names.len();

    let mut timestamps = Vec::new();
    let mut drivers = Vec::new();
    let mut response = Vec::new();
    let mut sim = Vec::new();
    let mut step = None;
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| csv_err(row, e.to_string()))?;
        if rec.len() != header.len() {
            return Err(csv_err(row, format!("expected {} fields, found {}", header.len(), rec.len())));
        }
        let t = parse_timestamp(&rec[0]).ok_or_else(|| csv_err(row, format!("bad timestamp `{}`", &rec[0])))?;
        if let Some(&prev) = timestamps.last() {
            let dt = t - prev;
            match step {
                None if dt > TimeDelta::zero() => step = Some(dt),
                Some(s) if s == dt => {}
                _ => return Err(csv_err(row, format!("non-uniform time step at {}", &rec[0]))),
            }
        }
        timestamps.push(t);
        let num = |j: usize| -> Result<f64> {
            let v: f64 = rec[j].parse().map_err(|_| csv_err(row, format!("non-numeric `{}` in `{}`", &rec[j], header[j])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(csv_err(row, format!("missing value in `{}`", header[j])))
            }
        };
        for j in 1..=d_x {
            drivers.push(num(j)?);
        }
        response.push(num(flow_col)?);
        if has_sim {
            sim.push(num(flow_col + 1)?);
        }
    }
    if timestamps.is_empty() {
        return Err(csv_err(2, "no data rows".into()));
    }
    let basin_id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let drivers = Matrix::from_vec(timestamps.len(), d_x, drivers)?;
    BasinSeries::new(basin_id, timestamps, driver_names, drivers, response, has_sim.then_some(sim))
}

/// Writes the series in the format read by [`ingest_csv`]. Values use the
/// shortest representation that parses back to the same bits.
pub fn write_csv(series: &BasinSeries, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.into()))?;
    let mut header = vec!["timestamp".to_string()];
    header.extend(series.driver_names.iter().cloned());
    header.push("flow".into());
    if series.sim_response.is_some() {
        header.push("sim_flow".into());
    }
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(&header).map_err(io)?;
    let mut rec = Vec::with_capacity(header.len());
    for i in 0..series.len() {
        rec.clear();
        rec.push(format_timestamp(series.timestamps[i]));
        rec.extend(series.drivers.row(i).iter().map(|v| v.to_string()));
        rec.push(series.response[i].to_string());
        if let Some(sim) = &series.sim_response {
            rec.push(sim[i].to_string());
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
