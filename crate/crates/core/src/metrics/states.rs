use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{LatentState, Trajectory};

/// One exported row: scale, step within the scale, original history index
/// and the mean over hidden dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct StateRow {
    pub scale: &'static str,
    pub step_index: usize,
    pub original_time_index: usize,
    pub mean_hidden_value: f64,
}

pub fn state_rows(state: &LatentState) -> Result<Vec<StateRow>> {
    if state.fast.is_empty() {
        return Err(Error::EmptySequence("export_states"));
    }
    let mut rows = Vec::new();
    let scales: [(&'static str, &Trajectory); 3] = [("fast", &state.fast), ("medium", &state.medium), ("slow", &state.slow)];
    for (scale, traj) in scales {
        for (step_index, (&t, m)) in traj.indices.iter().zip(traj.step_means()).enumerate() {
            rows.push(StateRow { scale, step_index, original_time_index: t, mean_hidden_value: m });
        }
    }
    Ok(rows)
}

/// Writes `scale,step_index,original_time_index,mean_hidden_value`.
pub fn export_states(state: &LatentState, path: &Path) -> Result<()> {
    let rows = state_rows(state)?;
    let io = |e: csv::Error| Error::Io(e.into());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["scale", "step_index", "original_time_index", "mean_hidden_value"]).map_err(io)?;
    for r in rows {
        w.write_record([
            r.scale.to_string(),
            r.step_index.to_string(),
            r.original_time_index.to_string(),
            r.mean_hidden_value.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
