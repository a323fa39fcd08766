use crate::data::{
    append_one_hot, apply_norm, fit_norm, make_windows_in, BasinSeries, NormStats, SplitRanges, SplitSpec, Window,
    WindowSpec,
};
use crate::error::Result;

/// Which response a model is trained against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Observed,
    Simulated,
}

/// A basin normalized (and optionally one-hot tagged) for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct BasinData {
    pub basin_id: String,
    /// Position of the basin in its fleet; recorded on every window.
    pub index: usize,
    pub stats: NormStats,
    pub series: BasinSeries,
    pub ranges: SplitRanges,
}

/// Normalizes `raw` with `stats`, or with statistics fitted on every row a
/// training window may touch. With `onehot = Some((i, n))` the basin code
/// is appended after normalization.
pub fn prepare_basin(
    raw: &BasinSeries,
    index: usize,
    split: &SplitSpec,
    stats: Option<&NormStats>,
    onehot: Option<(usize, usize)>,
    target: Target,
) -> Result<BasinData> {
    let source = match target {
        Target::Observed => raw.clone(),
        Target::Simulated => raw.with_sim_as_response()?,
    };
    let ranges = split.ranges(&source)?;
    let stats = match stats {
        Some(s) => s.clone(),
        None => fit_norm(&source, ranges.floor..ranges.train.end)?,
    };
    let mut series = apply_norm(&source, &stats)?;
    if let Some((i, n)) = onehot {
        series = append_one_hot(&series, i, n)?;
    }
    Ok(BasinData { basin_id: raw.basin_id.clone(), index, stats, series, ranges })
}

/// Windows of one basin with the statistics needed to score them in
/// physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    pub basin_id: String,
    pub windows: Vec<Window>,
    pub stats: NormStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Train,
    Val,
    Test,
}

impl BasinData {
    pub fn windows(&self, spec: WindowSpec, part: Part) -> Result<WindowSet> {
        let r = &self.ranges;
        let (targets, floor) = match part {
            Part::Train => (r.train.clone(), r.floor),
            Part::Val => (r.val.clone(), r.floor),
            Part::Test => (r.test.clone(), r.floor),
        };
        Ok(WindowSet {
            basin_id: self.basin_id.clone(),
            windows: make_windows_in(&self.series, spec, targets, floor, self.index)?,
            stats: self.stats.clone(),
        })
    }
}
