use std::ops::Range;

use chrono::NaiveDateTime;

use crate::data::series::{format_timestamp, BasinSeries};
use crate::error::{Error, Result};

/// Chronological train/validation/test boundaries. A forecast step at time
/// `t` belongs to train if `t <= train_end`, to validation if
/// `train_end < t <= val_end`, and to test if `val_end < t <= test_end`.
/// `train_start`, when set, truncates the record: nothing earlier is used,
/// not even as history.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub train_start: Option<NaiveDateTime>,
    pub train_end: NaiveDateTime,
    pub val_end: NaiveDateTime,
    pub test_end: NaiveDateTime,
}

/// Row ranges of a split on one series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitRanges {
    /// First usable row.
    pub floor: usize,
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.train_start {
            if s >= self.train_end {
                return Err(Error::InvalidConfig("train_start must precede train_end".into()));
            }
        }
        if !(self.train_end < self.val_end && self.val_end < self.test_end) {
            return Err(Error::InvalidConfig(format!(
                "split dates must satisfy train_end < val_end < test_end, got {} / {} / {}",
                format_timestamp(self.train_end),
                format_timestamp(self.val_end),
                format_timestamp(self.test_end)
            )));
        }
        Ok(())
    }

    pub fn ranges(&self, series: &BasinSeries) -> Result<SplitRanges> {
        self.validate()?;
        let n = series.len();
        if self.test_end < series.timestamps[0] || self.test_end > series.timestamps[n - 1] {
            return Err(Error::Data(format!(
                "basin {}: test_end {} outside series range",
                series.basin_id,
                format_timestamp(self.test_end)
            )));
        }
        let floor = self.train_start.map_or(0, |s| series.timestamps.partition_point(|&t| t < s));
        let train_end = series.rows_through(self.train_end);
        let val_end = series.rows_through(self.val_end);
        let test_end = series.rows_through(self.test_end);
        Ok(SplitRanges { floor, train: floor..train_end, val: train_end..val_end, test: val_end..test_end })
    }
}
