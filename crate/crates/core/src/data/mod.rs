//! Basin time series: CSV ingestion, splits, normalization and windows.

mod manifest;
mod norm;
mod series;
mod split;
mod window;

pub use manifest::DatasetManifest;
pub use norm::{apply_norm, fit_norm, invert_norm, NormStats};
pub use series::{format_timestamp, ingest_csv, parse_timestamp, write_csv, BasinSeries};
pub use split::{SplitRanges, SplitSpec};
pub use window::{append_one_hot, make_windows, make_windows_in, one_hot_basin, window_at, Window, WindowSpec};
