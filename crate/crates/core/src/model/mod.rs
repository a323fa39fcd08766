//! Forecasting models.

pub mod config;
pub mod downsample;
mod forecaster;

pub use config::{ModelConfig, ModelKind};
pub use downsample::{downsample, downsample_indices, downsampled_len};
pub use forecaster::{mse, Forecaster, LatentState, Trajectory};
