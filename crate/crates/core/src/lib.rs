//! Factorized hierarchical recurrent forecasting of a scalar response from
//! exogenous drivers.
//!
//! The encoder reads driver/response history at three resolutions (fast,
//! medium, slow), fuses the per-scale embeddings into a latent state, and a
//! decoder LSTM initialised from that state rolls the forecast forward over
//! the forecast drivers. LSTM and autoregressive LSTM baselines share the
//! same interface.

pub mod config;
pub mod data;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod recurrent;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};
