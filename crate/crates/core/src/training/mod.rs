//! Training regimes (local, global, simulation pretraining, fine-tuning),
//! early stopping and ensembles.

mod config;
mod ensemble;
mod fit;
mod prepare;
mod regimes;

pub use config::{TrainConfig, TrainHistory};
pub use ensemble::{evaluate, evaluate_basin, predict_ensemble, train_ensemble};
pub use fit::{fit, median_pooled_nse, median_windowed_nse, predict_set, FitOutcome};
pub use prepare::{prepare_basin, BasinData, Part, Target, WindowSet};
pub use regimes::{finetune, pretrain_sim, train_global, train_local, TrainedModel};
