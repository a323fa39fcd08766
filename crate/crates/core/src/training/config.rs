use std::path::Path;

use crate::error::{Error, Result};

/// Optimization settings shared by every training regime.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    /// Global gradient-norm cap applied before every step.
    pub grad_clip: f64,
    /// LSTM-AR only: feed observed responses over the horizon in training.
    pub teacher_forcing: bool,
    /// Stride between consecutive training windows.
    pub train_stride: usize,
    /// Stride between consecutive validation windows.
    pub val_stride: usize,
    /// Stop as soon as the training windowed NSE reaches this value.
    pub target_train_nse: Option<f64>,
    /// Fine-tuning starts with fresh Adam moments.
    pub fresh_adam: bool,
    /// Stop after the first epoch that ends past this many seconds.
    pub max_seconds: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.001,
            batch_size: 64,
            max_epochs: 200,
            patience: 20,
            seed: 0,
            grad_clip: 1.0,
            teacher_forcing: false,
            train_stride: 1,
            val_stride: 1,
            target_train_nse: None,
            fresh_adam: true,
            max_seconds: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig(format!("lr must be positive, got {}", self.lr)));
        }
        if self.batch_size == 0 || self.patience == 0 || self.train_stride == 0 || self.val_stride == 0 {
            return Err(Error::InvalidConfig("batch_size, patience, train_stride and val_stride must be >= 1".into()));
        }
        if !(self.grad_clip > 0.0) {
            return Err(Error::InvalidConfig(format!("grad_clip must be positive, got {}", self.grad_clip)));
        }
        Ok(())
    }
}

/// Per-epoch record of a training run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    /// Median per-basin validation NSE (or −MSE when NSE is undefined).
    pub val_score: Vec<f64>,
    /// Training windowed NSE, when tracked.
    pub train_nse: Vec<Option<f64>>,
    pub wall_seconds: Vec<f64>,
    pub best_epoch: Option<usize>,
}

impl TrainHistory {
    pub fn epochs(&self) -> usize {
        self.train_loss.len()
    }

    /// Equality ignoring wall-clock times.
    pub fn same_trajectory(&self, other: &TrainHistory) -> bool {
        self.train_loss == other.train_loss
            && self.val_score == other.val_score
            && self.train_nse == other.train_nse
            && self.best_epoch == other.best_epoch
    }

    /// `epoch,train_loss,val_score,train_nse[,wall_seconds],best`
    pub fn write_csv(&self, path: &Path, with_time: bool) -> Result<()> {
        let io = |e: csv::Error| Error::Io(e.into());
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        let mut header = vec!["epoch", "train_loss", "val_score", "train_nse"];
        if with_time {
            header.push("wall_seconds");
        }
        header.push("best");
        w.write_record(&header).map_err(io)?;
        for e in 0..self.epochs() {
            let mut rec = vec![
                e.to_string(),
                self.train_loss[e].to_string(),
                self.val_score[e].to_string(),
                self.train_nse[e].map(|v| v.to_string()).unwrap_or_default(),
            ];
            if with_time {
                rec.push(format!("{:.3}", self.wall_seconds[e]));
            }
            rec.push(u8::from(self.best_epoch == Some(e)).to_string());
            w.write_record(&rec).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}
