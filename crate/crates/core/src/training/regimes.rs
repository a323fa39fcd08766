use crate::data::{BasinSeries, NormStats, SplitSpec, WindowSpec};
use crate::error::{Error, Result};
use crate::model::{Forecaster, ModelConfig};
use crate::numerics::{AdamState, Checkpoint};
use crate::training::config::{TrainConfig, TrainHistory};
use crate::training::fit::fit;
use crate::training::prepare::{prepare_basin, BasinData, Part, Target, WindowSet};

/// A trained forecaster with the normalization of every basin it knows.
/// Local models know one basin; global models index basins by position,
/// which is also their one-hot code.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: Forecaster,
    pub basins: Vec<(String, NormStats)>,
    pub global: bool,
    pub history: TrainHistory,
    /// Optimizer state at the end of training (not persisted).
    pub adam: Option<AdamState>,
}

impl TrainedModel {
    pub fn window_spec(&self, stride: usize) -> Result<WindowSpec> {
        let c = self.model.config();
        WindowSpec::new(c.t_in, c.k, stride)
    }

    /// Position of `basin_id`, falling back to the only basin of a local model.
    pub fn basin_index(&self, basin_id: &str) -> Result<usize> {
        match self.basins.iter().position(|(id, _)| id == basin_id) {
            Some(i) => Ok(i),
            None if !self.global => Ok(0),
            None => Err(Error::Data(format!("basin {basin_id} is not part of this global model"))),
        }
    }

    /// Prepares `raw` with this model's statistics and basin code.
    pub fn prepare(&self, raw: &BasinSeries, split: &SplitSpec, target: Target) -> Result<BasinData> {
        let i = self.basin_index(&raw.basin_id)?;
        let onehot = self.global.then_some((i, self.basins.len()));
        prepare_basin(raw, i, split, Some(&self.basins[i].1), onehot, target)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut extra = vec![
            ("global".to_string(), self.global.to_string()),
            ("basins".to_string(), self.basins.len().to_string()),
        ];
        for (i, (id, stats)) in self.basins.iter().enumerate() {
            extra.push((format!("basin.{i}.id"), id.clone()));
            extra.extend(stats.to_records().into_iter().map(|(k, v)| (format!("basin.{i}.{k}"), v)));
        }
        if let Some(best) = self.history.best_epoch {
            extra.push(("best_epoch".into(), best.to_string()));
        }
        self.model.to_checkpoint(&extra)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let model = Forecaster::from_checkpoint(ck)?;
        let missing = |k: &str| Error::Checkpoint(format!("missing `{k}`"));
        let global = ck.meta("global").ok_or_else(|| missing("global"))? == "true";
        let n: usize = ck
            .meta("basins")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| missing("basins"))?;
        let mut basins = Vec::with_capacity(n);
        for i in 0..n {
            let prefix = format!("basin.{i}.");
            let id = ck.meta(&format!("{prefix}id")).ok_or_else(|| missing("basin id"))?.to_string();
            let recs: Vec<(String, String)> = ck
                .metadata
                .iter()
                .filter_map(|(k, v)| k.strip_prefix(&prefix).map(|k| (k.to_string(), v.clone())))
                .collect();
            basins.push((id, NormStats::from_records(&recs)?));
        }
        let best_epoch = ck.meta("best_epoch").and_then(|v| v.parse().ok());
        let history = TrainHistory { best_epoch, ..TrainHistory::default() };
        Ok(TrainedModel { model, basins, global, history, adam: None })
    }
}

fn windows(data: &BasinData, spec: WindowSpec, cfg: &TrainConfig) -> Result<(WindowSet, WindowSet)> {
    let train = data.windows(WindowSpec { stride: cfg.train_stride, ..spec }, Part::Train)?;
    let val = data.windows(WindowSpec { stride: cfg.val_stride, ..spec }, Part::Val)?;
    Ok((train, val))
}

fn local(mcfg: &ModelConfig, raw: &BasinSeries, split: &SplitSpec, cfg: &TrainConfig, target: Target) -> Result<TrainedModel> {
    let mcfg = ModelConfig { d_x: raw.d_x(), onehot: 0, ..mcfg.clone() };
    let spec = WindowSpec::new(mcfg.t_in, mcfg.k, 1)?;
    let data = prepare_basin(raw, 0, split, None, None, target)?;
    let (train, val) = windows(&data, spec, cfg)?;
    let model = Forecaster::new(mcfg, cfg.seed)?;
    let out = fit(model, None, &[train], &[val], cfg)?;
    Ok(TrainedModel {
        model: out.model,
        basins: vec![(raw.basin_id.clone(), data.stats)],
        global: false,
        history: out.history,
        adam: out.adam,
    })
}

/// One model per basin on the observed response.
pub fn train_local(mcfg: &ModelConfig, raw: &BasinSeries, split: &SplitSpec, cfg: &TrainConfig) -> Result<TrainedModel> {
    local(mcfg, raw, split, cfg, Target::Observed)
}

/// Local training with the simulated response as both encoder input and
/// target; validation also scores against the simulation.
pub fn pretrain_sim(mcfg: &ModelConfig, raw: &BasinSeries, split: &SplitSpec, cfg: &TrainConfig) -> Result<TrainedModel> {
    local(mcfg, raw, split, cfg, Target::Simulated)
}

/// One parameter set over the pooled windows of all basins, each tagged
/// with its one-hot code. Validation tracks the median per-basin NSE.
pub fn train_global(mcfg: &ModelConfig, raws: &[BasinSeries], split: &SplitSpec, cfg: &TrainConfig) -> Result<TrainedModel> {
    if raws.is_empty() {
        return Err(Error::Data("global training needs at least one basin".into()));
    }
    let n = raws.len();
    let d_x = raws[0].d_x();
    if raws.iter().any(|s| s.d_x() != d_x) {
        return Err(Error::Data("basins disagree on driver columns".into()));
    }
    let mcfg = ModelConfig { d_x: d_x + n, onehot: n, ..mcfg.clone() };
    let spec = WindowSpec::new(mcfg.t_in, mcfg.k, 1)?;
    let mut train = Vec::with_capacity(n);
    let mut val = Vec::with_capacity(n);
    let mut basins = Vec::with_capacity(n);
    for (i, raw) in raws.iter().enumerate() {
        let data = prepare_basin(raw, i, split, None, Some((i, n)), Target::Observed)?;
        let (t, v) = windows(&data, spec, cfg)?;
        if t.windows.is_empty() {
            log::warn!("basin {} has no training windows; excluded from the pooled objective", raw.basin_id);
        }
        train.push(t);
        val.push(v);
        basins.push((raw.basin_id.clone(), data.stats));
    }
    let model = Forecaster::new(mcfg, cfg.seed)?;
    let out = fit(model, None, &train, &val, cfg)?;
    Ok(TrainedModel { model: out.model, basins, global: true, history: out.history, adam: out.adam })
}

/// Continues training `pre` on the observed response, keeping its
/// normalization. Adam restarts unless `cfg.fresh_adam` is off and the
/// pretrained optimizer state is available.
pub fn finetune(pre: &TrainedModel, raw: &BasinSeries, split: &SplitSpec, cfg: &TrainConfig) -> Result<TrainedModel> {
    let data = pre.prepare(raw, split, Target::Observed)?;
    if data.series.d_x() != pre.model.config().d_x {
        return Err(Error::InvalidConfig(format!(
            "checkpoint expects {} driver columns, data has {}",
            pre.model.config().d_x,
            data.series.d_x()
        )));
    }
    let spec = pre.window_spec(1)?;
    let (train, val) = windows(&data, spec, cfg)?;
    let adam = if cfg.fresh_adam {
        None
    } else {
        Some(pre.adam.clone().ok_or_else(|| Error::InvalidConfig("no optimizer state to resume; set fresh_adam".into()))?)
    };
    let out = fit(pre.model.clone(), adam, &[train], &[val], cfg)?;
    Ok(TrainedModel { model: out.model, basins: pre.basins.clone(), global: pre.global, history: out.history, adam: out.adam })
}
