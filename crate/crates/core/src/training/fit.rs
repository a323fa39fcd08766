use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metrics::{median, pooled_nse, windowed_nse};
use crate::model::Forecaster;
use crate::numerics::AdamState;
use crate::training::config::{TrainConfig, TrainHistory};
use crate::training::prepare::WindowSet;

/// Stream of the data-order generator; initialization uses the default
/// stream of the same seed.
const SHUFFLE_STREAM: u64 = 0x5348_5546;

/// Denormalized observations and predictions for every window of a set.
pub fn predict_set(model: &Forecaster, set: &WindowSet) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let mut obs = Vec::with_capacity(set.windows.len());
    let mut preds = Vec::with_capacity(set.windows.len());
    for w in &set.windows {
        let p = model.predict(w)?;
        obs.push(w.y_fcst.iter().map(|&y| set.stats.denormalize_y(y)).collect());
        preds.push(p.iter().map(|&y| set.stats.denormalize_y(y)).collect());
    }
    Ok((obs, preds))
}

/// Median over sets of windowed NSE in physical units; `None` when no set
/// has a defined NSE.
pub fn median_windowed_nse(model: &Forecaster, sets: &[WindowSet]) -> Result<Option<f64>> {
    let mut scores = Vec::new();
    for set in sets.iter().filter(|s| !s.windows.is_empty()) {
        let (obs, preds) = predict_set(model, set)?;
        match windowed_nse(&obs, &preds) {
            Ok(w) => scores.push(w.mean),
            Err(Error::UndefinedNse) => {}
            Err(e) => return Err(e),
        }
    }
    Ok((!scores.is_empty()).then(|| median(&scores)))
}

/// Median over sets of NSE pooled across every window and lead time, in
/// physical units.
pub fn median_pooled_nse(model: &Forecaster, sets: &[WindowSet]) -> Result<Option<f64>> {
    let mut scores = Vec::new();
    for set in sets.iter().filter(|s| !s.windows.is_empty()) {
        let (obs, preds) = predict_set(model, set)?;
        match pooled_nse(&obs, &preds) {
            Ok(v) => scores.push(v),
            Err(Error::UndefinedNse) => {}
            Err(e) => return Err(e),
        }
    }
    Ok((!scores.is_empty()).then(|| median(&scores)))
}

/// Mean normalized MSE over all windows of all sets.
fn mean_mse(model: &Forecaster, sets: &[WindowSet]) -> Result<Option<f64>> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for w in sets.iter().flat_map(|s| s.windows.iter()) {
        sum += crate::model::mse(&model.predict(w)?, &w.y_fcst)?;
        n += 1;
    }
    Ok((n > 0).then(|| sum / n as f64))
}

fn val_score(model: &Forecaster, val: &[WindowSet]) -> Result<Option<f64>> {
    match median_pooled_nse(model, val)? {
        Some(v) => Ok(Some(v)),
        None => Ok(mean_mse(model, val)?.map(|m| -m)),
    }
}

pub struct FitOutcome {
    pub model: Forecaster,
    pub history: TrainHistory,
    pub adam: Option<AdamState>,
}

/// Mini-batch Adam over the pooled training windows of `train`.
///
/// Each epoch visits the windows in an order drawn from a dedicated
/// generator; within a batch, gradients are accumulated in ascending window
/// order with weight `1/B`, clipped to `grad_clip` and applied. The
/// parameters with the best validation score are returned; without
/// validation windows the last epoch is best. `adam` resumes optimizer
/// moments; `None` starts fresh.
pub fn fit(
    mut model: Forecaster,
    adam: Option<AdamState>,
    train: &[WindowSet],
    val: &[WindowSet],
    cfg: &TrainConfig,
) -> Result<FitOutcome> {
    cfg.validate()?;
    let windows: Vec<_> = train.iter().flat_map(|s| s.windows.iter()).collect();
    let mut history = TrainHistory::default();
    if cfg.max_epochs == 0 {
        return Ok(FitOutcome { model, history, adam });
    }
    if windows.is_empty() {
        return Err(Error::Data("no training windows".into()));
    }
    let mut adam = match adam {
        Some(mut a) => {
            a.lr = cfg.lr;
            a
        }
        None => AdamState::new(model.params(), cfg.lr)?,
    };
    let mut shuffle = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle.set_stream(SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..windows.len()).collect();
    let mut best: Option<(f64, crate::numerics::ParamSet)> = None;
    let mut since_best = 0;
    let start = Instant::now();

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut shuffle);
        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let mut batch = chunk.to_vec();
            batch.sort_unstable();
            let scale = 1.0 / batch.len() as f64;
            model.params_mut().zero_grads();
            let mut batch_loss = 0.0;
            for &i in &batch {
                match model.loss_and_grad(windows[i], scale, cfg.teacher_forcing) {
                    Ok(l) => batch_loss += l * scale,
                    Err(Error::NonFinite(_)) => return Err(Error::Divergence { epoch, batch: b }),
                    Err(e) => return Err(e),
                }
            }
            if !model.params().grads().iter().all(|g| g.is_finite()) {
                return Err(Error::Divergence { epoch, batch: b });
            }
            model.params_mut().clip_grad_norm(cfg.grad_clip);
            adam.step(model.params_mut())?;
            if !model.params().all_finite() {
                return Err(Error::Divergence { epoch, batch: b });
            }
            loss_sum += batch_loss * batch.len() as f64;
        }
        let train_loss = loss_sum / windows.len() as f64;
        let score = val_score(&model, val)?.unwrap_or(-train_loss);
        let train_nse = match cfg.target_train_nse {
            Some(_) => median_windowed_nse(&model, train)?,
            None => None,
        };
        history.train_loss.push(train_loss);
        history.val_score.push(score);
        history.train_nse.push(train_nse);
        history.wall_seconds.push(start.elapsed().as_secs_f64());
        log::debug!("epoch {epoch}: loss {train_loss:.5} val {score:.4} train nse {train_nse:?}");

        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, model.params().clone()));
            history.best_epoch = Some(epoch);
            since_best = 0;
        } else {
            since_best += 1;
        }
        if let (Some(target), Some(v)) = (cfg.target_train_nse, train_nse) {
            if v >= target {
                // the model that met the target is the one returned
                best = Some((score, model.params().clone()));
                history.best_epoch = Some(epoch);
                break;
            }
        }
        if since_best >= cfg.patience || cfg.max_seconds.is_some_and(|m| start.elapsed().as_secs_f64() > m) {
            break;
        }
    }
    if let Some((_, params)) = best {
        model.params_mut().copy_values_from(&params)?;
    }
    model.params_mut().zero_grads();
    Ok(FitOutcome { model, history, adam: Some(adam) })
}
