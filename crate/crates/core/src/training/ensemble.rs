use rayon::prelude::*;

use crate::data::{BasinSeries, SplitSpec};
use crate::error::{Error, Result};
use crate::metrics::{pooled_nse, runoff_ratio, summarize, windowed_nse, BasinEval, EvalReport};
use crate::training::config::TrainConfig;
use crate::training::fit::predict_set;
use crate::training::prepare::{Part, Target};
use crate::training::regimes::TrainedModel;

/// Trains `k` members with seeds `cfg.seed + i`, in parallel. Diverged
/// members are dropped; at least ⌈k/2⌉ must survive.
pub fn train_ensemble<F>(k: usize, cfg: &TrainConfig, train: F) -> Result<Vec<TrainedModel>>
where
    F: Fn(&TrainConfig) -> Result<TrainedModel> + Sync,
{
    if k == 0 {
        return Err(Error::InvalidConfig("ensemble size must be >= 1".into()));
    }
    let results: Vec<Result<TrainedModel>> = (0..k)
        .into_par_iter()
        .map(|i| {
            let member = TrainConfig { seed: cfg.seed.wrapping_add(i as u64), ..cfg.clone() };
            train(&member)
        })
        .collect();
    let mut members = Vec::with_capacity(k);
    let mut first_err = None;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(m) => members.push(m),
            Err(e @ Error::Divergence { .. }) => {
                log::warn!("ensemble member {i} diverged: {e}");
                first_err.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    if members.len() < k.div_ceil(2) {
        return Err(first_err.unwrap_or_else(|| Error::Data("too few ensemble members".into())));
    }
    Ok(members)
}

/// Observations and member-mean predictions (physical units) for every
/// window of `part`, windows advancing one step at a time.
pub fn predict_ensemble(
    members: &[TrainedModel],
    raw: &BasinSeries,
    split: &SplitSpec,
    part: Part,
    target: Target,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    if members.is_empty() {
        return Err(Error::InvalidConfig("empty ensemble".into()));
    }
    let mut obs = Vec::new();
    let mut sum: Vec<Vec<f64>> = Vec::new();
    for (m, member) in members.iter().enumerate() {
        let data = member.prepare(raw, split, target)?;
        let set = data.windows(member.window_spec(1)?, part)?;
        let (o, p) = predict_set(&member.model, &set)?;
        if m == 0 {
            obs = o;
            sum = p;
        } else {
            if p.len() != sum.len() {
                return Err(Error::InvalidConfig("ensemble members disagree on window layout".into()));
            }
            for (acc, v) in sum.iter_mut().zip(&p) {
                for (a, b) in acc.iter_mut().zip(v) {
                    *a += b;
                }
            }
        }
    }
    let k = members.len() as f64;
    sum.iter_mut().for_each(|v| v.iter_mut().for_each(|x| *x /= k));
    Ok((obs, sum))
}

/// Scores one basin.
pub fn evaluate_basin(
    members: &[TrainedModel],
    raw: &BasinSeries,
    split: &SplitSpec,
    part: Part,
    target: Target,
) -> Result<BasinEval> {
    let (obs, preds) = predict_ensemble(members, raw, split, part, target)?;
    let horizon = members[0].model.config().k;
    let (nse_w, n_skipped) = match windowed_nse(&obs, &preds) {
        Ok(w) => (Some(w.mean), w.n_skipped),
        Err(Error::UndefinedNse) => (None, obs.len()),
        Err(e) => return Err(e),
    };
    let nse_p = match pooled_nse(&obs, &preds) {
        Ok(v) => Some(v),
        Err(Error::UndefinedNse) => None,
        Err(e) => return Err(e),
    };
    Ok(BasinEval {
        basin_id: raw.basin_id.clone(),
        horizon,
        n_windows: obs.len(),
        n_skipped,
        nse_windowed: nse_w,
        nse_pooled: nse_p,
        runoff_ratio: runoff_ratio(raw, 0..raw.len())?,
    })
}

/// Scores each basin with its own ensemble (`members[i]` for `raws[i]`).
pub fn evaluate(members: &[Vec<TrainedModel>], raws: &[BasinSeries], split: &SplitSpec, part: Part) -> Result<EvalReport> {
    if members.len() != raws.len() {
        return Err(Error::InvalidConfig("one ensemble per basin required".into()));
    }
    let rows = members
        .iter()
        .zip(raws)
        .map(|(m, raw)| evaluate_basin(m, raw, split, part, Target::Observed))
        .collect::<Result<Vec<_>>>()?;
    summarize(rows)
}
