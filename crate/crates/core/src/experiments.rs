//! Desk-scale trend experiments on a synthetic fleet: memory advantage
//! against runoff ratio, simulation pretraining under limited data, and
//! global versus local training.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::RunConfig;
use crate::data::{BasinSeries, SplitSpec};
use crate::error::{Error, Result};
use crate::metrics::plot::{write_svg, Panel, Series};
use crate::metrics::{median, BasinEval};
use crate::model::ModelKind;
use crate::synthetic::make_fleet;
use crate::training::{
    evaluate_basin, finetune, pretrain_sim, train_ensemble, train_global, train_local, Part, Target, TrainedModel,
};

/// Test scores of several training arms on every basin of a fleet.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendTable {
    pub name: String,
    pub arms: Vec<String>,
    /// `(basin_id, runoff_ratio, one evaluation per arm)`.
    pub rows: Vec<(String, f64, Vec<BasinEval>)>,
}

impl TrendTable {
    fn arm_index(&self, arm: &str) -> Result<usize> {
        self.arms.iter().position(|a| a == arm).ok_or_else(|| Error::Data(format!("table {} has no arm `{arm}`", self.name)))
    }

    /// Pooled test NSE of `arm` per basin; NaN where undefined.
    pub fn scores(&self, arm: &str) -> Result<Vec<f64>> {
        let j = self.arm_index(arm)?;
        Ok(self.rows.iter().map(|(_, _, ev)| ev[j].nse_pooled.unwrap_or(f64::NAN)).collect())
    }

    pub fn median(&self, arm: &str) -> Result<f64> {
        Ok(median(&self.scores(arm)?))
    }

    pub fn runoff_ratios(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.1).collect()
    }

    /// Long format, one line per basin and arm.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("basin_id,runoff_ratio,arm,nse_pooled,nse_windowed,n_windows,n_skipped\n");
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for (id, rr, evals) in &self.rows {
            for (arm, ev) in self.arms.iter().zip(evals) {
                let _ = writeln!(
                    out,
                    "{id},{rr},{arm},{},{},{},{}",
                    opt(ev.nse_pooled),
                    opt(ev.nse_windowed),
                    ev.n_windows,
                    ev.n_skipped
                );
            }
        }
        out
    }
}

/// Spearman rank correlation with average ranks for ties; NaN when either
/// side is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    assert_eq!(a.len(), b.len(), "spearman needs equal lengths");
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// The three trend tables of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendsReport {
    /// Arms `fhnn`, `lstm_ar`: all training years.
    pub memory: TrendTable,
    /// Arms `scratch_all`, `scratch_limited`, `pretrained`: FHNN only.
    pub pretraining: TrendTable,
    /// Arms `fhnn_local`, `fhnn_global`, `lstm_ar_local`, `lstm_ar_global`.
    pub global: TrendTable,
}

/// Headline numbers of a trends run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendSummary {
    pub fhnn_median: f64,
    pub lstm_ar_median: f64,
    /// Per basin FHNN minus LSTM-AR, in fleet order.
    pub gains: Vec<f64>,
    pub gain_runoff_spearman: f64,
    /// Mean gain over the lower and upper half of basins by runoff ratio.
    pub gain_low_half: f64,
    pub gain_high_half: f64,
    pub scratch_all_median: f64,
    pub scratch_limited_median: f64,
    pub pretrained_median: f64,
    pub fhnn_local_median: f64,
    pub fhnn_global_median: f64,
    pub lstm_ar_local_median: f64,
    pub lstm_ar_global_median: f64,
}

impl TrendsReport {
    pub fn summary(&self) -> Result<TrendSummary> {
        let f = self.memory.scores("fhnn")?;
        let l = self.memory.scores("lstm_ar")?;
        let gains: Vec<f64> = f.iter().zip(&l).map(|(a, b)| a - b).collect();
        let rr = self.memory.runoff_ratios();
        let mut order: Vec<usize> = (0..rr.len()).collect();
        order.sort_by(|&i, &j| rr[i].total_cmp(&rr[j]));
        let half = order.len() / 2;
        let mean_of = |idx: &[usize]| idx.iter().map(|&i| gains[i]).sum::<f64>() / idx.len() as f64;
        Ok(TrendSummary {
            fhnn_median: median(&f),
            lstm_ar_median: median(&l),
            gain_runoff_spearman: spearman(&gains, &rr),
            gain_low_half: mean_of(&order[..half]),
            gain_high_half: mean_of(&order[order.len() - half..]),
            gains,
            scratch_all_median: self.pretraining.median("scratch_all")?,
            scratch_limited_median: self.pretraining.median("scratch_limited")?,
            pretrained_median: self.pretraining.median("pretrained")?,
            fhnn_local_median: self.global.median("fhnn_local")?,
            fhnn_global_median: self.global.median("fhnn_global")?,
            lstm_ar_local_median: self.global.median("lstm_ar_local")?,
            lstm_ar_global_median: self.global.median("lstm_ar_global")?,
        })
    }

    /// Writes `memory.csv`, `pretraining.csv`, `global.csv`, `summary.txt`
    /// and two SVG plots into `dir`.
    pub fn write(&self, dir: &Path, cfg: &RunConfig) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for t in [&self.memory, &self.pretraining, &self.global] {
            std::fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv())?;
        }
        let s = self.summary()?;
        std::fs::write(dir.join("summary.txt"), s.render())?;

        let rr = self.memory.runoff_ratios();
        let gain = Panel {
            title: "FHNN gain over LSTM-AR".into(),
            x_label: "runoff ratio".into(),
            y_label: "test NSE gain".into(),
            series: vec![Series { label: "basin".into(), points: rr.iter().copied().zip(s.gains.iter().copied()).collect(), line: false }],
        };
        let years = [cfg.global_years as f64, cfg.limited_years as f64, cfg.train_years as f64];
        let fhnn = [s.fhnn_local_median, s.scratch_limited_median, s.scratch_all_median];
        let years_panel = Panel {
            title: "median test NSE by training years".into(),
            x_label: "years of observations".into(),
            y_label: "median test NSE".into(),
            series: vec![
                Series { label: "fhnn".into(), points: years.iter().copied().zip(fhnn).collect(), line: true },
                Series {
                    label: "lstm_ar".into(),
                    points: vec![(years[0], s.lstm_ar_local_median), (years[2], s.lstm_ar_median)],
                    line: true,
                },
                Series {
                    label: "fhnn pretrained".into(),
                    points: vec![(years[1], s.pretrained_median)],
                    line: false,
                },
            ],
        };
        write_svg(&dir.join("gain_vs_runoff.svg"), &[gain], 1)?;
        write_svg(&dir.join("nse_vs_years.svg"), &[years_panel], 1)?;
        Ok(())
    }
}

impl TrendSummary {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let rows: [(&str, f64); 13] = [
            ("memory.fhnn_median", self.fhnn_median),
            ("memory.lstm_ar_median", self.lstm_ar_median),
            ("memory.gain_runoff_spearman", self.gain_runoff_spearman),
            ("memory.gain_low_half", self.gain_low_half),
            ("memory.gain_high_half", self.gain_high_half),
            ("pretraining.scratch_all_median", self.scratch_all_median),
            ("pretraining.scratch_limited_median", self.scratch_limited_median),
            ("pretraining.pretrained_median", self.pretrained_median),
            ("global.fhnn_local_median", self.fhnn_local_median),
            ("global.fhnn_global_median", self.fhnn_global_median),
            ("global.lstm_ar_local_median", self.lstm_ar_local_median),
            ("global.lstm_ar_global_median", self.lstm_ar_global_median),
            ("pretraining.gain_over_scratch", self.pretrained_median - self.scratch_limited_median),
        ];
        for (k, v) in rows {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

fn ensemble_eval<F>(cfg: &RunConfig, raw: &BasinSeries, split: &SplitSpec, train: F) -> Result<BasinEval>
where
    F: Fn(&crate::training::TrainConfig) -> Result<TrainedModel> + Sync,
{
    let members = train_ensemble(cfg.ensemble, &cfg.train, train)?;
    evaluate_basin(&members, raw, split, Part::Test, Target::Observed)
}

/// Runs the full recipe: fleet generation from `cfg`, then every arm of
/// every table with `cfg.ensemble` members per arm. Scores are pooled test
/// NSE of the ensemble mean.
pub fn run_trends(cfg: &RunConfig) -> Result<TrendsReport> {
    cfg.validate()?;
    let fleet = make_fleet(&cfg.fleet())?;
    let series: Vec<&BasinSeries> = fleet.basins.iter().map(|b| &b.series).collect();
    let split = cfg.year_split(series[0])?;
    let limited = cfg.limit_train(&split, series[0], cfg.limited_years)?;
    let short = cfg.limit_train(&split, series[0], cfg.global_years)?;
    let d_x = series[0].d_x();
    let fhnn = cfg.model(ModelKind::Fhnn, d_x);
    let lstm_ar = cfg.model(ModelKind::LstmAr, d_x);

    let mut memory = Vec::new();
    let mut pretraining = Vec::new();
    let mut local_short = Vec::new();
    for (b, raw) in fleet.basins.iter().zip(&series) {
        log::info!("basin {}: runoff ratio {:.3}", raw.basin_id, b.runoff_ratio);
        let f_all = ensemble_eval(cfg, raw, &split, |c| train_local(&fhnn, raw, &split, c))?;
        let l_all = ensemble_eval(cfg, raw, &split, |c| train_local(&lstm_ar, raw, &split, c))?;
        let f_lim = ensemble_eval(cfg, raw, &split, |c| train_local(&fhnn, raw, &limited, c))?;
        let f_pre = ensemble_eval(cfg, raw, &split, |c| {
            let pre = pretrain_sim(&fhnn, raw, &split, c)?;
            finetune(&pre, raw, &limited, c)
        })?;
        let f_short = ensemble_eval(cfg, raw, &split, |c| train_local(&fhnn, raw, &short, c))?;
        let l_short = ensemble_eval(cfg, raw, &split, |c| train_local(&lstm_ar, raw, &short, c))?;
        memory.push((raw.basin_id.clone(), b.runoff_ratio, vec![f_all.clone(), l_all]));
        pretraining.push((raw.basin_id.clone(), b.runoff_ratio, vec![f_all, f_lim, f_pre]));
        local_short.push((f_short, l_short));
    }

    let owned: Vec<BasinSeries> = series.iter().map(|s| (*s).clone()).collect();
    let mut global_evals = Vec::new();
    for mcfg in [&fhnn, &lstm_ar] {
        log::info!("global {}", mcfg.kind);
        let members = train_ensemble(cfg.ensemble, &cfg.train, |c| train_global(mcfg, &owned, &short, c))?;
        let evals = owned
            .iter()
            .map(|raw| evaluate_basin(&members, raw, &split, Part::Test, Target::Observed))
            .collect::<Result<Vec<_>>>()?;
        global_evals.push(evals);
    }
    let global = fleet
        .basins
        .iter()
        .zip(local_short)
        .enumerate()
        .map(|(i, (b, (f, l)))| {
            (b.series.basin_id.clone(), b.runoff_ratio, vec![f, global_evals[0][i].clone(), l, global_evals[1][i].clone()])
        })
        .collect();

    let arms = |a: &[&str]| a.iter().map(|s| s.to_string()).collect();
    Ok(TrendsReport {
        memory: TrendTable { name: "memory".into(), arms: arms(&["fhnn", "lstm_ar"]), rows: memory },
        pretraining: TrendTable {
            name: "pretraining".into(),
            arms: arms(&["scratch_all", "scratch_limited", "pretrained"]),
            rows: pretraining,
        },
        global: TrendTable {
            name: "global".into(),
            arms: arms(&["fhnn_local", "fhnn_global", "lstm_ar_local", "lstm_ar_global"]),
            rows: global,
        },
    })
}
