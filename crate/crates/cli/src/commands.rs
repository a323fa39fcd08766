use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fhnn_core::config::{Mode, Preset, RunConfig};
use fhnn_core::data::{window_at, BasinSeries, DatasetManifest, SplitSpec};
use fhnn_core::experiments::run_trends;
use fhnn_core::metrics::plot::{state_panels, write_svg};
use fhnn_core::metrics::{export_states, summarize};
use fhnn_core::numerics::Checkpoint;
use fhnn_core::synthetic::make_fleet;
use fhnn_core::training::{
    evaluate_basin, finetune, pretrain_sim, train_ensemble, train_global, train_local, Part, Target, TrainConfig,
    TrainedModel,
};
use fhnn_core::Error;

use crate::Command;

const GLOBAL_DIR: &str = "global";

/// Config for `command`: file (or the command's base preset), then
/// environment, then flags.
pub fn resolve(command: Command, path: Option<&Path>, seed: Option<u64>, out: Option<PathBuf>) -> Result<RunConfig> {
    let base = if command == Command::Trends { Preset::Desk } else { Preset::NwsNcrfc };
    let mut cfg = match path {
        Some(p) => RunConfig::load(p, base)?,
        None => RunConfig::preset(base),
    };
    cfg.apply_env(std::env::vars())?;
    if let Some(s) = seed {
        cfg.train.seed = s;
    }
    if let Some(o) = out {
        cfg.out = o;
    }
    match command {
        Command::Pretrain => cfg.mode = Mode::Pretrain,
        Command::Finetune => cfg.mode = Mode::Finetune,
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    std::fs::write(cfg.out.join("config.txt"), cfg.render())?;
    match command {
        Command::Simulate => simulate(cfg),
        Command::Train | Command::Pretrain | Command::Finetune => train(cfg),
        Command::Evaluate => evaluate(cfg),
        Command::States => states(cfg),
        Command::Trends => trends(cfg),
    }
}

fn required<'a, T>(v: &'a Option<T>, key: &str) -> Result<&'a T, Error> {
    v.as_ref().ok_or_else(|| Error::Config { line: None, key: key.into(), msg: "required by this command".into() })
}

fn simulate(cfg: &RunConfig) -> Result<()> {
    let fleet = make_fleet(&cfg.fleet())?;
    let split = match cfg.explicit_split() {
        Some(s) => s,
        None => cfg.year_split(&fleet.basins[0].series)?,
    };
    fleet.write(&cfg.out, &split)?;
    for b in &fleet.basins {
        log::info!("{}: runoff ratio {:.3}", b.series.basin_id, b.runoff_ratio);
    }
    Ok(())
}

fn load_data(cfg: &RunConfig) -> Result<(Vec<BasinSeries>, SplitSpec)> {
    let manifest = DatasetManifest::load(required(&cfg.manifest, "manifest")?)?;
    let series = manifest.load_series()?;
    let split = cfg.explicit_split().unwrap_or(manifest.split);
    Ok((series, split))
}

fn save_members(dir: &Path, members: &[TrainedModel]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (i, m) in members.iter().enumerate() {
        m.to_checkpoint().save(dir.join(format!("member_{i}.ckpt")))?;
        m.history.write_csv(&dir.join(format!("history_{i}.csv")), false)?;
    }
    Ok(())
}

/// Trained members of a run, keyed by basin id or `global`, in name order.
fn load_run(dir: &Path) -> Result<Vec<(String, Vec<TrainedModel>)>> {
    let models = dir.join("models");
    let mut groups = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(&models)
        .with_context(|| format!("reading {}", models.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    entries.sort();
    for d in entries.into_iter().filter(|p| p.is_dir()) {
        let mut members = Vec::new();
        for i in 0.. {
            let p = d.join(format!("member_{i}.ckpt"));
            if !p.exists() {
                break;
            }
            members.push(TrainedModel::from_checkpoint(&Checkpoint::load(&p)?)?);
        }
        if !members.is_empty() {
            let name = d.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            groups.push((name, members));
        }
    }
    if groups.is_empty() {
        return Err(Error::Checkpoint(format!("no trained members under {}", models.display())).into());
    }
    Ok(groups)
}

fn members_for<'a>(run: &'a [(String, Vec<TrainedModel>)], basin_id: &str) -> Result<&'a [TrainedModel], Error> {
    run.iter()
        .find(|(name, _)| name == basin_id || name == GLOBAL_DIR)
        .map(|(_, m)| m.as_slice())
        .ok_or_else(|| Error::Data(format!("run has no model for basin {basin_id}")))
}

fn write_report(cfg: &RunConfig, run: &[(String, Vec<TrainedModel>)], series: &[BasinSeries], split: &SplitSpec) -> Result<()> {
    for (part, name) in [(Part::Val, "report_val.csv"), (Part::Test, "report_test.csv")] {
        let rows = series
            .iter()
            .map(|raw| evaluate_basin(members_for(run, &raw.basin_id)?, raw, split, part, Target::Observed))
            .collect::<Result<Vec<_>, Error>>()?;
        let report = summarize(rows)?;
        report.write_csv(&cfg.out.join(name))?;
        if let Some(a) = report.aggregates.first() {
            log::info!("{name}: median NSE windowed {:.4}, pooled {:.4}", a.median_windowed, a.median_pooled);
        }
    }
    Ok(())
}

fn train(cfg: &RunConfig) -> Result<()> {
    let (series, split) = load_data(cfg)?;
    let mcfg = cfg.model(cfg.kind, series[0].d_x());
    let models = cfg.out.join("models");
    match cfg.mode {
        Mode::Global => {
            let members = train_ensemble(cfg.ensemble, &cfg.train, |c| train_global(&mcfg, &series, &split, c))?;
            save_members(&models.join(GLOBAL_DIR), &members)?;
        }
        Mode::Local | Mode::Pretrain => {
            for raw in &series {
                log::info!("training {} ({})", raw.basin_id, cfg.mode);
                let members = train_ensemble(cfg.ensemble, &cfg.train, |c| match cfg.mode {
                    Mode::Pretrain => pretrain_sim(&mcfg, raw, &split, c),
                    _ => train_local(&mcfg, raw, &split, c),
                })?;
                save_members(&models.join(&raw.basin_id), &members)?;
            }
        }
        Mode::Finetune => {
            let pre = load_run(required(&cfg.checkpoint, "checkpoint")?)?;
            for raw in &series {
                log::info!("fine-tuning {}", raw.basin_id);
                let mut members = Vec::new();
                for (i, p) in members_for(&pre, &raw.basin_id)?.iter().enumerate() {
                    let c = TrainConfig { seed: cfg.train.seed.wrapping_add(i as u64), ..cfg.train.clone() };
                    members.push(finetune(p, raw, &split, &c)?);
                }
                save_members(&models.join(&raw.basin_id), &members)?;
            }
        }
    }
    let run = load_run(&cfg.out)?;
    write_report(cfg, &run, &series, &split)
}

fn evaluate(cfg: &RunConfig) -> Result<()> {
    let (series, split) = load_data(cfg)?;
    let run = load_run(required(&cfg.checkpoint, "checkpoint")?)?;
    write_report(cfg, &run, &series, &split)
}

fn states(cfg: &RunConfig) -> Result<()> {
    let (series, split) = load_data(cfg)?;
    let run = load_run(required(&cfg.checkpoint, "checkpoint")?)?;
    let chosen: Vec<&BasinSeries> = match &cfg.basin {
        Some(id) => vec![series
            .iter()
            .find(|s| &s.basin_id == id)
            .ok_or_else(|| Error::Data(format!("basin {id} not in manifest")))?],
        None => series.iter().collect(),
    };
    let mut all = Vec::new();
    for raw in chosen {
        let tm = &members_for(&run, &raw.basin_id)?[0];
        let data = tm.prepare(raw, &split, Target::Observed)?;
        let at = cfg.states_at.unwrap_or(split.train_end);
        let origin = data.series.rows_through(at);
        let w = window_at(&data.series, tm.window_spec(1)?, origin, 0)?;
        let state = tm.model.encode(&w.x_hist, &w.y_hist)?;
        export_states(&state, &cfg.out.join(format!("states_{}.csv", raw.basin_id)))?;
        all.push((raw.basin_id.clone(), state));
    }
    write_svg(&cfg.out.join("states.svg"), &state_panels(&all), 3)?;
    Ok(())
}

fn trends(cfg: &RunConfig) -> Result<()> {
    let report = run_trends(cfg)?;
    report.write(&cfg.out, cfg)?;
    print!("{}", report.summary()?.render());
    Ok(())
}
