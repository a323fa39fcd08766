//! Flat `key = value` run configuration with named presets and
//! `FHNN_<KEY>` environment overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDateTime;

use crate::data::{format_timestamp, parse_timestamp, BasinSeries, SplitSpec};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, ModelKind};
use crate::synthetic::{FleetConfig, Regime};
use crate::training::TrainConfig;

/// Training regime selected by `train`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Local,
    Global,
    Pretrain,
    Finetune,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Local => "local",
            Mode::Global => "global",
            Mode::Pretrain => "pretrain",
            Mode::Finetune => "finetune",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(Mode::Local),
            "global" => Ok(Mode::Global),
            "pretrain" => Ok(Mode::Pretrain),
            "finetune" => Ok(Mode::Finetune),
            other => Err(Error::InvalidConfig(format!("unknown mode `{other}`"))),
        }
    }
}

/// Named starting points for a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// 6-hourly operational setup: 720-step history, 28-step forecast.
    NwsNcrfc,
    /// Daily large-sample setup.
    Camels,
    /// Daily desk-scale setup used by the trend experiments.
    Desk,
}

impl Preset {
    pub fn as_str(&self) -> &'static str {
        match self {
            Preset::NwsNcrfc => "nws-ncrfc",
            Preset::Camels => "camels",
            Preset::Desk => "desk",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nws-ncrfc" => Ok(Preset::NwsNcrfc),
            "camels" => Ok(Preset::Camels),
            "desk" => Ok(Preset::Desk),
            other => Err(Error::InvalidConfig(format!("unknown preset `{other}`"))),
        }
    }
}

/// Everything a command needs. Rendering and parsing round-trip exactly,
/// so the rendered text is the provenance snapshot of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    pub kind: ModelKind,
    pub mode: Mode,
    pub h_enc: usize,
    pub m: usize,
    pub s: usize,
    pub d_z: usize,
    pub t_in: usize,
    pub k: usize,
    pub z_to_cell: bool,
    pub train: TrainConfig,
    pub ensemble: usize,
    pub manifest: Option<PathBuf>,
    /// Run directory of a trained model (finetune, evaluate, states).
    pub checkpoint: Option<PathBuf>,
    pub out: PathBuf,
    pub train_start: Option<NaiveDateTime>,
    pub train_end: Option<NaiveDateTime>,
    pub val_end: Option<NaiveDateTime>,
    pub test_end: Option<NaiveDateTime>,
    pub n_basins: usize,
    pub years: usize,
    pub regime: Regime,
    pub steps_per_year: usize,
    pub perturbation: f64,
    pub train_years: usize,
    pub val_years: usize,
    pub test_years: usize,
    /// Observed years available in the limited-data experiments.
    pub limited_years: usize,
    /// Observed years per basin in the global-versus-local experiment.
    pub global_years: usize,
    /// Basin for `states`; all basins when unset.
    pub basin: Option<String>,
    /// Last history step of the window whose states are exported; the end
    /// of the training period when unset.
    pub states_at: Option<NaiveDateTime>,
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        let base = RunConfig {
            preset,
            kind: ModelKind::Fhnn,
            mode: Mode::Local,
            h_enc: 11,
            m: 4,
            s: 28,
            d_z: 32,
            t_in: 720,
            k: 28,
            z_to_cell: false,
            train: TrainConfig::default(),
            ensemble: 5,
            manifest: None,
            checkpoint: None,
            out: PathBuf::from("runs/default"),
            train_start: None,
            train_end: None,
            val_end: None,
            test_end: None,
            n_basins: 6,
            years: 10,
            regime: Regime::Gradient,
            steps_per_year: 1460,
            perturbation: 0.25,
            train_years: 6,
            val_years: 2,
            test_years: 2,
            limited_years: 2,
            global_years: 1,
            basin: None,
            states_at: None,
        };
        match preset {
            Preset::NwsNcrfc => base,
            Preset::Camels => RunConfig { h_enc: 85, d_z: 255, t_in: 365, k: 7, m: 7, s: 30, steps_per_year: 365, ..base },
            Preset::Desk => RunConfig {
                h_enc: 8,
                d_z: 16,
                t_in: 120,
                k: 7,
                m: 7,
                s: 30,
                steps_per_year: 365,
                ensemble: 3,
                train: TrainConfig {
                    lr: 0.005,
                    batch_size: 16,
                    max_epochs: 40,
                    patience: 8,
                    train_stride: 5,
                    val_stride: 7,
                    ..TrainConfig::default()
                },
                ..base
            },
        }
    }

    /// Model configuration for `d_x` driver columns.
    pub fn model(&self, kind: ModelKind, d_x: usize) -> ModelConfig {
        ModelConfig {
            kind,
            d_x,
            h_enc: self.h_enc,
            m: self.m,
            s: self.s,
            d_z: self.d_z,
            t_in: self.t_in,
            k: self.k,
            z_to_cell: self.z_to_cell,
            onehot: 0,
        }
    }

    pub fn fleet(&self) -> FleetConfig {
        FleetConfig {
            steps_per_year: self.steps_per_year,
            perturbation: self.perturbation,
            ..FleetConfig::new(self.n_basins, self.years, self.regime, self.train.seed)
        }
    }

    /// Split by whole years from the start of `series`: training, then
    /// validation, then test.
    pub fn year_split(&self, series: &BasinSeries) -> Result<SplitSpec> {
        let spy = self.steps_per_year;
        let total = (self.train_years + self.val_years + self.test_years) * spy;
        if series.len() < total {
            return Err(Error::Data(format!(
                "{}: {} steps, split needs {total}",
                series.basin_id,
                series.len()
            )));
        }
        let at = |years: usize| series.timestamps[years * spy - 1];
        Ok(SplitSpec {
            train_start: None,
            train_end: at(self.train_years),
            val_end: at(self.train_years + self.val_years),
            test_end: at(self.train_years + self.val_years + self.test_years),
        })
    }

    /// `split` with training restricted to its last `years` years.
    pub fn limit_train(&self, split: &SplitSpec, series: &BasinSeries, years: usize) -> Result<SplitSpec> {
        let end = series.rows_through(split.train_end);
        let n = years * self.steps_per_year;
        if years == 0 || n > end {
            return Err(Error::InvalidConfig(format!("cannot keep {years} training years")));
        }
        Ok(SplitSpec { train_start: Some(series.timestamps[end - n]), ..*split })
    }

    /// Split given explicitly by the `train_end`/`val_end`/`test_end` keys,
    /// if all are set.
    pub fn explicit_split(&self) -> Option<SplitSpec> {
        Some(SplitSpec {
            train_start: self.train_start,
            train_end: self.train_end?,
            val_end: self.val_end?,
            test_end: self.test_end?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: &str| Err(Error::Config { line: None, key: key.into(), msg: msg.into() });
        self.model(self.kind, 2).validate().or_else(|e| bad("t_in", &e.to_string()))?;
        self.train.validate().or_else(|e| bad("train", &e.to_string()))?;
        if self.ensemble == 0 {
            return bad("ensemble", "must be >= 1");
        }
        if self.steps_per_year == 0 || self.years == 0 || self.n_basins == 0 {
            return bad("steps_per_year", "steps_per_year, years and n_basins must be >= 1");
        }
        if self.train_years == 0 || self.val_years == 0 || self.test_years == 0 {
            return bad("train_years", "train_years, val_years and test_years must be >= 1");
        }
        if self.train_years + self.val_years + self.test_years > self.years {
            return bad("years", "train_years + val_years + test_years exceeds years");
        }
        if self.limited_years == 0 || self.limited_years > self.train_years {
            return bad("limited_years", "must be between 1 and train_years");
        }
        if self.global_years == 0 || self.global_years > self.train_years {
            return bad("global_years", "must be between 1 and train_years");
        }
        if !(0.0..1.0).contains(&self.perturbation) {
            return bad("perturbation", "must be in [0, 1)");
        }
        Ok(())
    }

    /// Every key with its current value, in canonical order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let t = &self.train;
        let opt = |v: &Option<String>| v.clone().unwrap_or_else(|| "none".into());
        let path = |p: &Option<PathBuf>| opt(&p.as_ref().map(|p| p.display().to_string()));
        let date = |d: &Option<NaiveDateTime>| opt(&d.map(format_timestamp));
        vec![
            ("preset", self.preset.as_str().into()),
            ("kind", self.kind.to_string()),
            ("mode", self.mode.to_string()),
            ("h_enc", self.h_enc.to_string()),
            ("m", self.m.to_string()),
            ("s", self.s.to_string()),
            ("d_z", self.d_z.to_string()),
            ("t_in", self.t_in.to_string()),
            ("k", self.k.to_string()),
            ("z_to_cell", self.z_to_cell.to_string()),
            ("lr", t.lr.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("max_epochs", t.max_epochs.to_string()),
            ("patience", t.patience.to_string()),
            ("seed", t.seed.to_string()),
            ("grad_clip", t.grad_clip.to_string()),
            ("teacher_forcing", t.teacher_forcing.to_string()),
            ("train_stride", t.train_stride.to_string()),
            ("val_stride", t.val_stride.to_string()),
            ("target_train_nse", opt(&t.target_train_nse.map(|v| v.to_string()))),
            ("fresh_adam", t.fresh_adam.to_string()),
            ("ensemble", self.ensemble.to_string()),
            ("manifest", path(&self.manifest)),
            ("checkpoint", path(&self.checkpoint)),
            ("out", self.out.display().to_string()),
            ("train_start", date(&self.train_start)),
            ("train_end", date(&self.train_end)),
            ("val_end", date(&self.val_end)),
            ("test_end", date(&self.test_end)),
            ("n_basins", self.n_basins.to_string()),
            ("years", self.years.to_string()),
            ("regime", self.regime.to_string()),
            ("steps_per_year", self.steps_per_year.to_string()),
            ("perturbation", self.perturbation.to_string()),
            ("train_years", self.train_years.to_string()),
            ("val_years", self.val_years.to_string()),
            ("test_years", self.test_years.to_string()),
            ("limited_years", self.limited_years.to_string()),
            ("global_years", self.global_years.to_string()),
            ("basin", opt(&self.basin)),
            ("states_at", date(&self.states_at)),
        ]
    }

    pub fn keys() -> Vec<&'static str> {
        RunConfig::preset(Preset::Desk).entries().into_iter().map(|(k, _)| k).collect()
    }

    /// Sets one key from its textual value. `preset` is only meaningful as
    /// the base of a parse and is rejected here.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse `{v}`"))
        }
        fn flag(v: &str) -> std::result::Result<bool, String> {
            match v {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(format!("expected true or false, got `{v}`")),
            }
        }
        fn none(v: &str) -> bool {
            v.is_empty() || v == "none"
        }
        fn date(v: &str) -> std::result::Result<Option<NaiveDateTime>, String> {
            if none(v) {
                return Ok(None);
            }
            parse_timestamp(v).map(Some).ok_or_else(|| format!("cannot parse timestamp `{v}`"))
        }
        let path = |v: &str| (!none(v)).then(|| PathBuf::from(v));
        let t = &mut self.train;
        match key {
            "kind" => self.kind = value.parse().map_err(|e: Error| e.to_string())?,
            "mode" => self.mode = value.parse().map_err(|e: Error| e.to_string())?,
            "h_enc" => self.h_enc = num(value)?,
            "m" => self.m = num(value)?,
            "s" => self.s = num(value)?,
            "d_z" => self.d_z = num(value)?,
            "t_in" => self.t_in = num(value)?,
            "k" => self.k = num(value)?,
            "z_to_cell" => self.z_to_cell = flag(value)?,
            "lr" => t.lr = num(value)?,
            "batch_size" => t.batch_size = num(value)?,
            "max_epochs" => t.max_epochs = num(value)?,
            "patience" => t.patience = num(value)?,
            "seed" => t.seed = num(value)?,
            "grad_clip" => t.grad_clip = num(value)?,
            "teacher_forcing" => t.teacher_forcing = flag(value)?,
            "train_stride" => t.train_stride = num(value)?,
            "val_stride" => t.val_stride = num(value)?,
            "target_train_nse" => t.target_train_nse = if none(value) { None } else { Some(num(value)?) },
            "fresh_adam" => t.fresh_adam = flag(value)?,
            "ensemble" => self.ensemble = num(value)?,
            "manifest" => self.manifest = path(value),
            "checkpoint" => self.checkpoint = path(value),
            "out" => self.out = path(value).ok_or("output directory required")?,
            "train_start" => self.train_start = date(value)?,
            "train_end" => self.train_end = date(value)?,
            "val_end" => self.val_end = date(value)?,
            "test_end" => self.test_end = date(value)?,
            "n_basins" => self.n_basins = num(value)?,
            "years" => self.years = num(value)?,
            "regime" => self.regime = value.parse().map_err(|e: Error| e.to_string())?,
            "steps_per_year" => self.steps_per_year = num(value)?,
            "perturbation" => self.perturbation = num(value)?,
            "train_years" => self.train_years = num(value)?,
            "val_years" => self.val_years = num(value)?,
            "test_years" => self.test_years = num(value)?,
            "limited_years" => self.limited_years = num(value)?,
            "global_years" => self.global_years = num(value)?,
            "basin" => self.basin = (!none(value)).then(|| value.to_string()),
            "states_at" => self.states_at = date(value)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Parses config text. A `preset` line, wherever it appears, selects
    /// the base; otherwise `base` is used. Keys may appear once.
    pub fn parse(text: &str, base: Preset) -> Result<Self> {
        let mut pairs: Vec<(usize, &str, &str)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: Some(i + 1),
                key: line.into(),
                msg: "expected `key = value`".into(),
            })?;
            let key = key.trim();
            if pairs.iter().any(|(_, k, _)| *k == key) {
                return Err(Error::Config { line: Some(i + 1), key: key.into(), msg: "duplicate key".into() });
            }
            pairs.push((i + 1, key, value.trim()));
        }
        let mut cfg = match pairs.iter().find(|(_, k, _)| *k == "preset") {
            Some((line, key, v)) => {
                let p = v.parse().map_err(|e: Error| Error::Config { line: Some(*line), key: (*key).into(), msg: e.to_string() })?;
                RunConfig::preset(p)
            }
            None => RunConfig::preset(base),
        };
        for (line, key, value) in pairs.into_iter().filter(|(_, k, _)| *k != "preset") {
            cfg.set(key, value).map_err(|msg| Error::Config { line: Some(line), key: key.into(), msg })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path, base: Preset) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            line: None,
            key: "--config".into(),
            msg: format!("{}: {e}", path.display()),
        })?;
        RunConfig::parse(&text, base)
    }

    /// Applies `FHNN_<KEY>` overrides from `vars`.
    pub fn apply_env<I>(&mut self, vars: I) -> Result<()>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let keys = RunConfig::keys();
        for (name, value) in vars {
            let Some(suffix) = name.strip_prefix("FHNN_") else { continue };
            let key = suffix.to_ascii_lowercase();
            if key == "preset" {
                return Err(Error::Config { line: None, key: name, msg: "preset cannot be overridden".into() });
            }
            if !keys.contains(&key.as_str()) {
                return Err(Error::Config { line: None, key: name, msg: "unknown key".into() });
            }
            self.set(&key, value.trim()).map_err(|msg| Error::Config { line: None, key: name.clone(), msg })?;
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
