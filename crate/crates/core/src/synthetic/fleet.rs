use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{NaiveDateTime, TimeDelta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{write_csv, BasinSeries, DatasetManifest, SplitSpec};
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::synthetic::simulate::{simulate, CatchmentParams, Stores};
use crate::synthetic::weather::{generate_weather, WeatherConfig};

/// Climate/catchment archetype. `Gradient` spreads the basins of a fleet
/// evenly from wet-flashy to dry-snowy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    WetFlashy,
    Moderate,
    DrySnowy,
    Gradient,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::WetFlashy => "wet-flashy",
            Regime::Moderate => "moderate",
            Regime::DrySnowy => "dry-snowy",
            Regime::Gradient => "gradient",
        }
    }

    /// Position on the wet (0) to dry (1) axis for basin `i` of `n`.
    fn position(&self, i: usize, n: usize) -> f64 {
        match self {
            Regime::WetFlashy => 0.0,
            Regime::Moderate => 0.5,
            Regime::DrySnowy => 1.0,
            Regime::Gradient if n > 1 => i as f64 / (n - 1) as f64,
            Regime::Gradient => 0.5,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wet-flashy" => Ok(Regime::WetFlashy),
            "moderate" => Ok(Regime::Moderate),
            "dry-snowy" => Ok(Regime::DrySnowy),
            "gradient" => Ok(Regime::Gradient),
            other => Err(Error::InvalidConfig(format!("unknown regime `{other}`"))),
        }
    }
}

/// Daily-unit climate and catchment description at one point of the
/// wet-to-dry axis.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Profile {
    temp_mean: f64,
    temp_amplitude: f64,
    temp_noise: f64,
    wet_prob: f64,
    precip_mean: f64,
    ddf: f64,
    t_snow: f64,
    soil_cap: f64,
    et_coeff: f64,
    frac_fast: f64,
    k_fast: f64,
    k_slow: f64,
}

const ANCHORS: [Profile; 3] = [
    // wet-flashy
    Profile {
        temp_mean: 12.0,
        temp_amplitude: 8.0,
        temp_noise: 2.5,
        wet_prob: 0.45,
        precip_mean: 4.0,
        ddf: 3.0,
        t_snow: 0.0,
        soil_cap: 40.0,
        et_coeff: 0.004,
        frac_fast: 0.8,
        k_fast: 0.5,
        k_slow: 0.05,
    },
    // moderate
    Profile {
        temp_mean: 8.0,
        temp_amplitude: 11.0,
        temp_noise: 2.5,
        wet_prob: 0.35,
        precip_mean: 2.6,
        ddf: 2.5,
        t_snow: 0.5,
        soil_cap: 90.0,
        et_coeff: 0.005,
        frac_fast: 0.5,
        k_fast: 0.3,
        k_slow: 0.02,
    },
    // dry-snowy
    Profile {
        temp_mean: 3.0,
        temp_amplitude: 14.0,
        temp_noise: 2.5,
        wet_prob: 0.3,
        precip_mean: 2.0,
        ddf: 2.0,
        t_snow: 1.0,
        soil_cap: 125.0,
        et_coeff: 0.007,
        frac_fast: 0.3,
        k_fast: 0.2,
        k_slow: 0.01,
    },
];

fn lerp(a: f64, b: f64, w: f64) -> f64 {
    a + (b - a) * w
}

fn profile_at(pos: f64) -> Profile {
    let (a, b, w) = if pos <= 0.5 { (ANCHORS[0], ANCHORS[1], pos * 2.0) } else { (ANCHORS[1], ANCHORS[2], pos * 2.0 - 1.0) };
    Profile {
        temp_mean: lerp(a.temp_mean, b.temp_mean, w),
        temp_amplitude: lerp(a.temp_amplitude, b.temp_amplitude, w),
        temp_noise: lerp(a.temp_noise, b.temp_noise, w),
        wet_prob: lerp(a.wet_prob, b.wet_prob, w),
        precip_mean: lerp(a.precip_mean, b.precip_mean, w),
        ddf: lerp(a.ddf, b.ddf, w),
        t_snow: lerp(a.t_snow, b.t_snow, w),
        soil_cap: lerp(a.soil_cap, b.soil_cap, w),
        et_coeff: lerp(a.et_coeff, b.et_coeff, w),
        frac_fast: lerp(a.frac_fast, b.frac_fast, w),
        k_fast: lerp(a.k_fast, b.k_fast, w),
        k_slow: lerp(a.k_slow, b.k_slow, w),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetConfig {
    pub n_basins: usize,
    pub years: usize,
    pub regime: Regime,
    pub seed: u64,
    /// Relative parameter error of the simulated response.
    pub perturbation: f64,
    pub steps_per_year: usize,
    pub start: NaiveDateTime,
    /// Simulated spin-up years discarded before `start`.
    pub warmup_years: usize,
    /// Relative per-basin jitter of the regime profile.
    pub jitter: f64,
}

impl FleetConfig {
    pub fn new(n_basins: usize, years: usize, regime: Regime, seed: u64) -> Self {
        FleetConfig {
            n_basins,
            years,
            regime,
            seed,
            perturbation: 0.25,
            steps_per_year: 1460,
            start: chrono::NaiveDate::from_ymd_opt(2000, 1, 1).and_then(|d| d.and_hms_opt(0, 0, 0)).expect("valid date"),
            warmup_years: 1,
            jitter: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_basins == 0 || self.years == 0 || self.steps_per_year == 0 {
            return Err(Error::InvalidConfig("fleet needs n_basins, years and steps_per_year >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.perturbation) || !(0.0..0.5).contains(&self.jitter) {
            return Err(Error::InvalidConfig("perturbation must be in [0, 1), jitter in [0, 0.5)".into()));
        }
        if 86_400 * 365 % self.steps_per_year != 0 {
            return Err(Error::InvalidConfig(format!("steps_per_year {} does not divide a 365-day year into whole seconds", self.steps_per_year)));
        }
        Ok(())
    }

    /// Step length in days.
    pub fn step_days(&self) -> f64 {
        365.0 / self.steps_per_year as f64
    }

    pub fn step(&self) -> TimeDelta {
        TimeDelta::seconds((86_400 * 365 / self.steps_per_year) as i64)
    }
}

/// One generated basin with its true and perturbed parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FleetBasin {
    pub series: BasinSeries,
    pub position: f64,
    pub weather: WeatherConfig,
    pub truth: CatchmentParams,
    pub perturbed: CatchmentParams,
    /// Σ flow / Σ precip over the recorded run.
    pub runoff_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fleet {
    pub config: FleetConfig,
    pub basins: Vec<FleetBasin>,
}

fn jittered<R: Rng>(rng: &mut R, v: f64, j: f64) -> f64 {
    v * (1.0 + rng.random_range(-j..=j))
}

/// Multiplies each parameter by `1 ± r` (random sign); the snow threshold
/// shifts by `±4r` °C instead. Results are clamped back into validity.
pub fn perturb_params<R: Rng>(p: &CatchmentParams, r: f64, rng: &mut R) -> CatchmentParams {
    let mut sign = || if rng.random::<bool>() { 1.0 } else { -1.0 };
    let mut q = CatchmentParams {
        ddf: p.ddf * (1.0 + sign() * r),
        t_snow: p.t_snow + sign() * 4.0 * r,
        soil_cap: p.soil_cap * (1.0 + sign() * r),
        et_coeff: p.et_coeff * (1.0 + sign() * r),
        frac_fast: (p.frac_fast * (1.0 + sign() * r)).clamp(0.0, 1.0),
        k_fast: (p.k_fast * (1.0 + sign() * r)).min(1.0),
        k_slow: p.k_slow * (1.0 + sign() * r),
    };
    if q.k_slow >= q.k_fast {
        q.k_slow = 0.5 * q.k_fast;
    }
    q
}

fn basin_rng(seed: u64, basin: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(basin as u64 + 1);
    rng
}

/// Generates a fleet. Each basin draws its climate and catchment from the
/// regime profile with jitter; `response` comes from the true parameters,
/// `sim_response` from perturbed ones, both after a warm-up period.
pub fn make_fleet(cfg: &FleetConfig) -> Result<Fleet> {
    cfg.validate()?;
    let dt = cfg.step_days();
    let warm = cfg.warmup_years * cfg.steps_per_year;
    let n = cfg.years * cfg.steps_per_year;
    let mut basins = Vec::with_capacity(cfg.n_basins);
    for i in 0..cfg.n_basins {
        let mut rng = basin_rng(cfg.seed, i);
        let pos = cfg.regime.position(i, cfg.n_basins);
        let pr = profile_at(pos);
        let j = cfg.jitter;
        let wet_step = 1.0 - (1.0 - pr.wet_prob).powf(dt);
        let shape = 0.7;
        let weather = WeatherConfig {
            steps_per_year: cfg.steps_per_year,
            temp_mean: pr.temp_mean + rng.random_range(-1.0..=1.0),
            temp_amplitude: jittered(&mut rng, pr.temp_amplitude, j),
            temp_noise: pr.temp_noise,
            precip_prob: wet_step,
            precip_shape: shape,
            precip_scale: jittered(&mut rng, pr.precip_mean, j) * dt / (wet_step * shape),
            seed: rng.random(),
        };
        let per_step = |k: f64| 1.0 - (1.0 - k).powf(dt);
        let truth = CatchmentParams {
            ddf: jittered(&mut rng, pr.ddf, j) * dt,
            t_snow: pr.t_snow,
            soil_cap: jittered(&mut rng, pr.soil_cap, j),
            et_coeff: jittered(&mut rng, pr.et_coeff, j) * dt,
            frac_fast: jittered(&mut rng, pr.frac_fast, j).clamp(0.0, 1.0),
            k_fast: per_step(jittered(&mut rng, pr.k_fast, j)),
            k_slow: per_step(jittered(&mut rng, pr.k_slow, j)),
        };
        truth.validate()?;
        let perturbed = if cfg.perturbation == 0.0 { truth } else { perturb_params(&truth, cfg.perturbation, &mut rng) };
        perturbed.validate()?;

        let drivers = generate_weather(warm + n, &weather)?;
        let precip = drivers.col_values(0);
        let temp = drivers.col_values(1);
        let run = |p: &CatchmentParams| -> Result<Vec<f64>> { Ok(simulate(&precip, &temp, p, Stores::default())?.flow.split_off(warm)) };
        let flow = run(&truth)?;
        let sim = run(&perturbed)?;
        let d = drivers.as_slice()[2 * warm..].to_vec();
        let drivers = Matrix::from_vec(n, 2, d)?;
        let p_sum: f64 = (0..n).map(|t| drivers.get(t, 0)).sum();
        let q_sum: f64 = flow.iter().sum();
        let series = BasinSeries::regular(
            format!("basin_{i:02}"),
            cfg.start,
            cfg.step(),
            vec!["precip".into(), "temp".into()],
            drivers,
            flow,
            Some(sim),
        )?;
        if p_sum <= 0.0 {
            return Err(Error::Data(format!("basin {i}: no precipitation generated")));
        }
        basins.push(FleetBasin { series, position: pos, weather, truth, perturbed, runoff_ratio: q_sum / p_sum });
    }
    Ok(Fleet { config: cfg.clone(), basins })
}

impl Fleet {
    /// Writes one CSV per basin, `manifest.txt` (with `split`) and
    /// `fleet.csv` describing parameters and runoff ratios.
    pub fn write(&self, dir: &Path, split: &SplitSpec) -> Result<DatasetManifest> {
        std::fs::create_dir_all(dir)?;
        let mut basins = Vec::new();
        for b in &self.basins {
            let path = dir.join(format!("{}.csv", b.series.basin_id));
            write_csv(&b.series, &path)?;
            basins.push((b.series.basin_id.clone(), path));
        }
        let manifest = DatasetManifest { basins, split: *split };
        manifest.save(&dir.join("manifest.txt"))?;

        let io = |e: csv::Error| Error::Io(e.into());
        let mut w = csv::Writer::from_path(dir.join("fleet.csv")).map_err(io)?;
        let mut header = vec!["basin_id".to_string(), "regime".into(), "position".into(), "runoff_ratio".into()];
        for prefix in ["truth", "sim"] {
            header.extend(CatchmentParams::names().iter().map(|n| format!("{prefix}_{n}")));
        }
        w.write_record(&header).map_err(io)?;
        for b in &self.basins {
            let mut rec = vec![b.series.basin_id.clone(), self.config.regime.to_string(), b.position.to_string(), b.runoff_ratio.to_string()];
            rec.extend(b.truth.values().iter().map(|v| v.to_string()));
            rec.extend(b.perturbed.values().iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush()?;
        Ok(manifest)
    }
}
