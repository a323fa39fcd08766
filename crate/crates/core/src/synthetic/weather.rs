use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Seasonal temperature and intermittent gamma-distributed precipitation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherConfig {
    pub steps_per_year: usize,
    pub temp_mean: f64,
    pub temp_amplitude: f64,
    pub temp_noise: f64,
    /// Probability that a step is wet.
    pub precip_prob: f64,
    /// Gamma shape and scale of wet-step amounts (mm).
    pub precip_shape: f64,
    pub precip_scale: f64,
    pub seed: u64,
}

impl WeatherConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps_per_year == 0 {
            return Err(Error::InvalidConfig("steps_per_year must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.precip_prob) {
            return Err(Error::InvalidConfig(format!("precip_prob {} outside [0, 1]", self.precip_prob)));
        }
        if !(self.precip_shape > 0.0 && self.precip_scale > 0.0 && self.temp_noise >= 0.0) {
            return Err(Error::InvalidConfig("gamma parameters must be positive and noise nonnegative".into()));
        }
        Ok(())
    }

    /// Expected precipitation per step.
    pub fn mean_precip(&self) -> f64 {
        self.precip_prob * self.precip_shape * self.precip_scale
    }

    /// Noise-free temperature at step `t`; coldest at the start of each year.
    pub fn seasonal_temp(&self, t: usize) -> f64 {
        let phase = 2.0 * std::f64::consts::PI * (t % self.steps_per_year) as f64 / self.steps_per_year as f64;
        self.temp_mean - self.temp_amplitude * phase.cos()
    }
}

/// `n_steps x 2` matrix of (precip, temp).
pub fn generate_weather(n_steps: usize, cfg: &WeatherConfig) -> Result<Matrix> {
    cfg.validate()?;
    if n_steps == 0 {
        return Err(Error::InvalidConfig("n_steps must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let gamma = Gamma::new(cfg.precip_shape, cfg.precip_scale).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let noise = Normal::new(0.0, cfg.temp_noise).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut data = Vec::with_capacity(2 * n_steps);
    for t in 0..n_steps {
        let wet = rng.random::<f64>() < cfg.precip_prob;
        let amount = gamma.sample(&mut rng);
        let eps = noise.sample(&mut rng);
        data.push(if wet { amount } else { 0.0 });
        data.push(cfg.seasonal_temp(t) + eps);
    }
    Matrix::from_vec(n_steps, 2, data)
}
