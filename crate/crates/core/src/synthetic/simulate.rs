use crate::error::{Error, Result};

/// Bucket-model parameters, in per-step units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatchmentParams {
    /// Degree-day melt factor, mm / °C / step.
    pub ddf: f64,
    /// Snow/rain threshold, °C.
    pub t_snow: f64,
    /// Soil capacity, mm.
    pub soil_cap: f64,
    /// Fraction of soil water evaporated per step per °C above zero.
    pub et_coeff: f64,
    /// Share of soil overflow routed to the fast reservoir.
    pub frac_fast: f64,
    pub k_fast: f64,
    pub k_slow: f64,
}

impl CatchmentParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.ddf, self.t_snow, self.soil_cap, self.et_coeff, self.frac_fast, self.k_fast, self.k_slow];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("catchment parameters must be finite".into()));
        }
        if self.ddf < 0.0 || self.soil_cap < 0.0 || self.et_coeff < 0.0 {
            return Err(Error::InvalidConfig("ddf, soil_cap and et_coeff must be nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.frac_fast) {
            return Err(Error::InvalidConfig(format!("frac_fast {} outside [0, 1]", self.frac_fast)));
        }
        if !(self.k_slow > 0.0 && self.k_slow < self.k_fast && self.k_fast <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "reservoir constants must satisfy 0 < k_slow < k_fast <= 1, got {} / {}",
                self.k_slow, self.k_fast
            )));
        }
        Ok(())
    }

    pub fn names() -> [&'static str; 7] {
        ["ddf", "t_snow", "soil_cap", "et_coeff", "frac_fast", "k_fast", "k_slow"]
    }

    pub fn values(&self) -> [f64; 7] {
        [self.ddf, self.t_snow, self.soil_cap, self.et_coeff, self.frac_fast, self.k_fast, self.k_slow]
    }
}

/// Storage state, mm.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stores {
    pub snow: f64,
    pub soil: f64,
    pub fast: f64,
    pub slow: f64,
}

impl Stores {
    pub fn total(&self) -> f64 {
        self.snow + self.soil + self.fast + self.slow
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub flow: Vec<f64>,
    pub et: Vec<f64>,
    /// State after each step.
    pub stores: Vec<Stores>,
}

/// Runs the bucket model. Per step: precipitation falls as snow at or
/// below `t_snow`, otherwise as rain; melt = min(snow, ddf·max(T − t_snow, 0));
/// rain and melt enter the soil, which then loses
/// ET = min(et_coeff·max(T, 0), 1)·soil and spills anything above
/// `soil_cap`; the spill splits `frac_fast` / `1 − frac_fast` between the
/// reservoirs, each of which releases `k`·storage.
pub fn simulate(precip: &[f64], temp: &[f64], p: &CatchmentParams, init: Stores) -> Result<SimOutput> {
    p.validate()?;
    if precip.len() != temp.len() {
        return Err(Error::shape("simulate", (precip.len(), 1), (temp.len(), 1)));
    }
    if precip.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) || temp.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("precipitation must be finite and nonnegative, temperature finite".into()));
    }
    let n = precip.len();
    let mut out = SimOutput { flow: Vec::with_capacity(n), et: Vec::with_capacity(n), stores: Vec::with_capacity(n) };
    let mut s = init;
    for (&pr, &t) in precip.iter().zip(temp) {
        let rain = if t <= p.t_snow {
            s.snow += pr;
            0.0
        } else {
            pr
        };
        let melt = s.snow.min(p.ddf * (t - p.t_snow).max(0.0));
        s.snow -= melt;
        s.soil += rain + melt;
        let et = (p.et_coeff * t.max(0.0)).min(1.0) * s.soil;
        s.soil -= et;
        let spill = (s.soil - p.soil_cap).max(0.0);
        s.soil -= spill;
        s.fast += p.frac_fast * spill;
        s.slow += (1.0 - p.frac_fast) * spill;
        let q_fast = p.k_fast * s.fast;
        let q_slow = p.k_slow * s.slow;
        s.fast -= q_fast;
        s.slow -= q_slow;
        out.flow.push(q_fast + q_slow);
        out.et.push(et);
        out.stores.push(s);
    }
    Ok(out)
}
