use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Three-scale factorized encoder with latent-initialised decoder.
    Fhnn,
    /// One-scale variant: a single BiLSTM feeds the latent MLP.
    FhnnSingle,
    /// Plain LSTM over drivers only.
    Lstm,
    /// LSTM over drivers plus the previous response value.
    LstmAr,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Fhnn => "fhnn",
            ModelKind::FhnnSingle => "fhnn_single",
            ModelKind::Lstm => "lstm",
            ModelKind::LstmAr => "lstm_ar",
        }
    }

    pub fn has_encoder(&self) -> bool {
        matches!(self, ModelKind::Fhnn | ModelKind::FhnnSingle)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fhnn" => Ok(ModelKind::Fhnn),
            "fhnn_single" => Ok(ModelKind::FhnnSingle),
            "lstm" => Ok(ModelKind::Lstm),
            "lstm_ar" => Ok(ModelKind::LstmAr),
            other => Err(Error::InvalidConfig(format!("unknown model kind `{other}`"))),
        }
    }
}

/// Architecture and window shape of a forecaster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Driver columns, including any basin one-hot block.
    pub d_x: usize,
    /// Per-scale encoder hidden size.
    pub h_enc: usize,
    /// Medium-scale stride in steps.
    pub m: usize,
    /// Slow-scale stride in steps.
    pub s: usize,
    /// Latent size; also the decoder (and baseline) hidden size.
    pub d_z: usize,
    pub t_in: usize,
    pub k: usize,
    /// Seed the decoder cell state with z as well as the hidden state.
    pub z_to_cell: bool,
    /// Trailing driver columns holding a basin one-hot code.
    pub onehot: usize,
}

impl ModelConfig {
    /// NWS six-hourly configuration: 720-step history, 28-step horizon,
    /// 11 encoder units, 32 latent/decoder units, daily and weekly strides.
    pub fn nws(kind: ModelKind, d_x: usize) -> Self {
        ModelConfig { kind, d_x, h_enc: 11, m: 4, s: 28, d_z: 32, t_in: 720, k: 28, z_to_cell: false, onehot: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.d_x == 0 {
            return bad("d_x must be positive".into());
        }
        if self.onehot > self.d_x {
            return bad(format!("onehot block ({}) larger than d_x ({})", self.onehot, self.d_x));
        }
        if self.d_z == 0 || self.k == 0 || self.t_in == 0 {
            return bad("d_z, k and t_in must be positive".into());
        }
        if self.kind.has_encoder() && self.h_enc == 0 {
            return bad("h_enc must be positive".into());
        }
        if self.kind == ModelKind::Fhnn {
            if self.m < 1 || self.m > self.s {
                return bad(format!("strides must satisfy 1 <= m <= s, got m={} s={}", self.m, self.s));
            }
            if self.s > self.t_in {
                return bad(format!("slow stride {} exceeds input length {}", self.s, self.t_in));
            }
        }
        Ok(())
    }

    /// Flat `key=value` records, embedded in checkpoints.
    pub fn to_records(&self) -> Vec<(String, String)> {
        vec![
            ("model".into(), self.kind.to_string()),
            ("d_x".into(), self.d_x.to_string()),
            ("h_enc".into(), self.h_enc.to_string()),
            ("m".into(), self.m.to_string()),
            ("s".into(), self.s.to_string()),
            ("d_z".into(), self.d_z.to_string()),
            ("t_in".into(), self.t_in.to_string()),
            ("k".into(), self.k.to_string()),
            ("z_to_cell".into(), self.z_to_cell.to_string()),
            ("onehot".into(), self.onehot.to_string()),
        ]
    }

    pub fn from_records(records: &[(String, String)]) -> Result<Self> {
        let get = |key: &str| -> Result<&str> {
            records
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::Checkpoint(format!("missing config record `{key}`")))
        };
        let num = |key: &str| -> Result<usize> {
            get(key)?.parse().map_err(|_| Error::Checkpoint(format!("bad value for `{key}`")))
        };
        let cfg = ModelConfig {
            kind: get("model")?.parse()?,
            d_x: num("d_x")?,
            h_enc: num("h_enc")?,
            m: num("m")?,
            s: num("s")?,
            d_z: num("d_z")?,
            t_in: num("t_in")?,
            k: num("k")?,
            z_to_cell: get("z_to_cell")? == "true",
            onehot: num("onehot")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
