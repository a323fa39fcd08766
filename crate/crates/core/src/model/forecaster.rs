//! The forecaster: FHNN (three-scale or single-scale encoder plus decoder)
//! and the LSTM / LSTM-AR baselines behind one interface.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Window;
use crate::error::{Error, Result};
use crate::model::config::{ModelConfig, ModelKind};
use crate::model::downsample::downsample_indices;
use crate::numerics::{Checkpoint, Matrix, ParamSet};
use crate::recurrent::{
    bilstm_backward, bilstm_embed, lstm_sequence, lstm_sequence_backward, mlp_backward, mlp_forward, BiLstmLayer,
    BiLstmOutput, LinearLayer, LstmLayer, LstmState, MlpCache, MlpLayer, SequenceCache,
};

/// Per-step hidden vectors of one encoder scale (forward + backward sum),
/// with the original history index of each row.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub indices: Vec<usize>,
    pub hidden: Matrix,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Mean over hidden dimensions at each step.
    pub fn step_means(&self) -> Vec<f64> {
        (0..self.hidden.rows())
            .map(|r| {
                let row = self.hidden.row(r);
                row.iter().sum::<f64>() / row.len() as f64
            })
            .collect()
    }
}

/// Encoder output: the latent state plus the per-scale trajectories that
/// produced it. Single-scale encoders leave `medium` and `slow` empty.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    pub z: Vec<f64>,
    pub fast: Trajectory,
    pub medium: Trajectory,
    pub slow: Trajectory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct FhnnArch {
    fast: BiLstmLayer,
    medium: Option<(BiLstmLayer, BiLstmLayer)>,
    latent: MlpLayer,
    decoder: LstmLayer,
    head: LinearLayer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct RecurrentArch {
    lstm: LstmLayer,
    head: LinearLayer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Arch {
    Fhnn(FhnnArch),
    Lstm(RecurrentArch),
    LstmAr(RecurrentArch),
}

/// A model kind, its configuration and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecaster {
    cfg: ModelConfig,
    params: ParamSet,
    arch: Arch,
}

struct EncoderPass {
    fast: BiLstmOutput,
    fast_steps: Matrix,
    scales: Option<ScalePass>,
    mlp: MlpCache,
    z: Vec<f64>,
}

struct ScalePass {
    med_idx: Vec<usize>,
    medium: BiLstmOutput,
    med_steps: Matrix,
    slow_idx: Vec<usize>,
    /// Medium tick feeding each slow tick.
    slow_align: Vec<usize>,
    slow: BiLstmOutput,
}

fn zero_columns(m: &mut Matrix, cols: std::ops::Range<usize>) {
    for r in 0..m.rows() {
        for c in cols.clone() {
            m.set(r, c, 0.0);
        }
    }
}

impl Forecaster {
    /// Fresh model with parameters drawn from `seed`.
    pub fn new(cfg: ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ps = ParamSet::new();
        let (d_x, h, dz) = (cfg.d_x, cfg.h_enc, cfg.d_z);
        // basin one-hot columns start at zero so every basin begins from the
        // shared model
        let onehot = d_x - cfg.onehot..d_x;
        let arch = match cfg.kind {
            ModelKind::Fhnn | ModelKind::FhnnSingle => {
                let fast = BiLstmLayer::register(&mut ps, "fast", d_x + 1, h, &mut rng)?;
                let medium = if cfg.kind == ModelKind::Fhnn {
                    let medium = BiLstmLayer::register(&mut ps, "medium", h, h, &mut rng)?;
                    let slow = BiLstmLayer::register(&mut ps, "slow", 2 * h, h, &mut rng)?;
                    Some((medium, slow))
                } else {
                    None
                };
                let n_scales = if medium.is_some() { 3 } else { 1 };
                let latent = MlpLayer::register(&mut ps, "latent", n_scales * h, dz, dz, &mut rng)?;
                let decoder = LstmLayer::register(&mut ps, "decoder", d_x, dz, &mut rng)?;
                let head = LinearLayer::register(&mut ps, "head", dz, 1, &mut rng)?;
                for layer in [fast.fwd, fast.bwd, decoder] {
                    zero_columns(ps.value_mut(layer.w_ih_index()), onehot.clone());
                }
                Arch::Fhnn(FhnnArch { fast, medium, latent, decoder, head })
            }
            ModelKind::Lstm => {
                let lstm = LstmLayer::register(&mut ps, "lstm", d_x, dz, &mut rng)?;
                let head = LinearLayer::register(&mut ps, "head", dz, 1, &mut rng)?;
                zero_columns(ps.value_mut(lstm.w_ih_index()), onehot);
                Arch::Lstm(RecurrentArch { lstm, head })
            }
            ModelKind::LstmAr => {
                let lstm = LstmLayer::register(&mut ps, "lstm", d_x + 1, dz, &mut rng)?;
                let head = LinearLayer::register(&mut ps, "head", dz, 1, &mut rng)?;
                zero_columns(ps.value_mut(lstm.w_ih_index()), onehot);
                Arch::LstmAr(RecurrentArch { lstm, head })
            }
        };
        Ok(Forecaster { cfg, params: ps, arch })
    }

    /// Rebuilds a model around existing parameters, checking names and
    /// shapes against the configuration.
    pub fn from_params(cfg: ModelConfig, params: ParamSet) -> Result<Self> {
        let mut model = Forecaster::new(cfg, 0)?;
        model.params.check_compatible(&params)?;
        model.params = params;
        model.params.zero_grads();
        Ok(model)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let cfg = ModelConfig::from_records(&ck.metadata)?;
        Forecaster::from_params(cfg, ck.params.clone())
    }

    /// Checkpoint holding parameters, the model config and `extra` records.
    pub fn to_checkpoint(&self, extra: &[(String, String)]) -> Checkpoint {
        let mut metadata = self.cfg.to_records();
        metadata.extend(extra.iter().cloned());
        Checkpoint { metadata, params: self.params.clone() }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn kind(&self) -> ModelKind {
        self.cfg.kind
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn num_parameters(&self) -> usize {
        self.params.num_scalars()
    }

    fn check_window(&self, w: &Window) -> Result<()> {
        let d_x = self.cfg.d_x;
        if w.x_hist.cols() != d_x || w.x_fcst.cols() != d_x {
            return Err(Error::shape("window drivers", (w.x_hist.cols(), w.x_fcst.cols()), (d_x, d_x)));
        }
        if w.x_hist.rows() != w.y_hist.len() || w.x_hist.rows() == 0 {
            return Err(Error::shape("window history", w.x_hist.shape(), (w.y_hist.len(), d_x)));
        }
        if w.x_fcst.rows() == 0 {
            return Err(Error::EmptySequence("forecast horizon"));
        }
        Ok(())
    }

    /// Infers the latent state from history. Only encoder-decoder kinds
    /// have one.
    pub fn encode(&self, x_hist: &Matrix, y_hist: &[f64]) -> Result<LatentState> {
        let Arch::Fhnn(arch) = &self.arch else {
            return Err(Error::InvalidConfig(format!("{} has no encoder", self.cfg.kind)));
        };
        if x_hist.cols() != self.cfg.d_x || x_hist.rows() != y_hist.len() || x_hist.rows() == 0 {
            return Err(Error::shape("encode", x_hist.shape(), (y_hist.len(), self.cfg.d_x)));
        }
        let pass = self.encode_pass(arch, x_hist, y_hist)?;
        let fast = Trajectory { indices: (0..x_hist.rows()).collect(), hidden: pass.fast_steps };
        let empty = || Trajectory { indices: vec![], hidden: Matrix::zeros(0, self.cfg.h_enc) };
        let (medium, slow) = match pass.scales {
            Some(sp) => (
                Trajectory { indices: sp.med_idx, hidden: sp.med_steps },
                Trajectory { indices: sp.slow_idx, hidden: sp.slow.summed_steps() },
            ),
            None => (empty(), empty()),
        };
        Ok(LatentState { z: pass.z, fast, medium, slow })
    }

    fn encode_pass(&self, arch: &FhnnArch, x_hist: &Matrix, y_hist: &[f64]) -> Result<EncoderPass> {
        let values = self.params.values();
        let t_len = x_hist.rows();
        let d_x = self.cfg.d_x;
        let mut inputs = Matrix::zeros(t_len, d_x + 1);
        for t in 0..t_len {
            let row = inputs.row_mut(t);
            row[..d_x].copy_from_slice(x_hist.row(t));
            row[d_x] = y_hist[t];
        }
        let fast = bilstm_embed(&inputs, &arch.fast.fwd.params(values), &arch.fast.bwd.params(values))?;
        let fast_steps = fast.summed_steps();
        let h = self.cfg.h_enc;

        let (scales, mlp_in) = match arch.medium {
            Some((medium_layer, slow_layer)) => {
                let (m, s) = (self.cfg.m, self.cfg.s);
                if t_len < s {
                    return Err(Error::InvalidConfig(format!(
                        "history of {t_len} steps is shorter than the slow stride {s}"
                    )));
                }
                let med_idx = downsample_indices(t_len, m)?;
                let mut med_in = Matrix::zeros(med_idx.len(), h);
                for (j, &t) in med_idx.iter().enumerate() {
                    med_in.row_mut(j).copy_from_slice(fast_steps.row(t));
                }
                let medium =
                    bilstm_embed(&med_in, &medium_layer.fwd.params(values), &medium_layer.bwd.params(values))?;
                let med_steps = medium.summed_steps();

                let slow_idx = downsample_indices(t_len, s)?;
                // medium tick whose block (idx-m, idx] contains t
                let slow_align: Vec<usize> =
                    slow_idx.iter().map(|&t| med_idx.partition_point(|&mi| mi < t)).collect();
                let mut slow_in = Matrix::zeros(slow_idx.len(), 2 * h);
                for (j, (&t, &a)) in slow_idx.iter().zip(&slow_align).enumerate() {
                    let row = slow_in.row_mut(j);
                    row[..h].copy_from_slice(med_steps.row(a));
                    row[h..].copy_from_slice(fast_steps.row(t));
                }
                let slow = bilstm_embed(&slow_in, &slow_layer.fwd.params(values), &slow_layer.bwd.params(values))?;
                let mut cat = Vec::with_capacity(3 * h);
                cat.extend_from_slice(&slow.embedding);
                cat.extend_from_slice(&medium.embedding);
                cat.extend_from_slice(&fast.embedding);
                (Some(ScalePass { med_idx, medium, med_steps, slow_idx, slow_align, slow }), cat)
            }
            None => (None, fast.embedding.clone()),
        };
        let (z, mlp) = mlp_forward(&mlp_in, &arch.latent.params(values))?;
        Ok(EncoderPass { fast, fast_steps, scales, mlp, z })
    }

    fn decode_pass(&self, arch: &FhnnArch, z: &[f64], x_fcst: &Matrix) -> Result<(SequenceCache, Vec<f64>)> {
        let values = self.params.values();
        let init = LstmState {
            h: z.to_vec(),
            c: if self.cfg.z_to_cell { z.to_vec() } else { vec![0.0; z.len()] },
        };
        let dec = lstm_sequence(x_fcst, &init, &arch.decoder.params(values))?;
        let y = head_outputs(&arch.head, values, &dec, 0);
        Ok((dec, y))
    }

    /// Forecast for the window's horizon (normalized units).
    pub fn predict(&self, w: &Window) -> Result<Vec<f64>> {
        self.check_window(w)?;
        let y = match &self.arch {
            Arch::Fhnn(arch) => {
                let enc = self.encode_pass(arch, &w.x_hist, &w.y_hist)?;
                self.decode_pass(arch, &enc.z, &w.x_fcst)?.1
            }
            Arch::Lstm(arch) => self.lstm_pass(arch, w)?.1,
            Arch::LstmAr(arch) => self.lstm_ar_pass(arch, w, false)?.1,
        };
        check_finite(&y, "forecast")?;
        Ok(y)
    }

    /// LSTM-AR forecast with observed responses fed back over the horizon.
    /// Identical to [`Forecaster::predict`] for the other kinds.
    pub fn predict_teacher_forced(&self, w: &Window) -> Result<Vec<f64>> {
        self.check_window(w)?;
        match &self.arch {
            Arch::LstmAr(arch) => Ok(self.lstm_ar_pass(arch, w, true)?.1),
            _ => self.predict(w),
        }
    }

    /// Mean squared error over the horizon; its gradient, multiplied by
    /// `scale`, is added to the parameter gradients.
    pub fn loss_and_grad(&mut self, w: &Window, scale: f64, teacher_forcing: bool) -> Result<f64> {
        self.check_window(w)?;
        let arch = self.arch;
        let loss = match arch {
            Arch::Fhnn(a) => self.fhnn_backward(&a, w, scale)?,
            Arch::Lstm(a) => self.lstm_backward(&a, w, scale)?,
            Arch::LstmAr(a) => self.lstm_ar_backward(&a, w, scale, teacher_forcing)?,
        };
        if !loss.is_finite() {
            return Err(Error::NonFinite("loss".into()));
        }
        Ok(loss)
    }

    fn fhnn_backward(&mut self, arch: &FhnnArch, w: &Window, scale: f64) -> Result<f64> {
        let enc = self.encode_pass(arch, &w.x_hist, &w.y_hist)?;
        let (dec, y_hat) = self.decode_pass(arch, &enc.z, &w.x_fcst)?;
        let (l, dy) = mse_and_grad(&y_hat, &w.y_fcst, scale)?;
        let h = self.cfg.h_enc;
        let dz_len = self.cfg.d_z;
        let (values, grads) = self.params.split_mut();

        let dh_dec = head_backward(&arch.head, values, grads, &dec, 0, &dy);
        let dp = arch.decoder.params(values);
        let dec_g = lstm_sequence_backward(&dec, &dp, &mut arch.decoder.grads(grads), &dh_dec, None)?;
        let mut dz = dec_g.dh0;
        if self.cfg.z_to_cell {
            for (a, b) in dz.iter_mut().zip(&dec_g.dc0) {
                *a += b;
            }
        }
        debug_assert_eq!(dz.len(), dz_len);
        let dcat = mlp_backward(&dz, &enc.mlp, &arch.latent.params(values), &mut arch.latent.grads(grads))?;

        let t_len = enc.fast.len();
        let mut d_fast_steps = Matrix::zeros(t_len, h);
        let d_fast_emb = match (&enc.scales, arch.medium) {
            (Some(sp), Some((medium_layer, slow_layer))) => {
                let (d_slow_emb, rest) = dcat.split_at(h);
                let (d_med_emb, d_fast_emb) = rest.split_at(h);

                let n_s = sp.slow.len();
                let zeros = Matrix::zeros(n_s, h);
                let d_slow_in = {
                    let (mut fg, mut bg) = slow_layer.grads(grads);
                    bilstm_backward(
                        &sp.slow,
                        &slow_layer.fwd.params(values),
                        &slow_layer.bwd.params(values),
                        &mut fg,
                        &mut bg,
                        &zeros,
                        &zeros,
                        d_slow_emb,
                    )?
                };
                let mut d_med_steps = Matrix::zeros(sp.med_idx.len(), h);
                for j in 0..n_s {
                    let row = d_slow_in.row(j);
                    add_into(d_med_steps.row_mut(sp.slow_align[j]), &row[..h]);
                    add_into(d_fast_steps.row_mut(sp.slow_idx[j]), &row[h..]);
                }
                let d_med_in = {
                    let (mut fg, mut bg) = medium_layer.grads(grads);
                    bilstm_backward(
                        &sp.medium,
                        &medium_layer.fwd.params(values),
                        &medium_layer.bwd.params(values),
                        &mut fg,
                        &mut bg,
                        &d_med_steps,
                        &d_med_steps,
                        d_med_emb,
                    )?
                };
                for (j, &t) in sp.med_idx.iter().enumerate() {
                    add_into(d_fast_steps.row_mut(t), d_med_in.row(j));
                }
                d_fast_emb.to_vec()
            }
            _ => dcat,
        };
        let (mut fg, mut bg) = arch.fast.grads(grads);
        bilstm_backward(
            &enc.fast,
            &arch.fast.fwd.params(values),
            &arch.fast.bwd.params(values),
            &mut fg,
            &mut bg,
            &d_fast_steps,
            &d_fast_steps,
            &d_fast_emb,
        )?;
        Ok(l)
    }

    fn lstm_pass(&self, arch: &RecurrentArch, w: &Window) -> Result<(SequenceCache, Vec<f64>)> {
        let values = self.params.values();
        let (t_len, k) = (w.x_hist.rows(), w.x_fcst.rows());
        let mut xs = Matrix::zeros(t_len + k, self.cfg.d_x);
        for t in 0..t_len {
            xs.row_mut(t).copy_from_slice(w.x_hist.row(t));
        }
        for j in 0..k {
            xs.row_mut(t_len + j).copy_from_slice(w.x_fcst.row(j));
        }
        let seq = lstm_sequence(&xs, &LstmState::zeros(self.cfg.d_z), &arch.lstm.params(values))?;
        let y = head_outputs(&arch.head, values, &seq, t_len);
        Ok((seq, y))
    }

    fn lstm_backward(&mut self, arch: &RecurrentArch, w: &Window, scale: f64) -> Result<f64> {
        let (seq, y_hat) = self.lstm_pass(arch, w)?;
        let (l, dy) = mse_and_grad(&y_hat, &w.y_fcst, scale)?;
        let (values, grads) = self.params.split_mut();
        let t_len = w.x_hist.rows();
        let dhs = head_backward(&arch.head, values, grads, &seq, t_len, &dy);
        let lp = arch.lstm.params(values);
        lstm_sequence_backward(&seq, &lp, &mut arch.lstm.grads(grads), &dhs, None)?;
        Ok(l)
    }

    /// Unrolls history with `[x_t; y_{t-1}]` inputs (the first step repeats
    /// y_0), then the horizon seeded by the last observed response and fed
    /// by its own predictions, or by observations when `teacher_forcing`.
    fn lstm_ar_pass(&self, arch: &RecurrentArch, w: &Window, teacher_forcing: bool) -> Result<(SequenceCache, Vec<f64>)> {
        let values = self.params.values();
        let p = arch.lstm.params(values);
        let d_x = self.cfg.d_x;
        let (t_len, k) = (w.x_hist.rows(), w.x_fcst.rows());
        if teacher_forcing && w.y_fcst.len() != k {
            return Err(Error::shape("teacher forcing", (w.y_fcst.len(), 1), (k, 1)));
        }
        let mut seq = SequenceCache::start(d_x + 1, &LstmState::zeros(self.cfg.d_z), t_len + k);
        let mut input = vec![0.0; d_x + 1];
        for t in 0..t_len {
            input[..d_x].copy_from_slice(w.x_hist.row(t));
            input[d_x] = w.y_hist[t.saturating_sub(1)];
            seq.push(&p, &input);
        }
        let head_w = arch.head.weight(values);
        let head_b = arch.head.bias(values).as_slice()[0];
        let mut y_hat = Vec::with_capacity(k);
        let mut prev = w.y_hist[t_len - 1];
        for j in 0..k {
            input[..d_x].copy_from_slice(w.x_fcst.row(j));
            input[d_x] = prev;
            seq.push(&p, &input);
            let y = head_b + crate::numerics::dot(head_w.as_slice(), seq.hidden(t_len + j));
            y_hat.push(y);
            prev = if teacher_forcing { w.y_fcst[j] } else { y };
        }
        Ok((seq, y_hat))
    }

    fn lstm_ar_backward(&mut self, arch: &RecurrentArch, w: &Window, scale: f64, teacher_forcing: bool) -> Result<f64> {
        let (seq, y_hat) = self.lstm_ar_pass(arch, w, teacher_forcing)?;
        let (l, mut dy) = mse_and_grad(&y_hat, &w.y_fcst, scale)?;
        let (values, grads) = self.params.split_mut();
        let p = arch.lstm.params(values);
        let head_w = arch.head.weight(values).as_slice().to_vec();
        let hw = arch.head.bias_index() - 1;
        let mut g = arch.lstm.grads(grads);
        let (d_x, hsz) = (self.cfg.d_x, self.cfg.d_z);
        let (t_len, k) = (w.x_hist.rows(), w.x_fcst.rows());
        let mut head_gw = vec![0.0; hsz];
        let mut head_gb = 0.0;

        let mut dh_next = vec![0.0; hsz];
        let mut dc_next = vec![0.0; hsz];
        let mut dh = vec![0.0; hsz];
        let mut dh_prev = vec![0.0; hsz];
        let mut dc_prev = vec![0.0; hsz];
        let mut dx = vec![0.0; d_x + 1];
        let mut dpre = vec![0.0; 4 * hsz];
        for t in (0..t_len + k).rev() {
            dh.copy_from_slice(&dh_next);
            if t >= t_len {
                let j = t - t_len;
                let d = dy[j];
                let h_t = seq.hidden(t);
                for i in 0..hsz {
                    head_gw[i] += d * h_t[i];
                    dh[i] += d * head_w[i];
                }
                head_gb += d;
            }
            dx.iter_mut().for_each(|v| *v = 0.0);
            dh_prev.iter_mut().for_each(|v| *v = 0.0);
            seq.backward_step(t, &p, &mut g, &dh, &dc_next, &mut dpre, &mut dx, &mut dh_prev, &mut dc_prev);
            if !teacher_forcing && t > t_len {
                // input at step t carried the prediction made at step t-1
                dy[t - t_len - 1] += dx[d_x];
            }
            std::mem::swap(&mut dh_next, &mut dh_prev);
            std::mem::swap(&mut dc_next, &mut dc_prev);
        }
        add_into(grads[hw].as_mut_slice(), &head_gw);
        grads[hw + 1].as_mut_slice()[0] += head_gb;
        Ok(l)
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.into()))
    }
}

/// Head applied to hidden states `offset..` of `seq`.
fn head_outputs(head: &LinearLayer, values: &[Matrix], seq: &SequenceCache, offset: usize) -> Vec<f64> {
    let mut out = [0.0];
    (offset..seq.len())
        .map(|t| {
            head.forward(values, seq.hidden(t), &mut out);
            out[0]
        })
        .collect()
}

/// Head backward for hidden states `offset..`; returns ∂L/∂h for every
/// step of `seq` (zero before `offset`).
fn head_backward(
    head: &LinearLayer,
    values: &[Matrix],
    grads: &mut [Matrix],
    seq: &SequenceCache,
    offset: usize,
    dy: &[f64],
) -> Matrix {
    let mut dhs = Matrix::zeros(seq.len(), seq.hidden_size());
    for (j, d) in dy.iter().enumerate() {
        let t = offset + j;
        head.backward(values, grads, seq.hidden(t), &[*d], dhs.row_mut(t));
    }
    dhs
}

/// Mean squared error and `scale · ∂MSE/∂ŷ`.
fn mse_and_grad(y_hat: &[f64], y: &[f64], scale: f64) -> Result<(f64, Vec<f64>)> {
    let l = mse(y_hat, y)?;
    let k = y.len() as f64;
    let dy = y_hat.iter().zip(y).map(|(p, o)| scale * 2.0 * (p - o) / k).collect();
    Ok((l, dy))
}

/// Mean squared error over the forecast horizon.
pub fn mse(y_hat: &[f64], y: &[f64]) -> Result<f64> {
    if y_hat.len() != y.len() {
        return Err(Error::shape("mse", (y_hat.len(), 1), (y.len(), 1)));
    }
    if y.is_empty() {
        return Err(Error::EmptySequence("mse"));
    }
    Ok(y_hat.iter().zip(y).map(|(p, o)| (p - o) * (p - o)).sum::<f64>() / y.len() as f64)
}
