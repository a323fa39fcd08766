//! Bidirectional sequence encoder: a forward LSTM over the sequence and a
//! backward LSTM over its reversal. The embedding is the sum of the two
//! terminal hidden states.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{Matrix, ParamSet};
use crate::recurrent::lstm::{
    lstm_sequence, lstm_sequence_backward, LstmGrads, LstmLayer, LstmParams, LstmState, SequenceCache,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BiLstmLayer {
    pub fwd: LstmLayer,
    pub bwd: LstmLayer,
}

impl BiLstmLayer {
    pub fn register<R: Rng + ?Sized>(
        ps: &mut ParamSet,
        prefix: &str,
        input_size: usize,
        hidden_size: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let fwd = LstmLayer::register(ps, &format!("{prefix}.fwd"), input_size, hidden_size, rng)?;
        let bwd = LstmLayer::register(ps, &format!("{prefix}.bwd"), input_size, hidden_size, rng)?;
        Ok(BiLstmLayer { fwd, bwd })
    }

    pub fn hidden_size(&self) -> usize {
        self.fwd.hidden_size
    }

    /// Gradient views for both directions at once.
    pub fn grads<'a>(&self, grads: &'a mut [Matrix]) -> (LstmGrads<'a>, LstmGrads<'a>) {
        let split = self.bwd.w_ih_index();
        debug_assert!(self.fwd.w_ih_index() < split);
        let (a, b) = grads.split_at_mut(split);
        (self.fwd.grads(a), self.bwd.grads_in(b, split))
    }
}

/// Forward pass record. Backward-direction steps are stored in reversed
/// time; accessors translate back to original indices.
#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmOutput {
    pub fwd: SequenceCache,
    pub bwd: SequenceCache,
    pub embedding: Vec<f64>,
}

impl BiLstmOutput {
    pub fn len(&self) -> usize {
        self.fwd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fwd.is_empty()
    }

    pub fn hidden_size(&self) -> usize {
        self.fwd.hidden_size()
    }

    pub fn fwd_hidden(&self, t: usize) -> &[f64] {
        self.fwd.hidden(t)
    }

    /// Backward-direction hidden state aligned to original step `t`.
    pub fn bwd_hidden(&self, t: usize) -> &[f64] {
        self.bwd.hidden(self.len() - 1 - t)
    }

    /// Per-step `fwd + bwd` hidden vectors as a `len x H` matrix.
    pub fn summed_steps(&self) -> Matrix {
        let (n, h) = (self.len(), self.hidden_size());
        let mut out = Matrix::zeros(n, h);
        for t in 0..n {
            let (f, b) = (self.fwd_hidden(t), self.bwd_hidden(t));
            for (o, (x, y)) in out.row_mut(t).iter_mut().zip(f.iter().zip(b)) {
                *o = x + y;
            }
        }
        out
    }
}

fn reversed_rows(m: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for t in 0..m.rows() {
        out.row_mut(m.rows() - 1 - t).copy_from_slice(m.row(t));
    }
    out
}

/// Runs both directions from zero state. The embedding is the forward
/// hidden at the last step plus the backward hidden at the first step.
pub fn bilstm_embed(xs: &Matrix, fwd: &LstmParams, bwd: &LstmParams) -> Result<BiLstmOutput> {
    if fwd.hidden_size() != bwd.hidden_size() {
        return Err(Error::shape(
            "bilstm_embed hidden",
            (fwd.hidden_size(), 1),
            (bwd.hidden_size(), 1),
        ));
    }
    let h = fwd.hidden_size();
    let f = lstm_sequence(xs, &LstmState::zeros(h), fwd)?;
    let b = lstm_sequence(&reversed_rows(xs), &LstmState::zeros(h), bwd)?;
    let n = xs.rows();
    let embedding = f.hidden(n - 1).iter().zip(b.hidden(n - 1)).map(|(x, y)| x + y).collect();
    Ok(BiLstmOutput { fwd: f, bwd: b, embedding })
}

/// Backward through [`bilstm_embed`].
///
/// `d_fwd_steps` / `d_bwd_steps` are ∂L/∂(per-step hidden) of each
/// direction in original time order; `d_embedding` is ∂L/∂embedding.
/// Returns ∂L/∂xs.
#[allow(clippy::too_many_arguments)]
pub fn bilstm_backward(
    out: &BiLstmOutput,
    fwd: &LstmParams,
    bwd: &LstmParams,
    fwd_grads: &mut LstmGrads,
    bwd_grads: &mut LstmGrads,
    d_fwd_steps: &Matrix,
    d_bwd_steps: &Matrix,
    d_embedding: &[f64],
) -> Result<Matrix> {
    let (n, h) = (out.len(), out.hidden_size());
    if d_fwd_steps.shape() != (n, h) || d_bwd_steps.shape() != (n, h) {
        return Err(Error::shape("bilstm_backward", d_fwd_steps.shape(), (n, h)));
    }
    if d_embedding.len() != h {
        return Err(Error::shape("bilstm_backward embedding", (d_embedding.len(), 1), (h, 1)));
    }
    let mut df = d_fwd_steps.clone();
    for (v, e) in df.row_mut(n - 1).iter_mut().zip(d_embedding) {
        *v += e;
    }
    // backward-direction step r corresponds to original step n-1-r
    let mut db = reversed_rows(d_bwd_steps);
    for (v, e) in db.row_mut(n - 1).iter_mut().zip(d_embedding) {
        *v += e;
    }
    let gf = lstm_sequence_backward(&out.fwd, fwd, fwd_grads, &df, None)?;
    let gb = lstm_sequence_backward(&out.bwd, bwd, bwd_grads, &db, None)?;
    let mut dxs = gf.dxs;
    for t in 0..n {
        let src = gb.dxs.row(n - 1 - t).to_vec();
        for (d, s) in dxs.row_mut(t).iter_mut().zip(src) {
            *d += s;
        }
    }
    Ok(dxs)
}
