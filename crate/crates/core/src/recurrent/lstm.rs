//! LSTM cell and unidirectional unrolling with hand-written backward passes.
//!
//! Gate row blocks are ordered `[input, forget, candidate, output]`:
//!
//! ```text
//! i, f, o = σ(W_ih x + W_hh h + b)   g = tanh(…)
//! c' = f ⊙ c + i ⊙ g                 h' = o ⊙ tanh(c')
//! ```

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{gemv_acc, gemv_t_acc, outer_acc, Matrix, ParamSet};

/// Borrowed view of one LSTM's weights.
#[derive(Debug, Clone, Copy)]
pub struct LstmParams<'a> {
    pub w_ih: &'a Matrix,
    pub w_hh: &'a Matrix,
    pub b: &'a Matrix,
}

impl<'a> LstmParams<'a> {
    pub fn input_size(&self) -> usize {
        self.w_ih.cols()
    }

    pub fn hidden_size(&self) -> usize {
        self.w_hh.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hidden_size();
        if self.w_hh.rows() != 4 * h {
            return Err(Error::shape("LstmParams::w_hh", self.w_hh.shape(), (4 * h, h)));
        }
        if self.w_ih.rows() != 4 * h {
            return Err(Error::shape("LstmParams::w_ih", self.w_ih.shape(), (4 * h, self.input_size())));
        }
        if self.b.shape() != (4 * h, 1) {
            return Err(Error::shape("LstmParams::b", self.b.shape(), (4 * h, 1)));
        }
        Ok(())
    }
}

/// Mutable gradient buffers matching [`LstmParams`]. Backward passes add
/// into them.
#[derive(Debug)]
pub struct LstmGrads<'a> {
    pub w_ih: &'a mut Matrix,
    pub w_hh: &'a mut Matrix,
    pub b: &'a mut Matrix,
}

/// Location of an LSTM's three parameters inside a [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmLayer {
    first: usize,
    pub input_size: usize,
    pub hidden_size: usize,
}

impl LstmLayer {
    /// Registers `{prefix}.w_ih`, `{prefix}.w_hh`, `{prefix}.b`.
    ///
    /// Weights and biases are uniform in ±1/√H; the forget-gate bias block
    /// starts at 1.0.
    pub fn register<R: Rng + ?Sized>(
        ps: &mut ParamSet,
        prefix: &str,
        input_size: usize,
        hidden_size: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if input_size == 0 || hidden_size == 0 {
            return Err(Error::InvalidConfig(format!("{prefix}: LSTM sizes must be positive")));
        }
        let h = hidden_size;
        let bound = 1.0 / (h as f64).sqrt();
        let mut uniform = |r: usize, c: usize| {
            let data = (0..r * c).map(|_| rng.random_range(-bound..=bound)).collect();
            Matrix::from_vec(r, c, data)
        };
        let w_ih = uniform(4 * h, input_size)?;
        let w_hh = uniform(4 * h, h)?;
        let mut b = uniform(4 * h, 1)?;
        b.as_mut_slice()[h..2 * h].iter_mut().for_each(|v| *v = 1.0);
        let first = ps.add(format!("{prefix}.w_ih"), w_ih)?;
        ps.add(format!("{prefix}.w_hh"), w_hh)?;
        ps.add(format!("{prefix}.b"), b)?;
        Ok(LstmLayer { first, input_size, hidden_size })
    }

    pub fn w_ih_index(&self) -> usize {
        self.first
    }

    pub fn params<'a>(&self, values: &'a [Matrix]) -> LstmParams<'a> {
        LstmParams { w_ih: &values[self.first], w_hh: &values[self.first + 1], b: &values[self.first + 2] }
    }

    pub fn grads<'a>(&self, grads: &'a mut [Matrix]) -> LstmGrads<'a> {
        self.grads_in(grads, 0)
    }

    /// Like [`LstmLayer::grads`] for a sub-slice that starts at index `base`.
    pub(crate) fn grads_in<'a>(&self, grads: &'a mut [Matrix], base: usize) -> LstmGrads<'a> {
        let first = self.first - base;
        match &mut grads[first..first + 3] {
            [w_ih, w_hh, b] => LstmGrads { w_ih, w_hh, b },
            _ => unreachable!(),
        }
    }
}

/// Hidden and cell state, each of length H.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        LstmState { h: vec![0.0; hidden], c: vec![0.0; hidden] }
    }
}

/// Everything one cell step needs for its backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    /// Post-activation gates `[i, f, g, o]`.
    pub gates: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellGrads {
    pub dx: Vec<f64>,
    pub dh_prev: Vec<f64>,
    pub dc_prev: Vec<f64>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn cell_forward_raw(
    p: &LstmParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    gates: &mut [f64],
    c: &mut [f64],
    tanh_c: &mut [f64],
    h: &mut [f64],
) {
    let hs = h.len();
    gates.copy_from_slice(p.b.as_slice());
    gemv_acc(p.w_ih, x, gates);
    gemv_acc(p.w_hh, h_prev, gates);
    let (gi, rest) = gates.split_at_mut(hs);
    let (gf, rest) = rest.split_at_mut(hs);
    let (gg, go) = rest.split_at_mut(hs);
    for j in 0..hs {
        let i = sigmoid(gi[j]);
        let f = sigmoid(gf[j]);
        let g = gg[j].tanh();
        let o = sigmoid(go[j]);
        gi[j] = i;
        gf[j] = f;
        gg[j] = g;
        go[j] = o;
        let cj = f * c_prev[j] + i * g;
        let tc = cj.tanh();
        c[j] = cj;
        tanh_c[j] = tc;
        h[j] = o * tc;
    }
}

/// Backward through one cell. `dx` and `dh_prev` are accumulated into,
/// `dc_prev` and `dpre` are overwritten.
#[allow(clippy::too_many_arguments)]
#[inline]
fn cell_backward_raw(
    p: &LstmParams,
    g: &mut LstmGrads,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    gates: &[f64],
    tanh_c: &[f64],
    dh: &[f64],
    dc_in: &[f64],
    dpre: &mut [f64],
    dx: &mut [f64],
    dh_prev: &mut [f64],
    dc_prev: &mut [f64],
) {
    let hs = dh.len();
    for j in 0..hs {
        let i = gates[j];
        let f = gates[hs + j];
        let gg = gates[2 * hs + j];
        let o = gates[3 * hs + j];
        let tc = tanh_c[j];
        let dc = dc_in[j] + dh[j] * o * (1.0 - tc * tc);
        let d_o = dh[j] * tc;
        dpre[j] = dc * gg * i * (1.0 - i);
        dpre[hs + j] = dc * c_prev[j] * f * (1.0 - f);
        dpre[2 * hs + j] = dc * i * (1.0 - gg * gg);
        dpre[3 * hs + j] = d_o * o * (1.0 - o);
        dc_prev[j] = dc * f;
    }
    outer_acc(g.w_ih, dpre, x);
    outer_acc(g.w_hh, dpre, h_prev);
    for (b, d) in g.b.as_mut_slice().iter_mut().zip(dpre.iter()) {
        *b += d;
    }
    gemv_t_acc(p.w_ih, dpre, dx);
    gemv_t_acc(p.w_hh, dpre, dh_prev);
}

/// One cell step.
pub fn lstm_cell_forward(x: &[f64], prev: &LstmState, p: &LstmParams) -> Result<(LstmState, CellCache)> {
    p.validate()?;
    let h = p.hidden_size();
    if x.len() != p.input_size() {
        return Err(Error::shape("lstm_cell_forward", (x.len(), 1), (p.input_size(), 1)));
    }
    if prev.h.len() != h || prev.c.len() != h {
        return Err(Error::shape("lstm_cell_forward", (prev.h.len(), prev.c.len()), (h, h)));
    }
    let mut gates = vec![0.0; 4 * h];
    let mut next = LstmState::zeros(h);
    let mut tanh_c = vec![0.0; h];
    cell_forward_raw(p, x, &prev.h, &prev.c, &mut gates, &mut next.c, &mut tanh_c, &mut next.h);
    let cache = CellCache { x: x.to_vec(), h_prev: prev.h.clone(), c_prev: prev.c.clone(), gates, tanh_c };
    Ok((next, cache))
}

/// Backward through one cell given ∂L/∂h' and ∂L/∂c'. Parameter gradients
/// are added into `g`.
pub fn lstm_cell_backward(
    dh: &[f64],
    dc: &[f64],
    cache: &CellCache,
    p: &LstmParams,
    g: &mut LstmGrads,
) -> Result<CellGrads> {
    p.validate()?;
    let h = p.hidden_size();
    if dh.len() != h || dc.len() != h || cache.gates.len() != 4 * h || cache.x.len() != p.input_size() {
        return Err(Error::shape("lstm_cell_backward", (dh.len(), cache.x.len()), (h, p.input_size())));
    }
    let mut out = CellGrads { dx: vec![0.0; cache.x.len()], dh_prev: vec![0.0; h], dc_prev: vec![0.0; h] };
    let mut dpre = vec![0.0; 4 * h];
    cell_backward_raw(
        p,
        g,
        &cache.x,
        &cache.h_prev,
        &cache.c_prev,
        &cache.gates,
        &cache.tanh_c,
        dh,
        dc,
        &mut dpre,
        &mut out.dx,
        &mut out.dh_prev,
        &mut out.dc_prev,
    );
    Ok(out)
}

/// Flat per-step record of an unrolled LSTM.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceCache {
    input_size: usize,
    hidden: usize,
    len: usize,
    xs: Vec<f64>,
    /// `(len + 1) x H`, row 0 is the initial state.
    hs: Vec<f64>,
    cs: Vec<f64>,
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

impl SequenceCache {
    pub(crate) fn start(input_size: usize, init: &LstmState, capacity: usize) -> Self {
        let h = init.h.len();
        let mut hs = Vec::with_capacity((capacity + 1) * h);
        hs.extend_from_slice(&init.h);
        let mut cs = Vec::with_capacity((capacity + 1) * h);
        cs.extend_from_slice(&init.c);
        SequenceCache {
            input_size,
            hidden: h,
            len: 0,
            xs: Vec::with_capacity(capacity * input_size),
            hs,
            cs,
            gates: Vec::with_capacity(capacity * 4 * h),
            tanh_c: Vec::with_capacity(capacity * h),
        }
    }

    /// Appends one step. Shapes are the caller's responsibility.
    pub(crate) fn push(&mut self, p: &LstmParams, x: &[f64]) {
        let h = self.hidden;
        let t = self.len;
        self.xs.extend_from_slice(x);
        self.hs.resize((t + 2) * h, 0.0);
        self.cs.resize((t + 2) * h, 0.0);
        self.gates.resize((t + 1) * 4 * h, 0.0);
        self.tanh_c.resize((t + 1) * h, 0.0);
        let (hs_prev, hs_next) = self.hs.split_at_mut((t + 1) * h);
        let (cs_prev, cs_next) = self.cs.split_at_mut((t + 1) * h);
        cell_forward_raw(
            p,
            x,
            &hs_prev[t * h..],
            &cs_prev[t * h..],
            &mut self.gates[t * 4 * h..],
            cs_next,
            &mut self.tanh_c[t * h..],
            hs_next,
        );
        self.len += 1;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    /// Hidden state after step `t` (0-based).
    pub fn hidden(&self, t: usize) -> &[f64] {
        let h = self.hidden;
        &self.hs[(t + 1) * h..(t + 2) * h]
    }

    pub fn cell(&self, t: usize) -> &[f64] {
        let h = self.hidden;
        &self.cs[(t + 1) * h..(t + 2) * h]
    }

    pub fn final_state(&self) -> LstmState {
        let t = self.len.saturating_sub(1);
        if self.len == 0 {
            let h = self.hidden;
            return LstmState { h: self.hs[..h].to_vec(), c: self.cs[..h].to_vec() };
        }
        LstmState { h: self.hidden(t).to_vec(), c: self.cell(t).to_vec() }
    }

    /// All hidden states as a `len x H` matrix.
    pub fn hidden_matrix(&self) -> Matrix {
        let h = self.hidden;
        Matrix::from_vec(self.len, h, self.hs[h..].to_vec()).expect("finite hidden states")
    }

    /// Backward through step `t`. `dx` and `dh_prev` are accumulated into,
    /// `dc_prev` overwritten.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn backward_step(
        &self,
        t: usize,
        p: &LstmParams,
        g: &mut LstmGrads,
        dh: &[f64],
        dc: &[f64],
        dpre: &mut [f64],
        dx: &mut [f64],
        dh_prev: &mut [f64],
        dc_prev: &mut [f64],
    ) {
        let h = self.hidden;
        let d = self.input_size;
        cell_backward_raw(
            p,
            g,
            &self.xs[t * d..(t + 1) * d],
            &self.hs[t * h..(t + 1) * h],
            &self.cs[t * h..(t + 1) * h],
            &self.gates[t * 4 * h..(t + 1) * 4 * h],
            &self.tanh_c[t * h..(t + 1) * h],
            dh,
            dc,
            dpre,
            dx,
            dh_prev,
            dc_prev,
        );
    }
}

/// Gradients flowing out of an unrolled sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceGrads {
    /// `len x D_in`.
    pub dxs: Matrix,
    pub dh0: Vec<f64>,
    pub dc0: Vec<f64>,
}

/// Left-to-right unroll over the rows of `xs`.
pub fn lstm_sequence(xs: &Matrix, init: &LstmState, p: &LstmParams) -> Result<SequenceCache> {
    p.validate()?;
    if xs.rows() == 0 {
        return Err(Error::EmptySequence("lstm_sequence"));
    }
    if xs.cols() != p.input_size() {
        return Err(Error::shape("lstm_sequence", xs.shape(), (xs.rows(), p.input_size())));
    }
    let h = p.hidden_size();
    if init.h.len() != h || init.c.len() != h {
        return Err(Error::shape("lstm_sequence init", (init.h.len(), init.c.len()), (h, h)));
    }
    let mut cache = SequenceCache::start(xs.cols(), init, xs.rows());
    for t in 0..xs.rows() {
        cache.push(p, xs.row(t));
    }
    Ok(cache)
}

/// Backpropagation through time.
///
/// `dhs` holds ∂L/∂h_t from consumers outside the recurrence (one row per
/// step); `dc_last` is an optional external gradient on the final cell
/// state.
pub fn lstm_sequence_backward(
    cache: &SequenceCache,
    p: &LstmParams,
    g: &mut LstmGrads,
    dhs: &Matrix,
    dc_last: Option<&[f64]>,
) -> Result<SequenceGrads> {
    p.validate()?;
    let (t_len, h, d) = (cache.len, cache.hidden, cache.input_size);
    if dhs.shape() != (t_len, h) {
        return Err(Error::shape("lstm_sequence_backward", dhs.shape(), (t_len, h)));
    }
    if h != p.hidden_size() || d != p.input_size() {
        return Err(Error::shape("lstm_sequence_backward params", (h, d), (p.hidden_size(), p.input_size())));
    }
    let mut dxs = Matrix::zeros(t_len, d);
    let mut dh_next = vec![0.0; h];
    let mut dc_next = match dc_last {
        Some(dc) if dc.len() == h => dc.to_vec(),
        Some(dc) => return Err(Error::shape("lstm_sequence_backward dc_last", (dc.len(), 1), (h, 1))),
        None => vec![0.0; h],
    };
    let mut dh = vec![0.0; h];
    let mut dc_prev = vec![0.0; h];
    let mut dh_prev = vec![0.0; h];
    let mut dpre = vec![0.0; 4 * h];
    for t in (0..t_len).rev() {
        for j in 0..h {
            dh[j] = dhs.row(t)[j] + dh_next[j];
        }
        dh_prev.iter_mut().for_each(|v| *v = 0.0);
        cache.backward_step(t, p, g, &dh, &dc_next, &mut dpre, dxs.row_mut(t), &mut dh_prev, &mut dc_prev);
        std::mem::swap(&mut dh_next, &mut dh_prev);
        std::mem::swap(&mut dc_next, &mut dc_prev);
    }
    Ok(SequenceGrads { dxs, dh0: dh_next, dc0: dc_next })
}
