use crate::error::{Error, Result};
use crate::numerics::{Matrix, ParamSet};

/// Adam optimizer state with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
}

impl AdamState {
    /// Fresh state with the usual defaults (0.9, 0.999, 1e-8).
    pub fn new(params: &ParamSet, lr: f64) -> Result<Self> {
        Self::with_hyper(params, lr, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyper(params: &ParamSet, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Result<Self> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning rate must be positive, got {lr}")));
        }
        if !(0.0 < beta1 && beta1 < 1.0 && 0.0 < beta2 && beta2 < 1.0) {
            return Err(Error::InvalidConfig(format!("betas must lie in (0,1), got ({beta1}, {beta2})")));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidConfig("eps must be positive".into()));
        }
        let zeros = || params.values().iter().map(|v| Matrix::zeros(v.rows(), v.cols())).collect();
        Ok(AdamState { step: 0, lr, beta1, beta2, eps, m: zeros(), v: zeros() })
    }

    pub fn first_moments(&self) -> &[Matrix] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Matrix] {
        &self.v
    }

    pub fn step(&mut self, params: &mut ParamSet) -> Result<()> {
        adam_step(params, self)
    }
}

/// One Adam update using the gradients currently stored in `params`.
/// Gradients are left untouched.
///
/// An all-zero gradient only advances the step counter: values and moments
/// stay as they are, so an empty signal never moves the parameters.
pub fn adam_step(params: &mut ParamSet, state: &mut AdamState) -> Result<()> {
    if state.m.len() != params.len() {
        return Err(Error::shape("adam_step", (state.m.len(), 0), (params.len(), 0)));
    }
    for i in 0..params.len() {
        if state.m[i].shape() != params.value(i).shape() {
            return Err(Error::shape("adam_step", state.m[i].shape(), params.value(i).shape()));
        }
    }
    state.step += 1;
    if params.grads().iter().all(|g| g.as_slice().iter().all(|&v| v == 0.0)) {
        return Ok(());
    }
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, lr, eps) = (state.beta1, state.beta2, state.lr, state.eps);
    for i in 0..params.len() {
        let grad = params.grad(i).as_slice().to_vec();
        let m = state.m[i].as_mut_slice();
        let v = state.v[i].as_mut_slice();
        let value = params.value_mut(i).as_mut_slice();
        for j in 0..grad.len() {
            let g = grad[j];
            m[j] = b1 * m[j] + (1.0 - b1) * g;
            v[j] = b2 * v[j] + (1.0 - b2) * g * g;
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            value[j] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    if !params.all_finite() {
        return Err(Error::NonFinite("adam_step".into()));
    }
    Ok(())
}
