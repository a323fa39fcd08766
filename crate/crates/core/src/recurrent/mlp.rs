//! One-hidden-layer perceptron (tanh hidden, linear output) and a plain
//! affine layer.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{gemv_acc, gemv_t_acc, outer_acc, Matrix, ParamSet};

#[derive(Debug, Clone, Copy)]
pub struct MlpParams<'a> {
    pub w1: &'a Matrix,
    pub b1: &'a Matrix,
    pub w2: &'a Matrix,
    pub b2: &'a Matrix,
}

impl MlpParams<'_> {
    pub fn input_size(&self) -> usize {
        self.w1.cols()
    }

    pub fn hidden_size(&self) -> usize {
        self.w1.rows()
    }

    pub fn output_size(&self) -> usize {
        self.w2.rows()
    }

    fn validate(&self) -> Result<()> {
        let (h, o) = (self.hidden_size(), self.output_size());
        if self.b1.shape() != (h, 1) {
            return Err(Error::shape("MlpParams::b1", self.b1.shape(), (h, 1)));
        }
        if self.w2.cols() != h {
            return Err(Error::shape("MlpParams::w2", self.w2.shape(), (o, h)));
        }
        if self.b2.shape() != (o, 1) {
            return Err(Error::shape("MlpParams::b2", self.b2.shape(), (o, 1)));
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct MlpGrads<'a> {
    pub w1: &'a mut Matrix,
    pub b1: &'a mut Matrix,
    pub w2: &'a mut Matrix,
    pub b2: &'a mut Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpLayer {
    first: usize,
    pub input_size: usize,
    pub hidden_size: usize,
    pub output_size: usize,
}

impl MlpLayer {
    /// Weights uniform in ±1/√fan_in, biases zero.
    pub fn register<R: Rng + ?Sized>(
        ps: &mut ParamSet,
        prefix: &str,
        input_size: usize,
        hidden_size: usize,
        output_size: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let w1 = uniform(rng, hidden_size, input_size)?;
        let w2 = uniform(rng, output_size, hidden_size)?;
        let first = ps.add(format!("{prefix}.w1"), w1)?;
        ps.add(format!("{prefix}.b1"), Matrix::zeros(hidden_size, 1))?;
        ps.add(format!("{prefix}.w2"), w2)?;
        ps.add(format!("{prefix}.b2"), Matrix::zeros(output_size, 1))?;
        Ok(MlpLayer { first, input_size, hidden_size, output_size })
    }

    pub fn params<'a>(&self, values: &'a [Matrix]) -> MlpParams<'a> {
        let v = &values[self.first..self.first + 4];
        MlpParams { w1: &v[0], b1: &v[1], w2: &v[2], b2: &v[3] }
    }

    pub fn grads<'a>(&self, grads: &'a mut [Matrix]) -> MlpGrads<'a> {
        match &mut grads[self.first..self.first + 4] {
            [w1, b1, w2, b2] => MlpGrads { w1, b1, w2, b2 },
            _ => unreachable!(),
        }
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidConfig("layer sizes must be positive".into()));
    }
    let bound = 1.0 / (cols as f64).sqrt();
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-bound..=bound)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpCache {
    pub x: Vec<f64>,
    pub hidden: Vec<f64>,
}

/// `w2 · tanh(w1 · x + b1) + b2`
pub fn mlp_forward(x: &[f64], p: &MlpParams) -> Result<(Vec<f64>, MlpCache)> {
    p.validate()?;
    if x.len() != p.input_size() {
        return Err(Error::shape("mlp_forward", (x.len(), 1), (p.input_size(), 1)));
    }
    let mut hidden = p.b1.as_slice().to_vec();
    gemv_acc(p.w1, x, &mut hidden);
    hidden.iter_mut().for_each(|v| *v = v.tanh());
    let mut y = p.b2.as_slice().to_vec();
    gemv_acc(p.w2, &hidden, &mut y);
    Ok((y, MlpCache { x: x.to_vec(), hidden }))
}

/// Returns ∂L/∂x; parameter gradients are added into `g`.
pub fn mlp_backward(dy: &[f64], cache: &MlpCache, p: &MlpParams, g: &mut MlpGrads) -> Result<Vec<f64>> {
    p.validate()?;
    if dy.len() != p.output_size() || cache.x.len() != p.input_size() {
        return Err(Error::shape("mlp_backward", (dy.len(), cache.x.len()), (p.output_size(), p.input_size())));
    }
    outer_acc(g.w2, dy, &cache.hidden);
    for (b, d) in g.b2.as_mut_slice().iter_mut().zip(dy) {
        *b += d;
    }
    let mut dh = vec![0.0; p.hidden_size()];
    gemv_t_acc(p.w2, dy, &mut dh);
    for (d, a) in dh.iter_mut().zip(&cache.hidden) {
        *d *= 1.0 - a * a;
    }
    outer_acc(g.w1, &dh, &cache.x);
    for (b, d) in g.b1.as_mut_slice().iter_mut().zip(&dh) {
        *b += d;
    }
    let mut dx = vec![0.0; p.input_size()];
    gemv_t_acc(p.w1, &dh, &mut dx);
    Ok(dx)
}

/// Affine map `w · x + b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinearLayer {
    first: usize,
    pub input_size: usize,
    pub output_size: usize,
}

impl LinearLayer {
    pub fn register<R: Rng + ?Sized>(
        ps: &mut ParamSet,
        prefix: &str,
        input_size: usize,
        output_size: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let w = uniform(rng, output_size, input_size)?;
        let first = ps.add(format!("{prefix}.w"), w)?;
        ps.add(format!("{prefix}.b"), Matrix::zeros(output_size, 1))?;
        Ok(LinearLayer { first, input_size, output_size })
    }

    pub fn weight<'a>(&self, values: &'a [Matrix]) -> &'a Matrix {
        &values[self.first]
    }

    pub fn bias<'a>(&self, values: &'a [Matrix]) -> &'a Matrix {
        &values[self.first + 1]
    }

    pub fn bias_index(&self) -> usize {
        self.first + 1
    }

    pub fn forward(&self, values: &[Matrix], x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(self.bias(values).as_slice());
        gemv_acc(self.weight(values), x, out);
    }

    /// Adds parameter gradients and ∂L/∂x (into `dx`).
    pub fn backward(&self, values: &[Matrix], grads: &mut [Matrix], x: &[f64], dy: &[f64], dx: &mut [f64]) {
        outer_acc(&mut grads[self.first], dy, x);
        for (b, d) in grads[self.first + 1].as_mut_slice().iter_mut().zip(dy) {
            *b += d;
        }
        gemv_t_acc(self.weight(values), dy, dx);
    }
}
