use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Ordered collection of named trainable matrices with their gradients.
///
/// Iteration order is insertion order; checkpoints and optimizer state rely
/// on it. Gradients accumulate until [`ParamSet::zero_grads`] is called.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    values: Vec<Matrix>,
    grads: Vec<Matrix>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a parameter and returns its index.
    pub fn add(&mut self, name: impl Into<String>, value: Matrix) -> Result<usize> {
        let name = name.into();
        if self.names.contains(&name) {
            return Err(Error::InvalidConfig(format!("duplicate parameter name `{name}`")));
        }
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("parameter `{name}`")));
        }
        let (r, c) = value.shape();
        self.names.push(name);
        self.values.push(value);
        self.grads.push(Matrix::zeros(r, c));
        Ok(self.values.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn value(&self, i: usize) -> &Matrix {
        &self.values[i]
    }

    pub fn value_mut(&mut self, i: usize) -> &mut Matrix {
        &mut self.values[i]
    }

    pub fn grad(&self, i: usize) -> &Matrix {
        &self.grads[i]
    }

    pub fn grad_mut(&mut self, i: usize) -> &mut Matrix {
        &mut self.grads[i]
    }

    pub fn values(&self) -> &[Matrix] {
        &self.values
    }

    pub fn grads(&self) -> &[Matrix] {
        &self.grads
    }

    /// Disjoint borrow: read-only values next to writable gradients.
    pub fn split_mut(&mut self) -> (&[Matrix], &mut [Matrix]) {
        (&self.values, &mut self.grads)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Matrix, &Matrix)> {
        self.names
            .iter()
            .zip(&self.values)
            .zip(&self.grads)
            .map(|((n, v), g)| (n.as_str(), v, g))
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.values.iter().map(Matrix::len).sum()
    }

    pub fn zero_grads(&mut self) {
        for g in &mut self.grads {
            g.fill(0.0);
        }
    }

    pub fn scale_grads(&mut self, s: f64) {
        for g in &mut self.grads {
            g.scale(s);
        }
    }

    pub fn grad_norm(&self) -> f64 {
        self.grads.iter().map(Matrix::sum_sq).sum::<f64>().sqrt()
    }

    /// Rescales gradients so their global L2 norm is at most `max_norm`.
    /// Returns the norm before clipping.
    pub fn clip_grad_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.grad_norm();
        if norm > max_norm && norm > 0.0 {
            self.scale_grads(max_norm / norm);
        }
        norm
    }

    /// Replaces all values with those of `other`, which must have the same
    /// names and shapes.
    pub fn copy_values_from(&mut self, other: &ParamSet) -> Result<()> {
        self.check_compatible(other)?;
        for (dst, src) in self.values.iter_mut().zip(&other.values) {
            dst.as_mut_slice().copy_from_slice(src.as_slice());
        }
        Ok(())
    }

    pub fn check_compatible(&self, other: &ParamSet) -> Result<()> {
        if self.names != other.names {
            return Err(Error::Checkpoint("parameter names differ".into()));
        }
        for (i, (a, b)) in self.values.iter().zip(&other.values).enumerate() {
            if a.shape() != b.shape() {
                return Err(Error::Checkpoint(format!(
                    "parameter `{}` has shape {:?}, expected {:?}",
                    self.names[i],
                    b.shape(),
                    a.shape()
                )));
            }
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(Matrix::is_finite)
    }
}
