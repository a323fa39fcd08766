//! Central finite differences, the reference every analytic backward pass
//! in the crate is checked against.

use crate::error::{Error, Result};
use crate::numerics::{Matrix, ParamSet};

/// Gradient of `loss_fn` at `params` by central differences,
/// `(f(θ+eps) − f(θ−eps)) / (2·eps)` per scalar entry.
///
/// Every perturbed entry is restored bit-exactly before the next one is
/// touched.
pub fn finite_diff_grad<F>(mut loss_fn: F, params: &mut ParamSet, eps: f64) -> Result<Vec<Matrix>>
where
    F: FnMut(&ParamSet) -> Result<f64>,
{
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig(format!("finite-difference eps must be positive, got {eps}")));
    }
    let mut out = Vec::with_capacity(params.len());
    for p in 0..params.len() {
        let (rows, cols) = params.value(p).shape();
        let mut g = Matrix::zeros(rows, cols);
        for j in 0..rows * cols {
            let orig = params.value(p).as_slice()[j];
            params.value_mut(p).as_mut_slice()[j] = orig + eps;
            let plus = loss_fn(params);
            params.value_mut(p).as_mut_slice()[j] = orig - eps;
            let minus = loss_fn(params);
            params.value_mut(p).as_mut_slice()[j] = orig;
            let (plus, minus) = (plus?, minus?);
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite(format!(
                    "loss at perturbation of `{}`[{j}]",
                    params.name(p)
                )));
            }
            g.as_mut_slice()[j] = (plus - minus) / (2.0 * eps);
        }
        out.push(g);
    }
    Ok(out)
}

/// One compared gradient entry.
#[derive(Debug, Clone, PartialEq)]
pub struct GradEntry {
    pub name: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl GradEntry {
    pub fn abs_error(&self) -> f64 {
        (self.analytic - self.numeric).abs()
    }

    pub fn scale(&self) -> f64 {
        self.analytic.abs().max(self.numeric.abs())
    }

    /// `|a − n| / max(|a|, |n|)`, or 0 when both are zero.
    pub fn rel_error(&self) -> f64 {
        let s = self.scale();
        if s == 0.0 {
            0.0
        } else {
            self.abs_error() / s
        }
    }

    /// Error as a fraction of the allowance `abs_floor + rel_tol·scale`.
    pub fn excess(&self, rel_tol: f64, abs_floor: f64) -> f64 {
        self.abs_error() / (abs_floor + rel_tol * self.scale())
    }
}

/// Entry-by-entry comparison of analytic and numeric gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct GradComparison {
    pub entries: Vec<GradEntry>,
}

impl GradComparison {
    /// Every entry satisfies `|a − n| ≤ abs_floor + rel_tol·max(|a|, |n|)`:
    /// relative agreement, with an absolute floor for entries too small for
    /// a relative comparison to be meaningful.
    pub fn passes(&self, rel_tol: f64, abs_floor: f64) -> bool {
        self.entries.iter().all(|e| e.abs_error() <= abs_floor + rel_tol * e.scale())
    }

    /// Entry with the largest error relative to its allowance.
    pub fn worst(&self, rel_tol: f64, abs_floor: f64) -> Option<&GradEntry> {
        self.entries.iter().max_by(|a, b| a.excess(rel_tol, abs_floor).total_cmp(&b.excess(rel_tol, abs_floor)))
    }

    /// Largest relative error among entries with magnitude at least `min_scale`.
    pub fn max_rel_error(&self, min_scale: f64) -> f64 {
        self.entries.iter().filter(|e| e.scale() >= min_scale).map(GradEntry::rel_error).fold(0.0, f64::max)
    }

    pub fn max_abs_error(&self) -> f64 {
        self.entries.iter().map(GradEntry::abs_error).fold(0.0, f64::max)
    }

    pub fn summary(&self, rel_tol: f64, abs_floor: f64) -> String {
        let worst = self
            .worst(rel_tol, abs_floor)
            .map(|e| format!("{}[{}] analytic {:e} numeric {:e}", e.name, e.index, e.analytic, e.numeric))
            .unwrap_or_default();
        format!(
            "{} entries, max abs err {:.2e}, max rel err (|g| >= 1e-6) {:.2e}, worst {worst}",
            self.entries.len(),
            self.max_abs_error(),
            self.max_rel_error(1e-6)
        )
    }
}

/// Pairs up analytic and numeric gradients for comparison.
pub fn compare_grads(names: &[String], analytic: &[Matrix], numeric: &[Matrix]) -> GradComparison {
    let mut entries = Vec::new();
    for ((name, a), n) in names.iter().zip(analytic).zip(numeric) {
        for (index, (&x, &y)) in a.as_slice().iter().zip(n.as_slice()).enumerate() {
            entries.push(GradEntry { name: name.clone(), index, analytic: x, numeric: y });
        }
    }
    GradComparison { entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(vals: &[f64]) -> ParamSet {
        let mut ps = ParamSet::new();
        ps.add("theta", Matrix::from_vec(vals.len(), 1, vals.to_vec()).unwrap()).unwrap();
        ps
    }

    #[test]
    fn constant_function_has_zero_gradient() {
        let mut ps = params(&[1.0, 2.0, 3.0]);
        let g = finite_diff_grad(|_| Ok(7.5), &mut ps, 1e-4).unwrap();
        assert!(g[0].as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn square_at_three() {
        let mut ps = params(&[3.0]);
        let g = finite_diff_grad(|p| Ok(p.value(0).get(0, 0).powi(2)), &mut ps, 1e-4).unwrap();
        assert!((g[0].get(0, 0) - 6.0).abs() < 1e-6);
    }

    #[test]
    fn sum_of_squares() {
        let mut ps = params(&[1.0, -2.0]);
        let g = finite_diff_grad(|p| Ok(p.value(0).sum_sq()), &mut ps, 1e-4).unwrap();
        assert!((g[0].get(0, 0) - 2.0).abs() < 1e-6);
        assert!((g[0].get(1, 0) + 4.0).abs() < 1e-6);
    }

    #[test]
    fn params_restored_bit_exactly() {
        let vals = [0.1, 1.0 / 3.0, -7.77e-3];
        let mut ps = params(&vals);
        finite_diff_grad(|p| Ok(p.value(0).as_slice().iter().map(|v| v.sin()).sum()), &mut ps, 1e-5).unwrap();
        assert_eq!(ps.value(0).as_slice(), &vals);
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let mut ps = params(&[0.0]);
        let r = finite_diff_grad(|p| Ok(1.0 / p.value(0).get(0, 0).abs().min(1e-300) * 1e300), &mut ps, 1e-5);
        assert!(r.is_err());
    }

    #[test]
    fn rejects_nonpositive_eps() {
        let mut ps = params(&[0.0]);
        assert!(finite_diff_grad(|_| Ok(0.0), &mut ps, 0.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn quadratic_form_gradient(a in proptest::collection::vec(-1.0f64..1.0, 9),
                                       theta in proptest::collection::vec(-1.0f64..1.0, 3)) {
                let mut ps = params(&theta);
                let am = Matrix::from_vec(3, 3, a).unwrap();
                let f = |p: &ParamSet| {
                    let t = p.value(0);
                    let at = am.matmul(t)?;
                    Ok(t.as_slice().iter().zip(at.as_slice()).map(|(x, y)| x * y).sum())
                };
                let g = finite_diff_grad(f, &mut ps, 1e-5).unwrap();
                let sym = {
                    let mut s = am.clone();
                    s.add_assign(&am.transpose()).unwrap();
                    s
                };
                let expect = sym.matmul(&Matrix::from_vec(3, 1, theta.clone()).unwrap()).unwrap();
                let cmp = compare_grads(&["theta".into()], &[expect], &g);
                prop_assert!(cmp.passes(1e-6, 1e-8), "{}", cmp.summary(1e-6, 1e-8));
            }
        }
    }
}
