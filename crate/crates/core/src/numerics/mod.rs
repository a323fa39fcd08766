//! Dense linear algebra, parameter containers, Adam and the
//! finite-difference gradient oracle.

mod adam;
mod checkpoint;
mod gradcheck;
mod matrix;
mod params;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{Checkpoint, FORMAT_VERSION};
pub use gradcheck::{compare_grads, finite_diff_grad, GradComparison, GradEntry};
pub use matrix::{matmul, Matrix};
pub(crate) use matrix::{dot, gemv_acc, gemv_t_acc, outer_acc};
pub use params::ParamSet;
