//! Dense `f64` tensors with a reverse-mode tape over the handful of
//! operations the motion models need.

mod gradcheck;
mod tape;
mod tensor;

pub use gradcheck::{grad_check, GradCheckReport};
pub use tape::{Activation, Gradients, Tape, Var};
pub use tensor::{pairwise_sum, Tensor};
