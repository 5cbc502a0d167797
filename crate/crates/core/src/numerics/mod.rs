//! Dense kernels with hand-written backward passes.

pub mod activations;
pub mod adam;
pub mod gradcheck;
pub mod lstm;
mod matrix;
pub mod svd;

pub use activations::{affine_tanh, log_sigmoid, sigmoid, softmax};
pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{
    grad_check, grad_check_tensor, numeric_gradient, relative_error, tensor_relative_error,
    GradCheck,
};
pub use lstm::{LstmParams, LstmState, LstmTrace};
pub use matrix::{axpy, dot, norm, Matrix};
