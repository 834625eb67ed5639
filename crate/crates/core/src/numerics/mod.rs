//! Dense matrices, softmax/cross-entropy gradients, Adam, seeded streams and
//! a finite-difference gradient checker.

mod adam;
mod gradcheck;
mod linalg;
mod matrix;
mod rng;
mod softmax;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{check_indices, finite_diff_check, relative_error, GradCheckReport, Offender, DEFAULT_FLOOR};
pub use linalg::{singular_values, symmetric_eigen};
pub use matrix::{axpy, dot, Matrix};
pub use rng::Rng;
pub use softmax::{
    ce_layer_grads, ce_layer_loss, log_add, log_softmax_in_place, log_softmax_rows, log_sum_exp, softmax,
    softmax_ce_grad, softmax_in_place,
};
