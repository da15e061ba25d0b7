//! Losses, prompt gradients, Adam training and the linear closed-form solve.

mod grad;
mod linear;
mod loss;
mod train;

pub use grad::{finite_diff_gradient, prompt_gradient, relative_error, value_and_gradient};
pub use linear::{linear_gpf_solve, propagation_gain, LinearSolution};
pub use loss::{batch_rmse_loss, epsilon_loss};
pub use train::{
    multi_restart_train, train_prompt, Hyperparams, MultiRestartOutcome, TrainOutcome, TrialRecord,
    TrialStatus,
};
