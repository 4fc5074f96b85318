//! Dense feed-forward networks with exact parameter and input/target gradients.

pub mod backprop;
pub mod checkpoint;
pub mod loss;
pub mod matrix;
pub mod model;
pub mod optim;

pub use backprop::{backprop_weighted, backward_params, loss_with_input_grad, per_sample_losses, BackpropOutput, Gradients};
pub use loss::LossKind;
pub use matrix::Matrix;
pub use model::{Activation, Dense, MlpModel, OutputHead};
pub use optim::{optimizer_step, OptimKind, OptimState};
