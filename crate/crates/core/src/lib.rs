//! Skeleton motion prediction with temporally decoupled decoders and
//! time-reversed auxiliary training.
//!
//! The crate is organized bottom-up:
//!
//! * [`diffcore`]: tensors and a reverse-mode autodiff tape.
//! * [`data`]: MSQ motion files, windowing, reversed samples, synthetic motion.
//! * [`model`]: embedding, encoders (mlp / gru / gcn) and shared or decoupled decoders.
//! * [`training`]: losses, optimizers, the training loop and the ablation harness.
//! * [`metrics`]: MPJPE, Fréchet distance and PCA projection.
//! * [`config`]: the JSON run configuration shared by the command-line tools.

pub mod config;
pub mod data;
pub mod diffcore;
pub mod error;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod training;

pub use diffcore::{Activation, Tape, Tensor, Var};
pub use error::{Error, Result};
