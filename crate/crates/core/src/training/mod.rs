//! Losses, optimizers, the training loop, evaluation and the ablation driver.

mod ablation;
mod loss;
mod optim;
mod train;

pub use ablation::{
    ablation_runs, format_table, mean_and_std, summarize, AblationRow, AblationRun, AblationVariant,
    ABLATION_VARIANTS,
};
pub use loss::{loss_forward, loss_reverse, loss_total};
pub use optim::{Optimizer, OptimizerKind};
pub use train::{
    epoch_csv, evaluate_losses, evaluate_mpjpe, evaluate_report, predict_future_mm, run_training,
    train_step, trajectory_features, write_epoch_csv, EpochLog, EvalSpec, LossTerm, StepLosses,
    TrainConfig, TrainingRun,
};
