//! Linear-model study of feature correlation: two Gaussian feature groups
//! coupled by `alpha`, a logistic "pre-trained" backbone fit on one group's
//! label, and a one-weight fine-tune for the other group's label.

mod covariance;
mod data;
mod sweep;
mod train;

pub use covariance::{build_covariance, CorrelationSpec, Scenario};
pub use data::{sample_glm_dataset, task_score, GlmDataset};
pub use sweep::{
    glm_cell_stream, run_glm_cell, summarize_cell, sweep_alpha, uniform_alpha_grid, CurveRow,
    GlmCellRun, GlmSweepConfig,
};
pub use train::{
    backbone, evaluate_glm, finetune_bob_scalar, suggest_alice_lr, train_alice_glm, AliceFit,
    BobFit, GlmParams, ALICE_GRAD_TOL, BOB_GRAD_TOL,
};

use crate::numkit::NumError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GlmError {
    #[error("invalid configuration: {0}")]
    InvalidSpec(String),
    #[error("covariance factorization failed: {0}")]
    Factorization(#[from] NumError),
    #[error("loss became non-finite at step {step}; the learning rate is likely too large")]
    NonFinite { step: usize },
}
