//! Small CPU neural-network engine: dense, 3x3 convolution, BatchNorm,
//! ReLU, dropout, 2x2 max pooling and a softmax output, trained by SGD
//! with momentum and layer freezing for fine-tuning.

mod checkpoint;
mod gradcheck;
mod layer;
mod network;
mod tensor;
mod train;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use gradcheck::{gradient_check, GradCheckKind, GradCheckReport, FD_STEP};
pub use layer::{col2im, im2col, Cache, Layer, LayerSpec, Param, BN_EPS, BN_MOMENTUM};
pub use network::{
    build_network, softmax_rows, Arch, FreezePlan, Grads, Init, Mode, Network, Scale, WidthProfile,
};
pub use tensor::Tensor;
pub use train::{
    argmax, batch_tensor, cosine_lr, cross_entropy, evaluate, layer_sweep, train, DataSource, EpochLog,
    LayerSweepRow, OptimizerConfig, Schedule, Target, TrainLog,
};

use crate::dataforge::DataError;

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch} (learning rate too large?)")]
    NonFinite { epoch: usize, batch: usize, loss: f64 },
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Data(#[from] DataError),
}
