//! Feature- and task-correlation laboratory for studying when a pre-trained
//! network can be reused: correlated Gaussian GLM experiments, paired-image
//! datasets with controlled label correlation, a small CPU network engine
//! with layer freezing, and integrated-gradients attribution.
//!
//! Numeric code is generic over [`numkit::Scalar`] (`f32`, `f64`); the
//! aliases below name the common instantiations.

pub mod attrib;
pub mod dataforge;
pub mod glmlab;
pub mod nncore;
pub mod numkit;

pub type Matrix32 = numkit::Matrix<f32>;
pub type Matrix64 = numkit::Matrix<f64>;
pub type Tensor32 = nncore::Tensor<f32>;
pub type Tensor64 = nncore::Tensor<f64>;
pub type Network32 = nncore::Network<f32>;
pub type Network64 = nncore::Network<f64>;
pub type GlmDataset32 = glmlab::GlmDataset<f32>;
pub type GlmDataset64 = glmlab::GlmDataset<f64>;
