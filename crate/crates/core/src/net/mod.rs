//! Policy/value network: an LSTM that folds the other agents into a fixed-size vector, followed
//! by two rectified fully-connected layers and separate softmax-policy and value heads.
//!
//! Everything is written by hand (forward, backpropagation through time, Adam) and generic over
//! the float width: training runs in `f32`, gradient checks in `f64`.

use std::fmt::Debug;
use std::iter::Sum;
use std::path::PathBuf;

use num_traits::{Float, FromPrimitive};
use thiserror::Error;

mod adam;
mod checkpoint;
mod config;
pub mod linalg;
mod model;
mod params;

pub use adam::{adam_update, AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::NetConfig;
pub use model::{
    backward, backward_accumulate, encode_inputs, forward, forward_inputs, lstm_encode, ForwardTrace, LstmStep,
};
pub use params::{Gradients, Layout, NetParams, Tensor};

/// Float types the network can be instantiated with.
pub trait Real: Float + FromPrimitive + Debug + Default + Send + Sync + Sum + 'static {}

impl Real for f32 {}
impl Real for f64 {}

#[derive(Debug, Error)]
pub enum NetError {
    #[error("invalid network config: {0}")]
    InvalidConfig(String),
    #[error("parameter vector has {got} entries, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("input has width {got}, expected {expected}")]
    InputWidth { expected: usize, got: usize },
    #[error("sequence of {len} other agents exceeds the maximum of {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("forward trace was produced by a network of a different shape")]
    TraceMismatch,
    #[error("{path}: not a checkpoint file")]
    BadMagic { path: PathBuf },
    #[error("{path}: checkpoint format version {found}, expected {expected}")]
    CheckpointVersion { path: PathBuf, found: u32, expected: u32 },
    #[error("{path}: checkpoint has {found} actions but the action set has {expected}")]
    ActionCountMismatch {
        path: PathBuf,
        found: usize,
        expected: usize,
    },
    #[error("{path}: checkpoint is truncated or has trailing bytes ({len} bytes, expected {expected})")]
    Truncated { path: PathBuf, len: usize, expected: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
