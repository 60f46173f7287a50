//! Supervised initialisation and actor-critic training.
//!
//! Learned agents contribute experiences from every episode they take part in; agents running
//! baseline policies only shape the world. Training batches mix experiences of all learned agents.

use std::path::{Path, PathBuf};

use thiserror::Error;

mod config;
mod experience;
mod loss;
mod pipeline;
mod select;
mod supervised;

pub use config::{ExecutionMode, PhaseConfig, PolicyMix, PretrainConfig, TrainingConfig};
pub use experience::{discounted_returns, trajectories_from_log, DiscountMode, Experience, ReturnTarget, Trajectory};
pub use loss::{
    a3c_loss_and_grads, clip_global_norm, supervised_loss_and_grads, LossStats, SupervisedExample, SupervisedStats,
};
pub use pipeline::{
    checkpoint_name, episode_targets, read_training_log, run_training, training_scenario, LogRow, RunOptions,
    TrainingOutcome, TrainingSetup, FINAL_CHECKPOINT_FILE, LAST_GOOD_CHECKPOINT_FILE, TRAINING_LOG_FILE,
};
pub use select::{select_action, SelectionMode};
pub use supervised::{generate_supervised_dataset, supervised_init, EpochLoss};

use crate::net::NetError;
use crate::sim::SimError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("policy distribution sums to {total}, not 1")]
    InvalidDistribution { total: f64 },
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("batch is empty")]
    EmptyBatch,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("action index {0} out of range")]
    InvalidAction(usize),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error("training halted ({reason}); last good checkpoint: {}", last_checkpoint.as_ref().map_or("none".to_string(), |p| p.display().to_string()))]
    Halted {
        reason: String,
        last_checkpoint: Option<PathBuf>,
    },
    #[error("training pipeline failed: {0}")]
    Pipeline(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl TrainError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        TrainError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Whether this error means the optimisation itself blew up.
    pub fn is_divergence(&self) -> bool {
        matches!(
            self,
            TrainError::Diverged(_) | TrainError::Halted { .. } | TrainError::Net(NetError::NonFinite(_))
        )
    }
}
