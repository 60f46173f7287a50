//! Fixed test suites, per-case outcomes and comparison statistics.
//!
//! Every policy under comparison runs on the same serialized suite with all agents of a case
//! controlled by that policy. Timing statistics are restricted to cases every compared policy
//! solved.

use std::path::PathBuf;

use thiserror::Error;

mod evaluate;
mod metrics;
mod suite;

pub use evaluate::{
    case_outcome, evaluate, evaluate_with_logs, CaseOutcome, CaseResult, EvalOptions, EvalOutcomes, EvalPolicy,
};
pub use metrics::{compare, extra_time_to_goal, format_table, percentile_nearest_rank, write_report_csv, Metrics};
pub use suite::{generate_head_on_suite, generate_suite, head_on_collision_time, TestSuite};

use crate::net::NetError;
use crate::sim::SimError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("agent {agent_id} did not reach its goal")]
    NotAtGoal { agent_id: usize },
    #[error("no agent with id {0}")]
    UnknownAgent(usize),
    #[error("outcomes come from different suites: {0:?} vs {1:?}")]
    SuiteMismatch(String, String),
    #[error("nothing to compare")]
    NoOutcomes,
    #[error("policy is incompatible with the suite: {0}")]
    Incompatible(String),
    #[error("suite is empty")]
    EmptySuite,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
