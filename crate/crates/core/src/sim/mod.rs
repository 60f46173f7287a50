//! Deterministic 2D kinematic world.
//!
//! Agents are disks that move by forward-Euler integration of a commanded speed and heading
//! change. A step resolves collisions first (both agents of an overlapping pair freeze as
//! `Collided`), then arrivals, then timeouts. Frozen agents never move again and are invisible
//! to collision checks, observations and rewards of the agents still active.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod action;
mod agent;
mod baseline;
mod episode;
mod expert;
mod reward;
mod scenario;
mod world;

pub use action::{action_at, build_action_set, Action, ActionSet, ACTION_COUNT, MAX_HEADING_CHANGE};
pub use agent::{surface_distance, AgentState, PolicyTag, Status};
pub use baseline::{baseline_policy, Baseline};
pub use episode::{
    run_episode, AgentOutcome, Decision, EpisodeLog, EpisodeMeta, LearnedPolicy, PolicyError, PolicyOutput,
    PolicyTable, Snapshot,
};
pub use expert::{expert_action, ExpertChoice, ExpertConfig};
pub use reward::{min_surface_distance, reward, RewardParams};
pub use scenario::{
    generate_random_scenario, generate_structured_scenario, preset_domain_size, time_limit_for, AgentSpec,
    ScenarioFile, ScenarioSpec, StructuredKind, SCENARIO_FORMAT, STRUCTURED_PREF_SPEED, STRUCTURED_RADIUS,
};
pub use world::{step, AgentEvent, EventKind, StepParams};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("preferred speed must be positive and finite, got {0}")]
    InvalidPrefSpeed(f64),
    #[error("timestep must be positive, got {0}")]
    InvalidTimestep(f64),
    #[error("expected {expected} action slots, got {got}")]
    ActionCount { expected: usize, got: usize },
    #[error("active agent {agent} has no action")]
    MissingAction { agent: usize },
    #[error("could not place {n} agents in a {domain_size} m domain after {attempts} layout attempts")]
    ScenarioCrowded {
        n: usize,
        domain_size: f64,
        attempts: usize,
    },
    #[error("invalid agent count {n} for {kind} scenario")]
    InvalidAgentCount { kind: &'static str, n: usize },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("no policy available for {0:?} agents")]
    MissingPolicy(PolicyTag),
    #[error("policy returned {got} outputs, expected {expected}")]
    PolicyOutputCount { expected: usize, got: usize },
    #[error("policy evaluation failed: {0}")]
    Policy(PolicyError),
    #[error("unsupported file format version {found} (expected {expected})")]
    FormatVersion { expected: u32, found: u32 },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl SimError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// World and scenario-generation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Seconds per decision step.
    pub dt: f64,
    /// Minimum arrival radius (m); the effective radius is `max(this, speed * dt)`.
    pub arrival_tolerance: f64,
    /// Episodes last at least this long (s) ...
    pub min_time_limit: f64,
    /// ... or this multiple of the slowest straight-line time, whichever is longer.
    pub time_limit_factor: f64,
    /// Required surface distance between spawned starts (and between goals).
    pub start_margin: f64,
    /// Minimum start-to-goal distance for random scenarios (m).
    pub min_goal_distance: f64,
    pub radius_range: [f64; 2],
    pub pref_speed_range: [f64; 2],
    /// Full-layout redraws before giving up.
    pub max_sampling_attempts: usize,
    pub reward: RewardParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.2,
            arrival_tolerance: 0.1,
            min_time_limit: 30.0,
            time_limit_factor: 4.0,
            start_margin: 0.2,
            min_goal_distance: 1.0,
            radius_range: [0.2, 0.8],
            pref_speed_range: [0.5, 2.0],
            max_sampling_attempts: 1000,
            reward: RewardParams::default(),
        }
    }
}
