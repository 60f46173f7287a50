use serde::{Deserialize, Serialize};

use super::experience::DiscountMode;
use super::TrainError;
use crate::net::AdamConfig;

/// Agent-count range and arena size for one curriculum phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseConfig {
    pub min_agents: usize,
    pub max_agents: usize,
    /// Side of the square spawn area, in meters.
    pub domain_size: f64,
    /// Hard episode budget for the phase.
    pub episodes: u64,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self {
            min_agents: 2,
            max_agents: 4,
            domain_size: 4.0,
            episodes: 1_000_000,
        }
    }
}

/// Probabilities for the controller of every agent other than agent 0 (always learned).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyMix {
    pub learned: f64,
    pub non_cooperative: f64,
    pub zero_velocity: f64,
}

impl Default for PolicyMix {
    fn default() -> Self {
        Self {
            learned: 0.8,
            non_cooperative: 0.15,
            zero_velocity: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionMode {
    /// One thread, inline prediction; bit-reproducible.
    Inline,
    /// Worker threads, a batching prediction thread and the trainer on the calling thread.
    #[default]
    Threaded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub gamma: f64,
    pub discount: DiscountMode,
    pub entropy_coef: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub k_horizon: usize,
    /// Global gradient-norm clip; `0` disables clipping.
    pub grad_clip_norm: f64,
    pub adam: AdamConfig,
    pub phase1: PhaseConfig,
    pub phase2: PhaseConfig,
    /// Episodes per moving-average window for the phase-1 plateau test; `0` disables it.
    pub plateau_window: u64,
    pub plateau_tolerance: f64,
    pub policy_mix: PolicyMix,
    pub mode: ExecutionMode,
    pub workers: usize,
    /// Capacity of the worker -> trainer episode queue.
    pub experience_queue: usize,
    /// Capacity of the worker -> predictor request queue.
    pub prediction_queue: usize,
    /// Most requests merged into one prediction batch.
    pub max_prediction_batch: usize,
    /// Experiences produced more than this many updates ago are discarded.
    pub max_staleness: u64,
    /// Write a checkpoint every this many episodes; `0` writes only the final one.
    pub checkpoint_every: u64,
    /// Master seed of the scenario stream; set by the caller rather than the config file.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            gamma: 0.97,
            discount: DiscountMode::PerStep,
            entropy_coef: 1e-4,
            learning_rate: 2e-5,
            batch_size: 100,
            k_horizon: 32,
            grad_clip_norm: 40.0,
            adam: AdamConfig::default(),
            phase1: PhaseConfig::default(),
            phase2: PhaseConfig {
                min_agents: 2,
                max_agents: 10,
                domain_size: 6.0,
                episodes: 1_000_000,
            },
            plateau_window: 10_000,
            plateau_tolerance: 0.01,
            policy_mix: PolicyMix::default(),
            mode: ExecutionMode::Threaded,
            workers: 4,
            experience_queue: 64,
            prediction_queue: 64,
            max_prediction_batch: 64,
            max_staleness: 20,
            checkpoint_every: 10_000,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.entropy_coef >= 0.0) {
            return bad("entropy_coef must be non-negative");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 || self.k_horizon == 0 {
            return bad("batch_size and k_horizon must be at least 1");
        }
        for p in [&self.phase1, &self.phase2] {
            if p.min_agents == 0 || p.min_agents > p.max_agents || !(p.domain_size > 0.0) {
                return bad("phase needs 1 <= min_agents <= max_agents and a positive domain_size");
            }
        }
        let m = &self.policy_mix;
        let total = m.learned + m.non_cooperative + m.zero_velocity;
        if [m.learned, m.non_cooperative, m.zero_velocity].iter().any(|&p| p < 0.0) || (total - 1.0).abs() > 1e-9 {
            return bad("policy_mix probabilities must be non-negative and sum to 1");
        }
        if self.mode == ExecutionMode::Threaded
            && (self.workers == 0
                || self.experience_queue == 0
                || self.prediction_queue == 0
                || self.max_prediction_batch == 0)
        {
            return bad("threaded mode needs at least one worker and non-zero queue sizes");
        }
        Ok(())
    }

    pub fn total_episodes(&self) -> u64 {
        self.phase1.episodes + self.phase2.episodes
    }
}

/// Supervised initialisation from scripted-expert demonstrations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PretrainConfig {
    pub examples: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Weight of the value error relative to the policy cross-entropy.
    pub value_weight: f64,
    /// Discount used for the value targets `gamma^(t_remaining * v_pref)`.
    pub gamma: f64,
    /// Fraction of demonstration episodes with two agents (the rest have one).
    pub two_agent_fraction: f64,
    pub domain_size: f64,
    /// Seed of the minibatch shuffling; set by the caller rather than the config file.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            examples: 20_000,
            epochs: 20,
            batch_size: 64,
            learning_rate: 1e-3,
            value_weight: 1.0,
            gamma: 0.97,
            two_agent_fraction: 0.5,
            domain_size: 4.0,
            seed: 0,
        }
    }
}

impl PretrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.examples == 0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(TrainError::InvalidConfig(
                "examples, epochs and batch_size must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0) || !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(TrainError::InvalidConfig(
                "learning_rate must be positive and gamma in (0, 1)".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.two_agent_fraction) || !(self.domain_size > 0.0) {
            return Err(TrainError::InvalidConfig(
                "two_agent_fraction must be in [0, 1] and domain_size positive".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        TrainingConfig::default().validate().unwrap();
        PretrainConfig::default().validate().unwrap();
    }

    #[test]
    fn bad_mix_rejected() {
        let mut c = TrainingConfig::default();
        c.policy_mix.learned = 0.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let c = TrainingConfig::default();
        let text = toml::to_string(&c).unwrap();
        let back: TrainingConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
        let partial: TrainingConfig = toml::from_str("gamma = 0.9\n[phase1]\nmax_agents = 3\n").unwrap();
        assert_eq!(partial.gamma, 0.9);
        assert_eq!(partial.phase1.max_agents, 3);
        assert_eq!(partial.phase1.domain_size, 4.0);
        assert!(toml::from_str::<TrainingConfig>("gama = 0.9").is_err());
    }
}
