//! Episode loop: observe, act, step, until every agent is done or time runs out.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::action::{action_at, Action};
use super::agent::{AgentState, PolicyTag, Status};
use super::baseline::Baseline;
use super::expert::{expert_action, ExpertConfig};
use super::reward::min_surface_distance;
use super::scenario::ScenarioSpec;
use super::world::{step, StepParams};
use super::{SimConfig, SimError};
use crate::geom::Vec2;
use crate::obs::{build_observation, ObsConfig, ObservationSequence};
use crate::trainer::{select_action, SelectionMode};

pub type PolicyError = Box<dyn std::error::Error + Send + Sync>;

/// Network output for one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    pub probs: Vec<f32>,
    pub value: f32,
}

/// Anything that maps a batch of observations to action distributions and values.
pub trait LearnedPolicy {
    fn evaluate(&self, observations: &[ObservationSequence]) -> Result<Vec<PolicyOutput>, PolicyError>;
}

/// Controllers available to an episode, plus how learned actions are chosen.
#[derive(Clone, Copy)]
pub struct PolicyTable<'a> {
    pub learned: Option<&'a dyn LearnedPolicy>,
    pub mode: SelectionMode,
    pub obs: ObsConfig,
    pub expert: ExpertConfig,
    /// Keep the full action distribution of every learned decision in the log.
    pub record_distributions: bool,
    /// End the episode once no `Learned` agent is active (used for training).
    pub stop_when_learned_done: bool,
}

impl<'a> PolicyTable<'a> {
    pub fn baselines() -> Self {
        Self {
            learned: None,
            mode: SelectionMode::Greedy,
            obs: ObsConfig::default(),
            expert: ExpertConfig::default(),
            record_distributions: false,
            stop_when_learned_done: false,
        }
    }

    pub fn with_learned(policy: &'a dyn LearnedPolicy, mode: SelectionMode) -> Self {
        Self {
            learned: Some(policy),
            mode,
            ..Self::baselines()
        }
    }
}

/// What an agent did at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f32>>,
}

/// World state at `t`, with the decisions and rewards that lead to the next snapshot.
/// The final snapshot has empty `decisions` and `rewards`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub agents: Vec<AgentState>,
    pub decisions: Vec<Option<Decision>>,
    pub rewards: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentOutcome {
    pub agent_id: usize,
    pub policy: PolicyTag,
    /// Final status; `Active` only when the episode was cut short.
    pub status: Status,
    pub arrival_time: Option<f64>,
    pub total_reward: f64,
    pub start: Vec2,
    pub goal: Vec2,
    pub pref_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMeta {
    pub episode_id: u64,
    pub n_agents: usize,
    pub dt: f64,
    pub time_limit: f64,
    pub domain_size: f64,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub meta: EpisodeMeta,
    pub steps: Vec<Snapshot>,
    pub outcomes: Vec<AgentOutcome>,
    /// Value estimate of the last state for learned agents that ended without a terminal event.
    pub final_values: Vec<Option<f32>>,
}

impl EpisodeLog {
    pub fn status_name(status: Status) -> &'static str {
        match status {
            Status::Active => "active",
            Status::AtGoal => "at_goal",
            Status::Collided => "collided",
            Status::TimedOut => "timed_out",
        }
    }

    /// One row per agent per snapshot.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["episode_id", "t", "agent_id", "px", "py", "vx", "vy", "psi", "status"])?;
        for snap in &self.steps {
            for a in &snap.agents {
                w.write_record([
                    self.meta.episode_id.to_string(),
                    snap.t.to_string(),
                    a.id.to_string(),
                    a.position.x.to_string(),
                    a.position.y.to_string(),
                    a.velocity.x.to_string(),
                    a.velocity.y.to_string(),
                    a.heading.to_string(),
                    Self::status_name(a.status).to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| SimError::io(Path::new("<csv>"), e))?;
        Ok(())
    }

    pub fn save_json(&self, path: &Path) -> Result<(), SimError> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json).map_err(|e| SimError::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), SimError> {
        let file = std::fs::File::create(path).map_err(|e| SimError::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn final_world(&self) -> &[AgentState] {
        &self.steps.last().expect("log has an initial snapshot").agents
    }
}

fn policy_error(e: impl std::error::Error + Send + Sync + 'static) -> SimError {
    SimError::Policy(Box::new(e))
}

/// Runs one episode to completion. Deterministic given the scenario (including its seed),
/// the learned policy's parameters and the selection mode.
pub fn run_episode(
    scenario: &ScenarioSpec,
    policies: &PolicyTable<'_>,
    cfg: &SimConfig,
    episode_id: u64,
) -> Result<EpisodeLog, SimError> {
    scenario.validate()?;
    let has_learned = scenario.agents.iter().any(|a| a.policy == PolicyTag::Learned);
    if has_learned && policies.learned.is_none() {
        return Err(SimError::MissingPolicy(PolicyTag::Learned));
    }
    let params = StepParams {
        dt: scenario.dt,
        time_limit: scenario.time_limit,
        arrival_tolerance: cfg.arrival_tolerance,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.rng_seed);
    let mut world = scenario.initial_world();
    let n = world.len();
    let mut steps: Vec<Snapshot> = Vec::new();
    let mut totals = vec![0.0; n];
    let mut arrival = vec![None; n];

    let keep_running = |world: &[AgentState]| {
        if policies.stop_when_learned_done && has_learned {
            world.iter().any(|a| a.is_active() && a.policy == PolicyTag::Learned)
        } else {
            world.iter().any(AgentState::is_active)
        }
    };

    let mut k: u64 = 0;
    while keep_running(&world) {
        let mut decisions: Vec<Option<Decision>> = vec![None; n];

        let learners: Vec<usize> = (0..n)
            .filter(|&i| world[i].is_active() && world[i].policy == PolicyTag::Learned)
            .collect();
        if !learners.is_empty() {
            let observations: Vec<ObservationSequence> = learners
                .iter()
                .map(|&i| build_observation(&world, i, &policies.obs))
                .collect();
            let learned = policies.learned.expect("checked above");
            let outputs = learned.evaluate(&observations).map_err(SimError::Policy)?;
            if outputs.len() != learners.len() {
                return Err(SimError::PolicyOutputCount {
                    expected: learners.len(),
                    got: outputs.len(),
                });
            }
            for (&i, out) in learners.iter().zip(outputs) {
                let index = select_action(&out.probs, policies.mode, &mut rng).map_err(policy_error)?;
                let action = action_at(world[i].pref_speed, index).ok_or(SimError::PolicyOutputCount {
                    expected: super::ACTION_COUNT,
                    got: out.probs.len(),
                })?;
                decisions[i] = Some(Decision {
                    action,
                    action_index: Some(index),
                    value: Some(out.value),
                    probs: policies.record_distributions.then_some(out.probs),
                });
            }
        }
        for i in 0..n {
            if !world[i].is_active() || decisions[i].is_some() {
                continue;
            }
            let decision = match world[i].policy {
                PolicyTag::Scripted => {
                    let c = expert_action(&world, i, scenario.dt, &policies.expert);
                    Decision {
                        action: c.action,
                        action_index: Some(c.index),
                        value: None,
                        probs: None,
                    }
                }
                tag => Decision {
                    action: Baseline::from_tag(tag)
                        .expect("non-learned tags are baselines")
                        .act(&world[i]),
                    action_index: None,
                    value: None,
                    probs: None,
                },
            };
            decisions[i] = Some(decision);
        }

        let participants: Vec<usize> = (0..n).filter(|&i| world[i].is_active()).collect();
        let before = world.clone();
        let actions: Vec<Option<Action>> = decisions.iter().map(|d| d.as_ref().map(|d| d.action)).collect();
        step(&mut world, &actions, &params)?;

        let mut rewards = vec![None; n];
        for &i in &participants {
            let reached = world[i].status == Status::AtGoal;
            if reached {
                arrival[i] = Some(world[i].elapsed);
            }
            let d_min = min_surface_distance(&world[i], participants.iter().filter(|&&j| j != i).map(|&j| &world[j]));
            let r = cfg.reward.evaluate(reached, d_min);
            totals[i] += r;
            rewards[i] = Some(r);
        }
        steps.push(Snapshot {
            t: k as f64 * scenario.dt,
            agents: before,
            decisions,
            rewards,
        });
        k += 1;
    }

    let mut final_values = vec![None; n];
    if let Some(learned) = policies.learned {
        let pending: Vec<usize> = (0..n)
            .filter(|&i| {
                world[i].policy == PolicyTag::Learned && matches!(world[i].status, Status::Active | Status::TimedOut)
            })
            .collect();
        if !pending.is_empty() {
            let observations: Vec<ObservationSequence> = pending
                .iter()
                .map(|&i| build_observation(&world, i, &policies.obs))
                .collect();
            let outputs = learned.evaluate(&observations).map_err(SimError::Policy)?;
            for (&i, out) in pending.iter().zip(outputs) {
                final_values[i] = Some(out.value);
            }
        }
    }

    let outcomes = world
        .iter()
        .zip(&scenario.agents)
        .enumerate()
        .map(|(i, (a, spec))| AgentOutcome {
            agent_id: a.id,
            policy: a.policy,
            status: a.status,
            arrival_time: arrival[i],
            total_reward: totals[i],
            start: spec.start,
            goal: spec.goal,
            pref_speed: spec.pref_speed,
        })
        .collect();
    steps.push(Snapshot {
        t: k as f64 * scenario.dt,
        agents: world,
        decisions: Vec::new(),
        rewards: Vec::new(),
    });

    Ok(EpisodeLog {
        meta: EpisodeMeta {
            episode_id,
            n_agents: n,
            dt: scenario.dt,
            time_limit: scenario.time_limit,
            domain_size: scenario.domain_size,
            rng_seed: scenario.rng_seed,
        },
        steps,
        outcomes,
        final_values,
    })
}
