use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::obs::{build_observation, ObsConfig, ObservationSequence};
use crate::sim::{EpisodeLog, PolicyTag, Status};

/// One decision of a learned agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub observation: ObservationSequence,
    pub action_index: usize,
    pub reward: f64,
    /// The step ended the agent's episode with a goal or collision.
    pub terminal: bool,
    /// Value estimate the acting network gave for `observation`.
    pub value: f64,
    pub episode_id: u64,
    pub agent_id: usize,
    pub step_index: usize,
}

/// A training target built from an experience.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnTarget {
    pub observation: ObservationSequence,
    pub action_index: usize,
    pub ret: f64,
    /// `ret` minus the value estimate stored with the experience.
    pub advantage: f64,
}

/// How the per-step discount factor is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscountMode {
    /// `gamma` per decision step.
    #[default]
    PerStep,
    /// `gamma^(dt * pref_speed)` per decision step.
    PrefSpeedScaled,
}

impl DiscountMode {
    pub fn step_factor(self, gamma: f64, dt: f64, pref_speed: f64) -> f64 {
        match self {
            DiscountMode::PerStep => gamma,
            DiscountMode::PrefSpeedScaled => gamma.powf(dt * pref_speed),
        }
    }
}

/// All experiences of one learned agent in one episode, in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub agent_id: usize,
    pub pref_speed: f64,
    pub experiences: Vec<Experience>,
    /// Value of the state after the last experience; 0 when the trajectory ended terminally.
    pub bootstrap_value: f64,
}

/// k-step discounted returns.
///
/// The trajectory is cut into segments of `k_horizon` steps. Inside a segment
/// `R_t = r_t + gamma * R_{t+1}`; the return after a segment's last step is the stored value of
/// the next segment's first experience, or `bootstrap_value` after the final segment
/// (forced to 0 if the last experience is terminal).
pub fn discounted_returns(
    trajectory: &[Experience],
    bootstrap_value: f64,
    gamma: f64,
    k_horizon: usize,
) -> Result<Vec<ReturnTarget>, TrainError> {
    let last = trajectory.last().ok_or(TrainError::EmptyTrajectory)?;
    if k_horizon == 0 {
        return Err(TrainError::InvalidConfig("k_horizon must be at least 1".into()));
    }
    let mut returns = vec![0.0; trajectory.len()];
    let mut tail = if last.terminal { 0.0 } else { bootstrap_value };
    let mut end = trajectory.len();
    while end > 0 {
        let start = (end - 1) / k_horizon * k_horizon;
        let mut acc = tail;
        for t in (start..end).rev() {
            acc = trajectory[t].reward + gamma * acc;
            returns[t] = acc;
        }
        tail = trajectory[start].value;
        end = start;
    }
    Ok(trajectory
        .iter()
        .zip(returns)
        .map(|(e, ret)| ReturnTarget {
            observation: e.observation.clone(),
            action_index: e.action_index,
            ret,
            advantage: ret - e.value,
        })
        .collect())
}

/// Extracts the experiences of every `Learned` agent from a finished episode. Observations are
/// rebuilt from the logged world snapshots, which reproduces exactly what the network saw.
pub fn trajectories_from_log(log: &EpisodeLog, obs: &ObsConfig) -> Vec<Trajectory> {
    let mut out = Vec::new();
    for (i, outcome) in log.outcomes.iter().enumerate() {
        if outcome.policy != PolicyTag::Learned {
            continue;
        }
        let mut experiences = Vec::new();
        for (k, snap) in log.steps.iter().enumerate() {
            let Some(Some(decision)) = snap.decisions.get(i) else {
                continue;
            };
            let (Some(action_index), Some(value)) = (decision.action_index, decision.value) else {
                continue;
            };
            experiences.push(Experience {
                observation: build_observation(&snap.agents, i, obs),
                action_index,
                reward: snap.rewards[i].unwrap_or(0.0),
                terminal: false,
                value: value as f64,
                episode_id: log.meta.episode_id,
                agent_id: outcome.agent_id,
                step_index: k,
            });
        }
        let Some(last) = experiences.last_mut() else {
            continue;
        };
        last.terminal = matches!(outcome.status, Status::AtGoal | Status::Collided);
        let bootstrap_value = if last.terminal {
            0.0
        } else {
            log.final_values[i].map_or(0.0, |v| v as f64)
        };
        out.push(Trajectory {
            agent_id: outcome.agent_id,
            pref_speed: outcome.pref_speed,
            experiences,
            bootstrap_value,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obs::EgoObservation;

    fn exp(reward: f64, terminal: bool, value: f64) -> Experience {
        Experience {
            observation: ObservationSequence {
                ego: EgoObservation {
                    dist_to_goal: 1.0,
                    pref_speed: 1.0,
                    heading: 0.0,
                    radius: 0.5,
                },
                others: Vec::new(),
            },
            action_index: 0,
            reward,
            terminal,
            value,
            episode_id: 0,
            agent_id: 0,
            step_index: 0,
        }
    }

    #[test]
    fn single_terminal_step() {
        let r = discounted_returns(&[exp(1.0, true, 0.3)], 5.0, 0.97, 32).unwrap();
        assert_eq!(r[0].ret, 1.0);
        assert!((r[0].advantage - 0.7).abs() < 1e-12);
    }

    #[test]
    fn terminal_goal_after_two_steps() {
        let t = [exp(0.0, false, 0.0), exp(0.0, false, 0.0), exp(1.0, true, 0.0)];
        let r = discounted_returns(&t, 0.0, 0.97, 32).unwrap();
        assert!((r[0].ret - 0.9409).abs() < 1e-12);
    }

    #[test]
    fn non_terminal_bootstrap() {
        let t = [exp(0.0, false, 0.0), exp(0.0, false, 0.0)];
        let r = discounted_returns(&t, 0.5, 0.97, 32).unwrap();
        assert!((r[0].ret - 0.47045).abs() < 1e-12);
    }

    #[test]
    fn segments_bootstrap_from_next_value() {
        let t = [
            exp(0.1, false, 0.0),
            exp(0.2, false, 0.0),
            exp(0.3, false, 9.0),
            exp(0.4, true, 0.0),
        ];
        let r = discounted_returns(&t, 0.0, 0.5, 2).unwrap();
        assert_eq!(r[3].ret, 0.4);
        assert_eq!(r[2].ret, 0.3 + 0.5 * 0.4);
        assert_eq!(r[1].ret, 0.2 + 0.5 * 9.0);
        assert_eq!(r[0].ret, 0.1 + 0.5 * r[1].ret);
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(
            discounted_returns(&[], 0.0, 0.9, 4),
            Err(TrainError::EmptyTrajectory)
        ));
    }

    #[test]
    fn pref_speed_discount() {
        assert_eq!(DiscountMode::PerStep.step_factor(0.97, 0.2, 1.5), 0.97);
        assert!((DiscountMode::PrefSpeedScaled.step_factor(0.97, 0.2, 1.5) - 0.97f64.powf(0.3)).abs() < 1e-15);
    }
}
