use serde::{Deserialize, Serialize};

use super::agent::{surface_distance, AgentState};

/// Sparse collision-avoidance reward parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardParams {
    pub goal_reward: f64,
    pub collision_penalty: f64,
    /// Surface distance below which the proximity penalty applies.
    pub proximity_threshold: f64,
    pub proximity_offset: f64,
    pub proximity_slope: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            goal_reward: 1.0,
            collision_penalty: -0.25,
            proximity_threshold: 0.2,
            proximity_offset: -0.1,
            proximity_slope: 0.05,
        }
    }
}

impl RewardParams {
    pub fn is_valid(&self) -> bool {
        self.proximity_threshold > 0.0
            && self.collision_penalty < self.proximity_offset
            && self.proximity_offset < self.goal_reward
    }

    /// Reward for a known closest surface distance (`None` when there is no other agent).
    ///
    /// Branches are checked in order: goal, collision, proximity, otherwise zero.
    pub fn evaluate(&self, reached_goal: bool, d_min: Option<f64>) -> f64 {
        if reached_goal {
            return self.goal_reward;
        }
        match d_min {
            Some(d) if d < 0.0 => self.collision_penalty,
            Some(d) if d > 0.0 && d < self.proximity_threshold => self.proximity_offset + self.proximity_slope * d,
            _ => 0.0,
        }
    }
}

/// Smallest surface distance from `agent` to any of `others`.
pub fn min_surface_distance<'a>(agent: &AgentState, others: impl IntoIterator<Item = &'a AgentState>) -> Option<f64> {
    others
        .into_iter()
        .map(|o| surface_distance(agent, o))
        .fold(None, |acc, d| Some(acc.map_or(d, |a: f64| a.min(d))))
}

pub fn reward(agent: &AgentState, others: &[AgentState], reached_goal: bool, params: &RewardParams) -> f64 {
    params.evaluate(reached_goal, min_surface_distance(agent, others))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::agent::test_agent;

    fn at_distance(d_min: f64) -> (AgentState, Vec<AgentState>) {
        let a = test_agent(0, 0.0, 0.0, 0.5);
        let b = test_agent(1, 1.0 + d_min, 0.0, 0.5);
        (a, vec![b])
    }

    #[test]
    fn goal_branch() {
        let (a, others) = at_distance(-0.3);
        assert_eq!(reward(&a, &others, true, &RewardParams::default()), 1.0);
    }

    #[test]
    fn collision_branch() {
        let (a, others) = at_distance(-0.05);
        assert_eq!(reward(&a, &others, false, &RewardParams::default()), -0.25);
    }

    #[test]
    fn proximity_branch() {
        let r = RewardParams::default().evaluate(false, Some(0.1));
        assert!((r + 0.095).abs() < 1e-15);
        let (a, others) = at_distance(0.1);
        assert!((reward(&a, &others, false, &RewardParams::default()) + 0.095).abs() < 1e-12);
    }

    #[test]
    fn alone_is_zero() {
        let a = test_agent(0, 0.0, 0.0, 0.5);
        assert_eq!(reward(&a, &[], false, &RewardParams::default()), 0.0);
    }

    #[test]
    fn boundaries_fall_through() {
        let p = RewardParams::default();
        assert_eq!(p.evaluate(false, Some(0.0)), 0.0);
        assert_eq!(p.evaluate(false, Some(0.2)), 0.0);
        assert_eq!(p.evaluate(false, Some(5.0)), 0.0);
    }

    #[test]
    fn defaults_valid() {
        assert!(RewardParams::default().is_valid());
    }
}
