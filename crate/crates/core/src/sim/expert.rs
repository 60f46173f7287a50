//! Scripted goal-seeking controller used to produce supervised training data.
//!
//! Each decision scores every discrete action by the distance to goal it leaves the agent at,
//! after vetoing actions whose straight continuation would bring the agent closer than
//! `safety_margin` to another active agent within the look-ahead window. Other agents are
//! extrapolated at their current velocity.

use serde::{Deserialize, Serialize};

use super::action::{action_at, Action, ACTION_COUNT};
use super::agent::AgentState;
use crate::geom::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpertConfig {
    /// Minimum predicted surface distance an action may produce.
    pub safety_margin: f64,
    /// Look-ahead window in decision steps.
    pub horizon_steps: usize,
}

impl Default for ExpertConfig {
    fn default() -> Self {
        Self {
            safety_margin: 0.0,
            horizon_steps: 1,
        }
    }
}

/// The expert's choice for one agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpertChoice {
    pub index: usize,
    pub action: Action,
}

/// Minimum over `t in [0, horizon]` of `|rel_pos + rel_vel * t|`.
fn min_distance_over(rel_pos: Vec2, rel_vel: Vec2, horizon: f64) -> f64 {
    let vv = rel_vel.norm_squared();
    let t = if vv > 0.0 {
        (-rel_pos.dot(rel_vel) / vv).clamp(0.0, horizon)
    } else {
        0.0
    };
    (rel_pos + rel_vel * t).norm()
}

/// Velocity produced by `action` for an agent currently heading `heading`.
fn velocity_of(heading: f64, action: Action) -> Vec2 {
    Vec2::from_angle(heading + action.heading_change) * action.speed
}

pub fn expert_action(world: &[AgentState], ego: usize, dt: f64, cfg: &ExpertConfig) -> ExpertChoice {
    let agent = &world[ego];
    let horizon = dt * cfg.horizon_steps.max(1) as f64;
    let others: Vec<&AgentState> = world
        .iter()
        .enumerate()
        .filter(|&(j, o)| j != ego && o.is_active())
        .map(|(_, o)| o)
        .collect();

    // (index, predicted distance to goal, worst predicted surface distance)
    let scored: Vec<(usize, f64, f64)> = (0..ACTION_COUNT)
        .map(|i| {
            let action = action_at(agent.pref_speed, i).expect("index in range");
            let v = velocity_of(agent.heading, action);
            let next = agent.position + v * dt;
            let clearance = others
                .iter()
                .map(|o| {
                    min_distance_over(agent.position - o.position, v - o.velocity, horizon) - agent.radius - o.radius
                })
                .fold(f64::INFINITY, f64::min);
            (i, next.distance(agent.goal), clearance)
        })
        .collect();

    let allowed = scored
        .iter()
        .filter(|s| s.2 >= cfg.safety_margin)
        .min_by(|a, b| a.1.total_cmp(&b.1));
    let index = match allowed {
        Some(s) => s.0,
        // every action is vetoed: take the one that keeps the most clearance
        None => scored
            .iter()
            .max_by(|a, b| a.2.total_cmp(&b.2).then(b.0.cmp(&a.0)))
            .map(|s| s.0)
            .unwrap_or(0),
    };
    ExpertChoice {
        index,
        action: action_at(agent.pref_speed, index).expect("index in range"),
    }
}
