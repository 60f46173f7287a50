//! Ego-frame observations.
//!
//! The ego frame has its origin at the agent and its x-axis pointing at the agent's goal, so the
//! goal always sits at `(d_g, 0)`. Other agents are described by one fixed-size vector each and
//! ordered farthest first, which makes the closest agent the last input the LSTM sees.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::geom::{wrap_angle, Vec2};
use crate::sim::AgentState;

/// Length of [`EgoObservation::to_array`].
pub const EGO_DIM: usize = 4;
/// Length of [`OtherObservation::to_array`].
pub const OTHER_DIM: usize = 7;
/// Longest sequence of other agents fed to the network.
pub const DEFAULT_MAX_OTHERS: usize = 19;

// Below this distance to goal the goal bearing is undefined.
const DEGENERATE_GOAL_DISTANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoObservation {
    pub dist_to_goal: f64,
    pub pref_speed: f64,
    /// Heading relative to the goal direction, in (-pi, pi].
    pub heading: f64,
    pub radius: f64,
}

impl EgoObservation {
    pub fn to_array(&self) -> [f64; EGO_DIM] {
        [self.dist_to_goal, self.pref_speed, self.heading, self.radius]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OtherObservation {
    pub position: Vec2,
    pub velocity: Vec2,
    pub radius: f64,
    /// Center-to-center distance to the ego agent.
    pub distance: f64,
    pub combined_radius: f64,
}

impl OtherObservation {
    pub fn to_array(&self) -> [f64; OTHER_DIM] {
        [
            self.position.x,
            self.position.y,
            self.velocity.x,
            self.velocity.y,
            self.radius,
            self.distance,
            self.combined_radius,
        ]
    }
}

/// Everything one agent knows at a decision step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSequence {
    pub ego: EgoObservation,
    /// Sorted by non-increasing distance: farthest first, closest last.
    pub others: Vec<OtherObservation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObsConfig {
    /// Other agents farther than this (center distance) are not observed.
    pub sensing_radius: f64,
    /// Sequence cap; the farthest agents are dropped first.
    pub max_others: usize,
}

impl Default for ObsConfig {
    fn default() -> Self {
        Self {
            sensing_radius: f64::INFINITY,
            max_others: DEFAULT_MAX_OTHERS,
        }
    }
}

/// Orientation of the ego frame: the goal bearing, or the heading when sitting on the goal.
pub fn frame_angle(agent: &AgentState) -> f64 {
    let to_goal = agent.goal - agent.position;
    if to_goal.norm() < DEGENERATE_GOAL_DISTANCE {
        agent.heading
    } else {
        to_goal.angle()
    }
}

pub fn ego_observation(agent: &AgentState) -> EgoObservation {
    EgoObservation {
        dist_to_goal: agent.distance_to_goal(),
        pref_speed: agent.pref_speed,
        heading: wrap_angle(agent.heading - frame_angle(agent)),
        radius: agent.radius,
    }
}

/// Expresses `other` in `agent`'s ego frame.
pub fn to_ego_frame(agent: &AgentState, other: &AgentState) -> OtherObservation {
    let theta = frame_angle(agent);
    let offset = other.position - agent.position;
    OtherObservation {
        position: offset.rotate(-theta),
        velocity: other.velocity.rotate(-theta),
        radius: other.radius,
        distance: offset.norm(),
        combined_radius: other.radius + agent.radius,
    }
}

pub fn build_observation(world: &[AgentState], ego_index: usize, cfg: &ObsConfig) -> ObservationSequence {
    let agent = &world[ego_index];
    let mut others: Vec<(usize, OtherObservation)> = world
        .iter()
        .enumerate()
        .filter(|&(j, o)| j != ego_index && o.is_active())
        .map(|(_, o)| (o.id, to_ego_frame(agent, o)))
        .filter(|(_, o)| o.distance <= cfg.sensing_radius)
        .collect();
    others.sort_by(|(ia, a), (ib, b)| {
        b.distance
            .partial_cmp(&a.distance)
            .unwrap_or(Ordering::Equal)
            .then(ia.cmp(ib))
    });
    if others.len() > cfg.max_others {
        others.drain(..others.len() - cfg.max_others);
    }
    ObservationSequence {
        ego: ego_observation(agent),
        others: others.into_iter().map(|(_, o)| o).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{PolicyTag, Status};
    use std::f64::consts::PI;

    fn agent(id: usize, p: Vec2, v: Vec2, goal: Vec2, r: f64) -> AgentState {
        AgentState {
            id,
            position: p,
            velocity: v,
            heading: 0.0,
            radius: r,
            goal,
            pref_speed: 1.0,
            policy: PolicyTag::Learned,
            status: Status::Active,
            elapsed: 0.0,
        }
    }

    #[test]
    fn identity_frame() {
        let a = agent(0, Vec2::ZERO, Vec2::ZERO, Vec2::new(1.0, 0.0), 0.3);
        let b = agent(1, Vec2::new(2.0, 0.0), Vec2::new(-1.0, 0.0), Vec2::ZERO, 0.3);
        let o = to_ego_frame(&a, &b);
        assert_eq!(o.to_array(), [2.0, 0.0, -1.0, 0.0, 0.3, 2.0, 0.6]);
    }

    #[test]
    fn quarter_turn_frame() {
        let a = agent(0, Vec2::ZERO, Vec2::ZERO, Vec2::new(0.0, 1.0), 0.3);
        let b = agent(1, Vec2::new(0.0, 2.0), Vec2::ZERO, Vec2::ZERO, 0.3);
        let o = to_ego_frame(&a, &b);
        assert!((o.position.x - 2.0).abs() < 1e-12);
        assert!(o.position.y.abs() < 1e-12);
        let ego = ego_observation(&a);
        assert!((ego.heading + PI / 2.0).abs() < 1e-12);
        assert_eq!(ego.dist_to_goal, 1.0);
    }

    #[test]
    fn sorted_farthest_first() {
        let goal = Vec2::new(10.0, 0.0);
        let world = vec![
            agent(0, Vec2::ZERO, Vec2::ZERO, goal, 0.2),
            agent(1, Vec2::new(5.0, 0.0), Vec2::ZERO, goal, 0.2),
            agent(2, Vec2::new(0.0, 1.0), Vec2::ZERO, goal, 0.2),
            agent(3, Vec2::new(-3.0, 0.0), Vec2::ZERO, goal, 0.2),
        ];
        let seq = build_observation(&world, 0, &ObsConfig::default());
        let d: Vec<f64> = seq.others.iter().map(|o| o.distance).collect();
        assert_eq!(d, vec![5.0, 3.0, 1.0]);
    }

    #[test]
    fn alone_has_no_others() {
        let world = vec![agent(0, Vec2::ZERO, Vec2::ZERO, Vec2::new(1.0, 1.0), 0.2)];
        assert!(build_observation(&world, 0, &ObsConfig::default()).others.is_empty());
    }

    #[test]
    fn ties_broken_by_id() {
        let goal = Vec2::new(10.0, 0.0);
        let world = vec![
            agent(0, Vec2::ZERO, Vec2::ZERO, goal, 0.2),
            agent(1, Vec2::new(0.0, 2.0), Vec2::ZERO, goal, 0.3),
            agent(2, Vec2::new(0.0, -2.0), Vec2::ZERO, goal, 0.4),
        ];
        let seq = build_observation(&world, 0, &ObsConfig::default());
        assert_eq!(seq.others[0].radius, 0.3);
        assert_eq!(seq.others[1].radius, 0.4);
    }

    #[test]
    fn inactive_and_distant_agents_are_hidden() {
        let goal = Vec2::new(10.0, 0.0);
        let mut world = vec![
            agent(0, Vec2::ZERO, Vec2::ZERO, goal, 0.2),
            agent(1, Vec2::new(0.0, 2.0), Vec2::ZERO, goal, 0.3),
            agent(2, Vec2::new(0.0, 9.0), Vec2::ZERO, goal, 0.4),
        ];
        let cfg = ObsConfig {
            sensing_radius: 5.0,
            ..ObsConfig::default()
        };
        assert_eq!(build_observation(&world, 0, &cfg).others.len(), 1);
        world[1].status = Status::Collided;
        assert!(build_observation(&world, 0, &cfg).others.is_empty());
    }

    #[test]
    fn cap_drops_farthest() {
        let goal = Vec2::new(50.0, 0.0);
        let mut world = vec![agent(0, Vec2::ZERO, Vec2::ZERO, goal, 0.2)];
        for k in 1..=25 {
            world.push(agent(k, Vec2::new(0.0, 1.0 + k as f64), Vec2::ZERO, goal, 0.2));
        }
        let seq = build_observation(&world, 0, &ObsConfig::default());
        assert_eq!(seq.others.len(), DEFAULT_MAX_OTHERS);
        assert_eq!(seq.others.last().unwrap().distance, 2.0);
        assert_eq!(seq.others[0].distance, 20.0);
    }

    #[test]
    fn degenerate_frame_uses_heading() {
        let mut a = agent(0, Vec2::ZERO, Vec2::ZERO, Vec2::ZERO, 0.2);
        a.heading = 0.7;
        let b = agent(1, Vec2::new(1.0, 0.0), Vec2::ZERO, Vec2::ZERO, 0.2);
        let o = to_ego_frame(&a, &b);
        let expected = Vec2::new(1.0, 0.0).rotate(-0.7);
        assert!(o.position.distance(expected) < 1e-12);
        assert_eq!(ego_observation(&a).heading, 0.0);
    }
}
