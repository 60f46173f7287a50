use serde::{Deserialize, Serialize};

use crate::geom::Vec2;

/// Which controller drives an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyTag {
    Learned,
    NonCooperative,
    ZeroVelocity,
    Scripted,
}

/// Lifecycle of an agent within one episode. Only `Active` agents move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Active,
    AtGoal,
    Collided,
    TimedOut,
}

impl Status {
    pub fn is_active(self) -> bool {
        self == Status::Active
    }
}

/// Full simulated state of one agent, in the global frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: usize,
    pub position: Vec2,
    pub velocity: Vec2,
    /// Heading in radians, kept in (-pi, pi].
    pub heading: f64,
    pub radius: f64,
    pub goal: Vec2,
    pub pref_speed: f64,
    pub policy: PolicyTag,
    pub status: Status,
    /// Seconds simulated so far for this agent; stops advancing once the agent is frozen.
    pub elapsed: f64,
}

impl AgentState {
    pub fn distance_to_goal(&self) -> f64 {
        self.position.distance(self.goal)
    }

    pub fn is_active(&self) -> bool {
        self.status.is_active()
    }
}

/// Center distance minus both radii. Negative iff the two disks overlap.
pub fn surface_distance(a: &AgentState, b: &AgentState) -> f64 {
    a.position.distance(b.position) - a.radius - b.radius
}

#[cfg(test)]
pub(crate) fn test_agent(id: usize, x: f64, y: f64, radius: f64) -> AgentState {
    AgentState {
        id,
        position: Vec2::new(x, y),
        velocity: Vec2::ZERO,
        heading: 0.0,
        radius,
        goal: Vec2::new(x + 10.0, y),
        pref_speed: 1.0,
        policy: PolicyTag::Learned,
        status: Status::Active,
        elapsed: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_disks() {
        let a = test_agent(0, 0.0, 0.0, 0.5);
        let b = test_agent(1, 2.0, 0.0, 0.5);
        assert_eq!(surface_distance(&a, &b), 1.0);
        assert_eq!(surface_distance(&b, &a), 1.0);
    }

    #[test]
    fn overlapping_disks() {
        let a = test_agent(0, 0.0, 0.0, 0.5);
        let b = test_agent(1, 0.8, 0.0, 0.5);
        assert!((surface_distance(&a, &b) + 0.2).abs() < 1e-15);
    }

    #[test]
    fn coincident_disks() {
        let a = test_agent(0, 1.0, 1.0, 0.3);
        assert!((surface_distance(&a, &a.clone()) + 0.6).abs() < 1e-15);
    }
}
