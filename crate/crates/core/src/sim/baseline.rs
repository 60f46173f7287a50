use super::action::{Action, MAX_HEADING_CHANGE};
use super::agent::{AgentState, PolicyTag};
use crate::geom::wrap_angle;

/// Non-learning reference controllers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    /// Full speed, turning toward the goal as fast as the action limits allow. Ignores others.
    NonCooperative,
    /// Never moves.
    ZeroVelocity,
}

impl Baseline {
    pub fn from_tag(tag: PolicyTag) -> Option<Self> {
        match tag {
            PolicyTag::NonCooperative => Some(Self::NonCooperative),
            PolicyTag::ZeroVelocity => Some(Self::ZeroVelocity),
            _ => None,
        }
    }

    pub fn act(self, agent: &AgentState) -> Action {
        match self {
            Baseline::ZeroVelocity => Action::STOP,
            Baseline::NonCooperative => {
                let bearing = (agent.goal - agent.position).angle();
                let turn = wrap_angle(bearing - agent.heading).clamp(-MAX_HEADING_CHANGE, MAX_HEADING_CHANGE);
                Action::new(agent.pref_speed, turn)
            }
        }
    }
}

/// Action of a baseline-tagged agent; `None` for tags that are not baselines.
pub fn baseline_policy(tag: PolicyTag, agent: &AgentState, _world: &[AgentState]) -> Option<Action> {
    Baseline::from_tag(tag).map(|b| b.act(agent))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;
    use crate::sim::agent::test_agent;
    use std::f64::consts::PI;

    #[test]
    fn zero_velocity_stands_still() {
        let a = test_agent(0, 1.0, 2.0, 0.4);
        assert_eq!(baseline_policy(PolicyTag::ZeroVelocity, &a, &[]), Some(Action::STOP));
    }

    #[test]
    fn non_cooperative_goes_straight() {
        let a = test_agent(0, 0.0, 0.0, 0.4);
        assert_eq!(Baseline::NonCooperative.act(&a), Action::new(1.0, 0.0));
    }

    #[test]
    fn non_cooperative_turn_is_clipped() {
        let mut a = test_agent(0, 0.0, 0.0, 0.4);
        a.goal = Vec2::new(0.0, 5.0);
        let act = Baseline::NonCooperative.act(&a);
        assert_eq!(act.speed, 1.0);
        assert!((act.heading_change - PI / 6.0).abs() < 1e-15);
    }

    #[test]
    fn learned_tag_is_not_a_baseline() {
        let a = test_agent(0, 0.0, 0.0, 0.4);
        assert_eq!(baseline_policy(PolicyTag::Learned, &a, &[]), None);
    }
}
