use serde::{Deserialize, Serialize};

use super::action::Action;
use super::agent::{surface_distance, AgentState, Status};
use super::SimError;
use crate::geom::{wrap_angle, Vec2};

/// Per-step integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub dt: f64,
    pub time_limit: f64,
    /// Minimum arrival radius; the effective radius is `max(this, speed * dt)`.
    pub arrival_tolerance: f64,
}

/// A status change produced by one call to [`step`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    Arrived { time: f64 },
    Collided { with: Vec<usize> },
    TimedOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentEvent {
    /// Index of the agent in the world slice.
    pub agent: usize,
    pub kind: EventKind,
}

// Elapsed time is a running sum of dt, so compare with a little slack.
const TIME_EPS: f64 = 1e-9;

/// Advances every active agent by one forward-Euler step and resolves collisions,
/// arrivals and timeouts. Frozen agents neither move nor take part in collision checks.
pub fn step(
    world: &mut [AgentState],
    actions: &[Option<Action>],
    params: &StepParams,
) -> Result<Vec<AgentEvent>, SimError> {
    if !(params.dt > 0.0) {
        return Err(SimError::InvalidTimestep(params.dt));
    }
    if actions.len() != world.len() {
        return Err(SimError::ActionCount {
            expected: world.len(),
            got: actions.len(),
        });
    }
    let movers: Vec<usize> = (0..world.len()).filter(|&i| world[i].is_active()).collect();
    for &i in &movers {
        if actions[i].is_none() {
            return Err(SimError::MissingAction { agent: world[i].id });
        }
    }

    for &i in &movers {
        let action = actions[i].expect("checked above");
        let agent = &mut world[i];
        agent.heading = wrap_angle(agent.heading + action.heading_change);
        agent.velocity = Vec2::from_angle(agent.heading) * action.speed;
        agent.position += agent.velocity * params.dt;
        agent.elapsed += params.dt;
    }

    let mut events = Vec::new();
    let mut collided_with: Vec<Vec<usize>> = vec![Vec::new(); world.len()];
    for (a, &i) in movers.iter().enumerate() {
        for &j in &movers[a + 1..] {
            if surface_distance(&world[i], &world[j]) < 0.0 {
                collided_with[i].push(world[j].id);
                collided_with[j].push(world[i].id);
            }
        }
    }

    for &i in &movers {
        let agent = &mut world[i];
        if !collided_with[i].is_empty() {
            agent.status = Status::Collided;
            events.push(AgentEvent {
                agent: i,
                kind: EventKind::Collided {
                    with: std::mem::take(&mut collided_with[i]),
                },
            });
            continue;
        }
        let speed = actions[i].map_or(0.0, |a| a.speed);
        let tolerance = params.arrival_tolerance.max(speed * params.dt);
        if agent.distance_to_goal() <= tolerance {
            agent.status = Status::AtGoal;
            events.push(AgentEvent {
                agent: i,
                kind: EventKind::Arrived { time: agent.elapsed },
            });
        } else if agent.elapsed > params.time_limit + TIME_EPS {
            agent.status = Status::TimedOut;
            events.push(AgentEvent {
                agent: i,
                kind: EventKind::TimedOut,
            });
        }
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::agent::test_agent;

    fn params() -> StepParams {
        StepParams {
            dt: 0.2,
            time_limit: 30.0,
            arrival_tolerance: 0.1,
        }
    }

    #[test]
    fn euler_step() {
        let mut world = vec![test_agent(0, 0.0, 0.0, 0.3)];
        let events = step(&mut world, &[Some(Action::new(1.0, 0.0))], &params()).unwrap();
        assert!(events.is_empty());
        assert!((world[0].position.x - 0.2).abs() < 1e-15);
        assert_eq!(world[0].position.y, 0.0);
        assert_eq!(world[0].velocity, Vec2::new(1.0, 0.0));
    }

    #[test]
    fn missing_action_is_an_error() {
        let mut world = vec![test_agent(0, 0.0, 0.0, 0.3), test_agent(1, 3.0, 0.0, 0.3)];
        let err = step(&mut world, &[Some(Action::STOP), None], &params()).unwrap_err();
        assert!(matches!(err, SimError::MissingAction { agent: 1 }));
    }

    #[test]
    fn stationary_agents_do_not_collide() {
        let mut world = vec![test_agent(0, 0.0, 0.0, 0.5), test_agent(1, 1.05, 0.0, 0.5)];
        let events = step(&mut world, &[Some(Action::STOP), Some(Action::STOP)], &params()).unwrap();
        assert!(events.is_empty());
        assert!(world.iter().all(|a| a.is_active()));
    }

    #[test]
    fn collision_is_symmetric() {
        let mut world = vec![test_agent(0, 0.0, 0.0, 0.5), test_agent(1, 1.1, 0.0, 0.5)];
        step(
            &mut world,
            &[Some(Action::new(1.0, 0.0)), Some(Action::STOP)],
            &params(),
        )
        .unwrap();
        assert_eq!(world[0].status, Status::Collided);
        assert_eq!(world[1].status, Status::Collided);
    }

    #[test]
    fn arrival_sets_time() {
        let mut a = test_agent(0, 0.0, 0.0, 0.3);
        a.goal = Vec2::new(0.05, 0.0);
        let mut world = vec![a];
        let events = step(&mut world, &[Some(Action::STOP)], &params()).unwrap();
        assert_eq!(world[0].status, Status::AtGoal);
        assert_eq!(events[0].kind, EventKind::Arrived { time: 0.2 });
    }

    #[test]
    fn frozen_agents_stay_put_and_are_ignored() {
        let mut world = vec![test_agent(0, 0.0, 0.0, 0.5), test_agent(1, 2.0, 0.0, 0.5)];
        world[1].status = Status::AtGoal;
        let before = world[1].clone();
        for _ in 0..10 {
            step(&mut world, &[Some(Action::new(1.0, 0.0)), None], &params()).unwrap();
        }
        assert_eq!(world[1], before);
        // agent 0 drove straight through the frozen agent without colliding
        assert_eq!(world[0].status, Status::Active);
        assert!(world[0].position.x > 1.9);
    }

    #[test]
    fn times_out() {
        let mut world = vec![test_agent(0, 0.0, 0.0, 0.3)];
        let p = StepParams {
            time_limit: 1.0,
            ..params()
        };
        let mut steps = 0;
        while world[0].is_active() {
            step(&mut world, &[Some(Action::STOP)], &p).unwrap();
            steps += 1;
        }
        assert_eq!(world[0].status, Status::TimedOut);
        assert_eq!(steps, 6);
    }
}
