//! What one agent sees: its ego vector and the other agents in its goal-aligned frame.
//!
//! The same world is then rotated and shifted; the observation does not change.

use std::f64::consts::PI;

use crowdnav::geom::{wrap_angle, Vec2};
use crowdnav::obs::{build_observation, ObsConfig};
use crowdnav::sim::{AgentState, PolicyTag, Status};

fn agent(id: usize, position: Vec2, goal: Vec2, velocity: Vec2, radius: f64) -> AgentState {
    AgentState {
        id,
        position,
        velocity,
        heading: velocity.angle(),
        radius,
        goal,
        pref_speed: 1.0,
        policy: PolicyTag::Learned,
        status: Status::Active,
        elapsed: 0.0,
    }
}

fn transform(world: &[AgentState], theta: f64, shift: Vec2) -> Vec<AgentState> {
    world
        .iter()
        .map(|a| AgentState {
            position: a.position.rotate(theta) + shift,
            goal: a.goal.rotate(theta) + shift,
            velocity: a.velocity.rotate(theta),
            heading: wrap_angle(a.heading + theta),
            ..a.clone()
        })
        .collect()
}

fn main() {
    let world = vec![
        agent(0, Vec2::new(0.0, 0.0), Vec2::new(0.0, 3.0), Vec2::new(0.3, 0.9), 0.4),
        agent(1, Vec2::new(1.0, 1.5), Vec2::new(-2.0, 1.5), Vec2::new(-0.8, 0.0), 0.3),
        agent(2, Vec2::new(-2.5, -1.0), Vec2::new(2.0, 2.0), Vec2::new(0.5, 0.4), 0.5),
        agent(3, Vec2::new(0.2, -1.2), Vec2::new(0.2, 2.0), Vec2::new(0.0, 0.0), 0.2),
    ];
    let cfg = ObsConfig::default();
    let obs = build_observation(&world, 0, &cfg);
    println!("ego (dist to goal, v_pref, heading, radius): {:?}", obs.ego.to_array());
    println!("others, farthest first (px, py, vx, vy, r, dist, r + r_ego):");
    for o in &obs.others {
        let v: Vec<String> = o.to_array().iter().map(|x| format!("{x:7.3}")).collect();
        println!("  {}", v.join(" "));
    }

    let moved = transform(&world, 0.7 * PI, Vec2::new(5.0, -3.0));
    let again = build_observation(&moved, 0, &cfg);
    let worst = obs
        .others
        .iter()
        .zip(&again.others)
        .flat_map(|(a, b)| a.to_array().into_iter().zip(b.to_array()).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    println!("largest change after rotating by 0.7 pi and shifting: {worst:.2e}");
}
