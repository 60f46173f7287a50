//! Phase-1 reinforcement learning at desk scale (2-3 agents, 4 x 4 m), single-threaded.
//!
//! `cargo run --release --example train_desk_phase1 -- <pretrain.ckpt> [episodes]`
//! Prints the smoothed reward curve and two-agent success before and after training.

use std::path::Path;

use crowdnav::eval::{evaluate, generate_suite, EvalOptions, EvalPolicy, TestSuite};
use crowdnav::net::{Checkpoint, NetParams};
use crowdnav::sim::SimConfig;
use crowdnav::trainer::{run_training, ExecutionMode, RunOptions, TrainingConfig, TrainingSetup};

fn success(params: &NetParams<f32>, suite: &TestSuite) -> Result<f64, Box<dyn std::error::Error>> {
    let policy = EvalPolicy::Learned { name: "net", params };
    Ok(evaluate(policy, suite, &EvalOptions::default())?.success_rate())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let init_path = args
        .next()
        .ok_or("usage: train_desk_phase1 <pretrain.ckpt> [episodes]")?;
    let episodes: u64 = args.next().map_or(Ok(20_000), |s| s.parse())?;
    let init = Checkpoint::load(Path::new(&init_path))?;

    let mut train = TrainingConfig {
        mode: ExecutionMode::Inline,
        learning_rate: 1e-4,
        checkpoint_every: 0,
        plateau_window: 0,
        seed: 3,
        ..TrainingConfig::default()
    };
    train.phase1.min_agents = 2;
    train.phase1.max_agents = 3;
    train.phase1.episodes = episodes;
    train.phase2.episodes = 0;
    let setup = TrainingSetup {
        train,
        ..TrainingSetup::default()
    };

    let suite = generate_suite("two_agents", 2, 4.0, 100, 98, &SimConfig::default())?;
    println!(
        "two-agent success before: {:.0}%",
        100.0 * success(&init.params, &suite)?
    );

    let outcome = run_training(&setup, init, &RunOptions::default())?;
    let window = 1000.min(outcome.log.len());
    for start in (0..=outcome.log.len() - window).step_by((outcome.log.len() / 10).max(1)) {
        let rows = &outcome.log[start..start + window];
        let mean = rows.iter().map(|r| r.mean_reward).sum::<f64>() / window as f64;
        println!("episodes {:>6}..{:<6} mean reward {mean:.3}", start, start + window);
    }
    println!(
        "two-agent success after {} episodes: {:.0}%",
        outcome.checkpoint.episodes,
        100.0 * success(&outcome.checkpoint.params, &suite)?
    );
    Ok(())
}
