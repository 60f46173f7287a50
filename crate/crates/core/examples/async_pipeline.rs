//! The threaded training pipeline: workers simulate episodes, a predictor thread batches their
//! network queries, and the trainer applies updates and publishes new weights.
//!
//! `cargo run --release --example async_pipeline -- [episodes] [workers]`

use crowdnav::net::{Checkpoint, NetConfig, NetParams};
use crowdnav::trainer::{run_training, ExecutionMode, RunOptions, TrainingConfig, TrainingSetup};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let episodes: u64 = args.next().map_or(Ok(2000), |s| s.parse())?;
    let workers: usize = args.next().map_or(Ok(4), |s| s.parse())?;

    let mut train = TrainingConfig {
        mode: ExecutionMode::Threaded,
        workers,
        checkpoint_every: 0,
        seed: 5,
        ..TrainingConfig::default()
    };
    train.phase1.episodes = episodes / 2;
    train.phase2.episodes = episodes - episodes / 2;
    let setup = TrainingSetup {
        train,
        ..TrainingSetup::default()
    };
    let params = NetParams::init(NetConfig::default(), &mut ChaCha8Rng::seed_from_u64(5))?;
    let started = std::time::Instant::now();
    let outcome = run_training(&setup, Checkpoint::new(params), &RunOptions::default())?;
    let secs = started.elapsed().as_secs_f64();
    println!(
        "{} episodes in {secs:.1} s ({:.0}/s) with {workers} workers",
        outcome.checkpoint.episodes,
        outcome.checkpoint.episodes as f64 / secs
    );
    println!(
        "{} updates, {} skipped as non-finite, {} episodes dropped as stale",
        outcome.updates, outcome.skipped_updates, outcome.stale_dropped
    );
    if let Some(start) = outcome.phase2_start {
        println!("phase 2 (up to 10 agents, 6 x 6 m) began at episode {start}");
    }
    Ok(())
}
