//! Behaviour-clones the scripted expert, then checks greedy single-agent navigation.
//!
//! `cargo run --release --example pretrain_single_agent -- [examples] [epochs] [out.ckpt]`
//! (defaults: 5000 examples, 10 epochs, `pretrain.ckpt`).

use std::path::PathBuf;

use crowdnav::eval::{evaluate, generate_suite, EvalOptions, EvalPolicy};
use crowdnav::net::{Checkpoint, NetConfig, NetParams};
use crowdnav::obs::ObsConfig;
use crowdnav::sim::{ExpertConfig, SimConfig};
use crowdnav::trainer::{generate_supervised_dataset, supervised_init, PretrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let examples = args.next().map_or(Ok(5000), |s| s.parse())?;
    let epochs = args.next().map_or(Ok(10), |s| s.parse())?;
    let out = PathBuf::from(args.next().unwrap_or_else(|| "pretrain.ckpt".into()));

    let cfg = PretrainConfig {
        examples,
        epochs,
        seed: 1,
        ..PretrainConfig::default()
    };
    let sim = SimConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let dataset = generate_supervised_dataset(
        cfg.examples,
        &cfg,
        &sim,
        &ObsConfig::default(),
        &ExpertConfig::default(),
        &mut rng,
    )?;
    println!("{} expert decisions", dataset.len());

    let mut params = NetParams::init(NetConfig::default(), &mut rng)?;
    supervised_init(&dataset, &mut params, &cfg, |e| {
        println!(
            "epoch {:>2}: value {:.4}  policy {:.4}",
            e.epoch, e.value_loss, e.policy_loss
        );
    })?;

    let suite = generate_suite("single", 1, 4.0, 100, 99, &sim)?;
    let result = evaluate(
        EvalPolicy::Learned {
            name: "pretrained",
            params: &params,
        },
        &suite,
        &EvalOptions::default(),
    )?;
    println!("single-agent success: {:.0}%", 100.0 * result.success_rate());
    Checkpoint::new(params).save(&out)?;
    println!("saved {}", out.display());
    Ok(())
}
