//! Antipodal circle crossing with any number of agents.
//!
//! `cargo run --release --example circle_rollout -- [n_agents] [checkpoint] [episode.json]`
//! Without a checkpoint the scripted expert drives every agent.

use std::path::Path;

use crowdnav::net::Checkpoint;
use crowdnav::sim::{
    generate_structured_scenario, run_episode, EpisodeLog, PolicyTable, PolicyTag, SimConfig, StructuredKind,
};
use crowdnav::trainer::SelectionMode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(Ok(20), |s| s.parse())?;
    let checkpoint = args.next().map(|p| Checkpoint::load(Path::new(&p))).transpose()?;
    let out = args.next().unwrap_or_else(|| "episode.json".into());

    let sim = SimConfig::default();
    let scenario = generate_structured_scenario(StructuredKind::Circle, n, &sim)?;
    let log = match &checkpoint {
        Some(c) => run_episode(
            &scenario,
            &PolicyTable::with_learned(&c.params, SelectionMode::Greedy),
            &sim,
            0,
        )?,
        None => run_episode(
            &scenario.with_policy(PolicyTag::Scripted),
            &PolicyTable::baselines(),
            &sim,
            0,
        )?,
    };
    for o in &log.outcomes {
        println!(
            "agent {:>2}: {:<9} arrival {}",
            o.agent_id,
            EpisodeLog::status_name(o.status),
            o.arrival_time.map_or("-".into(), |t| format!("{t:.1} s"))
        );
    }
    log.save_json(Path::new(&out))?;
    println!("{} snapshots written to {out}", log.steps.len());
    Ok(())
}
