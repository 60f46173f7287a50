//! Runs several policies on one random suite and prints the comparison table.
//!
//! `cargo run --release --example evaluate_table -- [n_agents] [checkpoint...]`

use std::path::Path;

use crowdnav::eval::{compare, evaluate, format_table, generate_suite, EvalOptions, EvalPolicy};
use crowdnav::net::Checkpoint;
use crowdnav::sim::{preset_domain_size, PolicyTag, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(Ok(4), |s| s.parse())?;
    let checkpoints: Vec<(String, Checkpoint)> = args
        .map(|p| {
            let path = Path::new(&p);
            let name = path.file_stem().map_or(p.clone(), |s| s.to_string_lossy().into_owned());
            Ok((name, Checkpoint::load(path)?))
        })
        .collect::<Result<_, Box<dyn std::error::Error>>>()?;

    let sim = SimConfig::default();
    let suite = generate_suite(&format!("random_{n}"), n, preset_domain_size(n), 200, 11, &sim)?;
    let opts = EvalOptions {
        threads: 4,
        ..EvalOptions::default()
    };
    let mut policies = vec![
        EvalPolicy::Baseline(PolicyTag::Scripted),
        EvalPolicy::Baseline(PolicyTag::NonCooperative),
    ];
    policies.extend(checkpoints.iter().map(|(name, c)| EvalPolicy::Learned {
        name,
        params: &c.params,
    }));
    let outcomes = policies
        .into_iter()
        .map(|p| evaluate(p, &suite, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    print!("{}", format_table(&suite.id, &compare(&outcomes)?));
    Ok(())
}
