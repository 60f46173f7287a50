use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{Config, SuiteKind};
use super::{CliError, Command, CommonArgs};
use crate::eval::{
    compare, evaluate, format_table, generate_head_on_suite, generate_suite, write_report_csv, CaseResult, EvalOptions,
    EvalOutcomes, EvalPolicy, TestSuite,
};
use crate::net::{Checkpoint, NetParams};
use crate::sim::{
    generate_structured_scenario, preset_domain_size, run_episode, EpisodeLog, PolicyTable, PolicyTag, ScenarioFile,
    StructuredKind,
};
use crate::trainer::{
    generate_supervised_dataset, run_training, supervised_init, RunOptions, SelectionMode, TrainError, TrainingSetup,
};

// Independent RNG streams derived from the master seed.
const STREAM_NET_INIT: u64 = 0;
const STREAM_DATASET: u64 = 2;
const STREAM_CHECK_SUITE: u64 = 3;

pub(super) fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Pretrain { common } => pretrain(&common),
        Command::Train {
            common,
            init,
            max_episodes,
        } => train(&common, init.as_deref(), max_episodes),
        Command::Eval {
            common,
            suite,
            policies,
        } => eval(&common, suite.as_deref(), &policies),
        Command::Rollout {
            common,
            policy,
            scenario,
            case,
        } => rollout(&common, &policy, scenario.as_deref(), case),
        Command::GenSuite { common } => gen_suite(&common),
        Command::GenDataset { common } => gen_dataset(&common),
    }
}

/// Loads the configuration, creates the output directory and records the effective config in it.
fn prepare(common: &CommonArgs) -> Result<Config, CliError> {
    let config = Config::load(common.config.as_deref(), &common.overrides, common.seed)?;
    fs::create_dir_all(&common.out).map_err(|e| CliError::Runtime(format!("{}: {e}", common.out.display())))?;
    let path = common.out.join("config.toml");
    fs::write(&path, config.to_toml()).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    Ok(config)
}

fn selection_mode(common: &CommonArgs) -> SelectionMode {
    if common.sample {
        SelectionMode::Sample
    } else {
        SelectionMode::Greedy
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn eval_options(config: &Config, mode: SelectionMode) -> EvalOptions {
    EvalOptions {
        sim: config.sim.clone(),
        obs: config.obs,
        expert: config.expert,
        mode,
        threads: config.eval.threads.max(1),
    }
}

fn pretrain(common: &CommonArgs) -> Result<(), CliError> {
    let config = prepare(common)?;
    let pre = config.pretraining();
    let dataset = generate_supervised_dataset(
        pre.examples,
        &pre,
        &config.sim,
        &config.obs,
        &config.expert,
        &mut stream_rng(config.seed, STREAM_DATASET),
    )
    .map_err(CliError::runtime)?;
    log::info!("generated {} supervised examples", dataset.len());

    let mut params =
        NetParams::init(config.net, &mut stream_rng(config.seed, STREAM_NET_INIT)).map_err(CliError::runtime)?;
    let curve = supervised_init(&dataset, &mut params, &pre, |e| {
        println!(
            "epoch {:>3}  value loss {:.5}  policy loss {:.5}",
            e.epoch, e.value_loss, e.policy_loss
        );
    })
    .map_err(|e| match e {
        TrainError::Diverged(message) => CliError::Divergence {
            message,
            last_checkpoint: None,
        },
        other => CliError::runtime(other),
    })?;

    let loss_path = common.out.join("pretrain_loss.csv");
    let mut w = csv::Writer::from_path(&loss_path).map_err(CliError::runtime)?;
    w.write_record(["epoch", "value_loss", "policy_loss"])
        .map_err(CliError::runtime)?;
    for e in &curve {
        w.write_record([e.epoch.to_string(), e.value_loss.to_string(), e.policy_loss.to_string()])
            .map_err(CliError::runtime)?;
    }
    w.flush().map_err(CliError::runtime)?;

    let ckpt_path = common.out.join("pretrain.ckpt");
    Checkpoint::new(params.clone())
        .save(&ckpt_path)
        .map_err(CliError::runtime)?;
    println!("wrote {}", ckpt_path.display());

    if config.eval.pretrain_check_cases > 0 {
        let suite = generate_suite(
            "pretrain_check",
            1,
            pre.domain_size,
            config.eval.pretrain_check_cases,
            config.seed ^ STREAM_CHECK_SUITE,
            &config.sim,
        )
        .map_err(CliError::runtime)?;
        let outcomes = evaluate(
            EvalPolicy::Learned {
                name: "pretrained",
                params: &params,
            },
            &suite,
            &eval_options(&config, SelectionMode::Greedy),
        )
        .map_err(CliError::runtime)?;
        println!(
            "single-agent check: {:.1}% of {} cases reached the goal",
            100.0 * outcomes.success_rate(),
            suite.len()
        );
    }
    Ok(())
}

fn gen_dataset(common: &CommonArgs) -> Result<(), CliError> {
    let config = prepare(common)?;
    let pre = config.pretraining();
    let dataset = generate_supervised_dataset(
        pre.examples,
        &pre,
        &config.sim,
        &config.obs,
        &config.expert,
        &mut stream_rng(config.seed, STREAM_DATASET),
    )
    .map_err(CliError::runtime)?;
    let path = common.out.join("dataset.jsonl");
    let file = fs::File::create(&path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    for example in &dataset {
        serde_json::to_writer(&mut w, example).map_err(CliError::runtime)?;
        w.write_all(b"\n").map_err(CliError::runtime)?;
    }
    w.flush().map_err(CliError::runtime)?;
    println!("wrote {} examples to {}", dataset.len(), path.display());
    Ok(())
}

fn train(common: &CommonArgs, init: Option<&Path>, max_episodes: Option<u64>) -> Result<(), CliError> {
    let config = prepare(common)?;
    let checkpoint = match init {
        Some(path) => {
            let ckpt = Checkpoint::load(path).map_err(|e| CliError::Usage(e.to_string()))?;
            if *ckpt.config() != config.net {
                log::warn!("network shape taken from {} rather than [net]", path.display());
            }
            ckpt
        }
        None => Checkpoint::new(
            NetParams::init(config.net, &mut stream_rng(config.seed, STREAM_NET_INIT)).map_err(CliError::runtime)?,
        ),
    };
    let setup = TrainingSetup {
        sim: config.sim.clone(),
        obs: config.obs,
        train: config.training(),
    };
    let stop = Arc::new(AtomicBool::new(false));
    let flag = stop.clone();
    if let Err(e) = ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst)) {
        log::warn!("interrupt handler not installed: {e}");
    }
    let opts = RunOptions {
        out_dir: Some(common.out.clone()),
        stop: Some(stop),
        max_episodes,
    };
    let outcome = run_training(&setup, checkpoint, &opts).map_err(|e| match e {
        TrainError::Halted {
            reason,
            last_checkpoint,
        } => CliError::Divergence {
            message: reason,
            last_checkpoint,
        },
        e if e.is_divergence() => CliError::Divergence {
            message: e.to_string(),
            last_checkpoint: None,
        },
        e => CliError::runtime(e),
    })?;
    let tail = &outcome.log[outcome.log.len().saturating_sub(1000)..];
    let recent = tail.iter().map(|r| r.mean_reward).sum::<f64>() / tail.len().max(1) as f64;
    println!(
        "{} episodes ({} updates, {} skipped, {} stale){}; mean reward of the last {}: {:.3}",
        outcome.checkpoint.episodes,
        outcome.updates,
        outcome.skipped_updates,
        outcome.stale_dropped,
        if outcome.interrupted { ", interrupted" } else { "" },
        tail.len(),
        recent
    );
    if let Some(start) = outcome.phase2_start {
        println!("phase 2 started at episode {start}");
    }
    Ok(())
}

/// `[suite]` turned into a concrete suite.
fn build_suite(config: &Config) -> Result<TestSuite, CliError> {
    let s = &config.suite;
    let domain = if s.domain_size > 0.0 {
        s.domain_size
    } else {
        preset_domain_size(s.n_agents)
    };
    let kind_name = match s.kind {
        SuiteKind::Random => "random",
        SuiteKind::HeadOn => "head_on",
        SuiteKind::Circle => "circle",
        SuiteKind::PairSwaps => "pair_swaps",
    };
    let id = if s.id.is_empty() {
        match s.kind {
            SuiteKind::Random => format!("{kind_name}_{}agents_{domain}m_seed{}", s.n_agents, config.seed),
            SuiteKind::HeadOn => format!("{kind_name}_seed{}", config.seed),
            _ => format!("{kind_name}_{}agents", s.n_agents),
        }
    } else {
        s.id.clone()
    };
    let mut suite = match s.kind {
        SuiteKind::Random => generate_suite(&id, s.n_agents, domain, s.cases, config.seed, &config.sim)
            .map_err(|e| CliError::Usage(e.to_string()))?,
        SuiteKind::HeadOn => generate_head_on_suite(s.cases, config.seed, &config.sim),
        SuiteKind::Circle | SuiteKind::PairSwaps => {
            let kind = if s.kind == SuiteKind::Circle {
                StructuredKind::Circle
            } else {
                StructuredKind::PairSwaps
            };
            let scenario = generate_structured_scenario(kind, s.n_agents, &config.sim)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            TestSuite {
                id: id.clone(),
                seed: config.seed,
                scenarios: vec![scenario],
            }
        }
    };
    suite.id = id;
    Ok(suite)
}

fn gen_suite(common: &CommonArgs) -> Result<(), CliError> {
    let config = prepare(common)?;
    let suite = build_suite(&config)?;
    let path = common.out.join("suite.json");
    suite.save(&path).map_err(CliError::runtime)?;
    println!(
        "wrote {} cases of suite {} to {}",
        suite.len(),
        suite.id,
        path.display()
    );
    Ok(())
}

/// A policy named on the command line.
enum PolicyArg {
    Baseline(PolicyTag),
    Learned { name: String, params: Box<NetParams<f32>> },
}

impl PolicyArg {
    fn parse(spec: &str) -> Result<Self, CliError> {
        let tag = match spec {
            "non_cooperative" => Some(PolicyTag::NonCooperative),
            "zero_velocity" => Some(PolicyTag::ZeroVelocity),
            "scripted" => Some(PolicyTag::Scripted),
            _ => None,
        };
        if let Some(tag) = tag {
            return Ok(PolicyArg::Baseline(tag));
        }
        let path = PathBuf::from(spec);
        if !path.is_file() {
            return Err(CliError::Usage(format!(
                "policy `{spec}` is neither a checkpoint file nor one of non_cooperative, zero_velocity, scripted"
            )));
        }
        let ckpt = Checkpoint::load(&path).map_err(|e| CliError::Usage(e.to_string()))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "learned".into());
        Ok(PolicyArg::Learned {
            name,
            params: Box::new(ckpt.params),
        })
    }

    fn as_eval(&self) -> EvalPolicy<'_> {
        match self {
            PolicyArg::Baseline(tag) => EvalPolicy::Baseline(*tag),
            PolicyArg::Learned { name, params } => EvalPolicy::Learned { name, params },
        }
    }
}

fn eval(common: &CommonArgs, suite_path: Option<&Path>, specs: &[String]) -> Result<(), CliError> {
    let config = prepare(common)?;
    let policies = specs
        .iter()
        .map(|s| PolicyArg::parse(s))
        .collect::<Result<Vec<_>, _>>()?;
    let suite = match suite_path {
        Some(path) => TestSuite::load(path).map_err(|e| CliError::Usage(e.to_string()))?,
        None => build_suite(&config)?,
    };
    let opts = eval_options(&config, selection_mode(common));
    let mut all: Vec<EvalOutcomes> = Vec::with_capacity(policies.len());
    for policy in &policies {
        let mut outcomes = evaluate(policy.as_eval(), &suite, &opts).map_err(|e| match e {
            crate::eval::EvalError::Incompatible(m) => CliError::Usage(m),
            e => CliError::runtime(e),
        })?;
        // keep names unique so outcome files and report rows do not collide
        let base = outcomes.policy.clone();
        let mut k = 2;
        while all.iter().any(|o| o.policy == outcomes.policy) {
            outcomes.policy = format!("{base}_{k}");
            k += 1;
        }
        let path = common.out.join(format!("outcomes_{}.json", outcomes.policy));
        outcomes.save(&path).map_err(CliError::runtime)?;
        let ok = outcomes
            .cases
            .iter()
            .filter(|c| c.result == CaseResult::Success)
            .count();
        log::info!("{}: {ok}/{} successful cases", outcomes.policy, outcomes.cases.len());
        all.push(outcomes);
    }
    let metrics = compare(&all).map_err(CliError::runtime)?;
    write_report_csv(&common.out.join("report.csv"), &suite.id, &metrics).map_err(CliError::runtime)?;
    let table = format_table(&suite.id, &metrics);
    let txt = common.out.join("report.txt");
    fs::write(&txt, &table).map_err(|e| CliError::Runtime(format!("{}: {e}", txt.display())))?;
    print!("{table}");
    Ok(())
}

fn rollout(common: &CommonArgs, spec: &str, scenario_path: Option<&Path>, case: usize) -> Result<(), CliError> {
    let config = prepare(common)?;
    let policy = PolicyArg::parse(spec)?;
    let scenarios = match scenario_path {
        Some(path) => {
            ScenarioFile::load(path)
                .map_err(|e| CliError::Usage(e.to_string()))?
                .scenarios
        }
        None => build_suite(&config)?.scenarios,
    };
    let n = scenarios.len();
    let scenario = scenarios
        .into_iter()
        .nth(case)
        .ok_or_else(|| CliError::Usage(format!("case {case} out of range (file has {n})")))?;
    let (tag, mut table) = match &policy {
        PolicyArg::Baseline(tag) => (*tag, PolicyTable::baselines()),
        PolicyArg::Learned { params, .. } => (
            PolicyTag::Learned,
            PolicyTable::with_learned(params.as_ref(), selection_mode(common)),
        ),
    };
    table.obs = config.obs;
    table.expert = config.expert;
    table.record_distributions = config.rollout.record_distributions;
    let scenario = scenario.with_policy(tag);
    let log: EpisodeLog = run_episode(&scenario, &table, &config.sim, case as u64).map_err(CliError::runtime)?;
    log.save_json(&common.out.join("episode.json"))
        .map_err(CliError::runtime)?;
    log.save_csv(&common.out.join("episode.csv"))
        .map_err(CliError::runtime)?;
    for o in &log.outcomes {
        println!(
            "agent {:>2}: {:<9} t = {}  reward {:.3}",
            o.agent_id,
            EpisodeLog::status_name(o.status),
            o.arrival_time.map_or("-".to_string(), |t| format!("{t:.1}")),
            o.total_reward
        );
    }
    Ok(())
}
