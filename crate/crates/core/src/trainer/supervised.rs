//! Behaviour cloning of the scripted expert, used to initialise the network before RL.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::PretrainConfig;
use super::loss::{supervised_loss_and_grads, SupervisedExample, SupervisedStats};
use super::TrainError;
use crate::net::{adam_update, AdamConfig, AdamState, NetParams};
use crate::obs::{build_observation, ObsConfig};
use crate::sim::{generate_random_scenario, run_episode, ExpertConfig, PolicyTable, PolicyTag, SimConfig, Status};

/// Rolls out scripted-expert episodes with one or two agents and records every decision of
/// agents that reach their goal. The value target is `gamma^(t_remaining * v_pref)`.
pub fn generate_supervised_dataset<R: Rng + ?Sized>(
    n_examples: usize,
    cfg: &PretrainConfig,
    sim: &SimConfig,
    obs: &ObsConfig,
    expert: &ExpertConfig,
    rng: &mut R,
) -> Result<Vec<SupervisedExample>, TrainError> {
    let table = PolicyTable {
        expert: *expert,
        obs: *obs,
        ..PolicyTable::baselines()
    };
    let mut out = Vec::with_capacity(n_examples);
    let mut episode = 0u64;
    while out.len() < n_examples {
        let n = if rng.random_bool(cfg.two_agent_fraction) { 2 } else { 1 };
        let scenario = generate_random_scenario(n, cfg.domain_size, rng, sim)?.with_policy(PolicyTag::Scripted);
        let log = run_episode(&scenario, &table, sim, episode)?;
        episode += 1;
        for (i, outcome) in log.outcomes.iter().enumerate() {
            let Some(arrival) = outcome.arrival_time.filter(|_| outcome.status == Status::AtGoal) else {
                continue;
            };
            for snap in &log.steps {
                let Some(Some(decision)) = snap.decisions.get(i) else {
                    continue;
                };
                let Some(target_action) = decision.action_index else {
                    continue;
                };
                let remaining = (arrival - snap.t).max(0.0);
                out.push(SupervisedExample {
                    observation: build_observation(&snap.agents, i, obs),
                    target_action,
                    target_value: cfg.gamma.powf(remaining * outcome.pref_speed),
                });
            }
        }
    }
    out.truncate(n_examples);
    Ok(out)
}

/// Mean losses over one pass through the dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub value_loss: f64,
    pub policy_loss: f64,
}

/// Minibatch Adam on the supervised loss. Returns the per-epoch loss curve.
pub fn supervised_init(
    dataset: &[SupervisedExample],
    params: &mut NetParams<f32>,
    cfg: &PretrainConfig,
    mut on_epoch: impl FnMut(&EpochLoss),
) -> Result<Vec<EpochLoss>, TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut adam = AdamState::new(params.len());
    let adam_cfg = AdamConfig::default();
    let mut grads = NetParams::zeros(*params.config())?;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size);
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut totals = SupervisedStats::default();
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| dataset[i].clone()));
            let stats = supervised_loss_and_grads(&batch, params, cfg.value_weight, &mut grads)
                .map_err(|e| TrainError::Diverged(format!("epoch {epoch}: {e}")))?;
            let w = chunk.len() as f64 / dataset.len() as f64;
            totals.value_loss += stats.value_loss * w;
            totals.policy_loss += stats.policy_loss * w;
            adam_update(params, &grads, &mut adam, cfg.learning_rate, &adam_cfg)?;
        }
        let loss = EpochLoss {
            epoch,
            value_loss: totals.value_loss,
            policy_loss: totals.policy_loss,
        };
        log::info!(
            "pretrain epoch {epoch}: value loss {:.5}, policy loss {:.5}",
            loss.value_loss,
            loss.policy_loss
        );
        on_epoch(&loss);
        curve.push(loss);
    }
    Ok(curve)
}
