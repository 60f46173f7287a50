//! Compares the hand-written backward pass (BPTT through the LSTM, both heads, entropy term)
//! against central finite differences of the actor-critic objective, in f64.

use crowdnav::geom::Vec2;
use crowdnav::net::{forward, NetConfig, NetParams};
use crowdnav::obs::{EgoObservation, ObservationSequence, OtherObservation};
use crowdnav::trainer::{a3c_loss_and_grads, ReturnTarget};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_observation(rng: &mut ChaCha8Rng, n_others: usize) -> ObservationSequence {
    let mut others: Vec<OtherObservation> = (0..n_others)
        .map(|_| {
            let position = Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let radius = rng.random_range(0.2..0.8);
            OtherObservation {
                position,
                velocity: Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                radius,
                distance: position.norm(),
                combined_radius: radius + 0.4,
            }
        })
        .collect();
    others.sort_by(|a, b| b.distance.total_cmp(&a.distance));
    ObservationSequence {
        ego: EgoObservation {
            dist_to_goal: rng.random_range(0.5..4.0),
            pref_speed: rng.random_range(0.5..2.0),
            heading: rng.random_range(-1.0..1.0),
            radius: 0.4,
        },
        others,
    }
}

/// The objective whose gradient the library computes, with the advantages held fixed.
fn objective(batch: &[ReturnTarget], p: &NetParams<f64>, beta: f64, adv: &[f64]) -> f64 {
    let b = batch.len() as f64;
    batch
        .iter()
        .zip(adv)
        .map(|(t, &a)| {
            let tr = forward(&t.observation, p).unwrap();
            let entropy: f64 = -tr.probs.iter().map(|q| q * q.ln()).sum::<f64>();
            ((t.ret - tr.value).powi(2) - a * tr.probs[t.action_index].ln() - beta * entropy) / b
        })
        .sum()
}

fn main() {
    let cfg = NetConfig {
        lstm_hidden: 3,
        fc_widths: [4, 4],
        ..NetConfig::default()
    };
    let beta = 0.01;
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for trial in 0..5 {
        let params: NetParams<f64> = NetParams::init(cfg, &mut rng).unwrap();
        let n_others = trial % 4;
        let batch: Vec<ReturnTarget> = (0..4)
            .map(|_| ReturnTarget {
                observation: random_observation(&mut rng, n_others),
                action_index: rng.random_range(0..cfg.action_count),
                ret: rng.random_range(-0.5..1.0),
                advantage: 0.0,
            })
            .collect();
        let mut grads = NetParams::zeros(cfg).unwrap();
        a3c_loss_and_grads(&batch, &params, beta, &mut grads).unwrap();
        let adv: Vec<f64> = batch
            .iter()
            .map(|t| t.ret - forward(&t.observation, &params).unwrap().value)
            .collect();

        let mut worst: f64 = 0.0;
        for k in 0..params.len() {
            let (mut up, mut down) = (params.clone(), params.clone());
            up.as_mut_slice()[k] += h;
            down.as_mut_slice()[k] -= h;
            let numeric = (objective(&batch, &up, beta, &adv) - objective(&batch, &down, beta, &adv)) / (2.0 * h);
            let analytic = grads.as_slice()[k];
            worst = worst.max((analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6));
        }
        println!(
            "trial {trial}: {} parameters, {n_others} other agents, max relative error {worst:.2e}",
            params.len()
        );
    }
}
