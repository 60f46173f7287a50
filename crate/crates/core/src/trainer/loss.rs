//! Actor-critic and supervised losses with their exact parameter gradients.

use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::net::{backward_accumulate, forward, Gradients, NetParams, Real};
use crate::obs::ObservationSequence;

use super::experience::ReturnTarget;

/// Batch means of the loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossStats {
    /// Mean of `(R - V)^2`.
    pub value_loss: f64,
    /// Mean of `-A * log pi(a)`.
    pub policy_loss: f64,
    /// Mean policy entropy (nats).
    pub entropy: f64,
}

fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("finite")
}

/// Gradient of the minimised objective
///
/// `L = mean[(R - V)^2 - A * log pi(a) - beta * H(pi)]`, with `A = R - V` held constant,
///
/// written into `grads` (overwriting it). Descending `L` fits the value head and ascends the
/// entropy-regularised policy objective.
pub fn a3c_loss_and_grads<T: Real>(
    batch: &[ReturnTarget],
    params: &NetParams<T>,
    entropy_coef: f64,
    grads: &mut Gradients<T>,
) -> Result<LossStats, TrainError> {
    if batch.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    grads.fill_zero();
    let n_actions = params.config().action_count;
    let scale = 1.0 / batch.len() as f64;
    let beta: T = real(entropy_coef);
    let mut stats = LossStats::default();
    let mut seed = vec![T::zero(); n_actions];
    for target in batch {
        if target.action_index >= n_actions {
            return Err(TrainError::InvalidAction(target.action_index));
        }
        let trace = forward(&target.observation, params)?;
        let ret: T = real(target.ret);
        let advantage = ret - trace.value;
        let entropy = trace.entropy();
        let k: T = real(scale);
        for (j, s) in seed.iter_mut().enumerate().take(n_actions) {
            let p = trace.probs[j];
            let indicator = if j == target.action_index { T::one() } else { T::zero() };
            *s = (-advantage * (indicator - p) + beta * p * (trace.log_probs[j] + entropy)) * k;
        }
        let value_seed = -(advantage + advantage) * k;
        backward_accumulate(&trace, &seed, value_seed, params, grads)?;

        let a = advantage.to_f64().unwrap_or(f64::NAN);
        stats.value_loss += a * a * scale;
        stats.policy_loss -= a * trace.log_probs[target.action_index].to_f64().unwrap_or(f64::NAN) * scale;
        stats.entropy += entropy.to_f64().unwrap_or(f64::NAN) * scale;
    }
    if !(stats.value_loss.is_finite() && stats.policy_loss.is_finite() && stats.entropy.is_finite()) {
        return Err(TrainError::Diverged("non-finite actor-critic loss".into()));
    }
    Ok(stats)
}

/// Behaviour-cloning example: the expert's action and a value target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisedExample {
    pub observation: ObservationSequence,
    pub target_action: usize,
    pub target_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SupervisedStats {
    /// Mean squared value error.
    pub value_loss: f64,
    /// Mean cross-entropy of the expert action.
    pub policy_loss: f64,
}

/// Gradient of `mean[value_weight * (y - V)^2 - log pi(target)]` into `grads` (overwritten).
pub fn supervised_loss_and_grads<T: Real>(
    batch: &[SupervisedExample],
    params: &NetParams<T>,
    value_weight: f64,
    grads: &mut Gradients<T>,
) -> Result<SupervisedStats, TrainError> {
    if batch.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    grads.fill_zero();
    let n_actions = params.config().action_count;
    let scale = 1.0 / batch.len() as f64;
    let k: T = real(scale);
    let w: T = real(value_weight);
    let mut stats = SupervisedStats::default();
    let mut seed = vec![T::zero(); n_actions];
    for ex in batch {
        if ex.target_action >= n_actions {
            return Err(TrainError::InvalidAction(ex.target_action));
        }
        let trace = forward(&ex.observation, params)?;
        for (j, s) in seed.iter_mut().enumerate().take(n_actions) {
            let indicator = if j == ex.target_action { T::one() } else { T::zero() };
            *s = (trace.probs[j] - indicator) * k;
        }
        let err = real::<T>(ex.target_value) - trace.value;
        backward_accumulate(&trace, &seed, -(err + err) * w * k, params, grads)?;
        let e = err.to_f64().unwrap_or(f64::NAN);
        stats.value_loss += e * e * scale;
        stats.policy_loss -= trace.log_probs[ex.target_action].to_f64().unwrap_or(f64::NAN) * scale;
    }
    if !(stats.value_loss.is_finite() && stats.policy_loss.is_finite()) {
        return Err(TrainError::Diverged("non-finite supervised loss".into()));
    }
    Ok(stats)
}

/// Rescales `grads` so its global L2 norm is at most `max_norm` (no-op when `max_norm <= 0`).
/// Returns the norm before clipping.
pub fn clip_global_norm<T: Real>(grads: &mut Gradients<T>, max_norm: f64) -> f64 {
    let norm = grads.l2_norm().to_f64().unwrap_or(f64::NAN);
    if max_norm > 0.0 && norm > max_norm {
        grads.scale(real(max_norm / norm));
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;
    use crate::net::{adam_update, AdamConfig, AdamState, NetConfig};
    use crate::obs::{EgoObservation, OtherObservation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> NetConfig {
        NetConfig {
            lstm_hidden: 3,
            fc_widths: [4, 4],
            ..NetConfig::default()
        }
    }

    fn obs(rng: &mut ChaCha8Rng, n: usize) -> ObservationSequence {
        let mut others: Vec<OtherObservation> = (0..n)
            .map(|_| {
                let p = Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
                OtherObservation {
                    position: p,
                    velocity: Vec2::new(rng.random_range(-1.0..1.0), 0.2),
                    radius: 0.4,
                    distance: p.norm(),
                    combined_radius: 0.8,
                }
            })
            .collect();
        others.sort_by(|a, b| b.distance.total_cmp(&a.distance));
        ObservationSequence {
            ego: EgoObservation {
                dist_to_goal: rng.random_range(0.5..4.0),
                pref_speed: 1.2,
                heading: rng.random_range(-0.5..0.5),
                radius: 0.4,
            },
            others,
        }
    }

    fn objective(batch: &[ReturnTarget], p: &NetParams<f64>, beta: f64, frozen_adv: &[f64]) -> f64 {
        let b = batch.len() as f64;
        batch
            .iter()
            .zip(frozen_adv)
            .map(|(t, &a)| {
                let tr = forward(&t.observation, p).unwrap();
                let h: f64 = -tr.probs.iter().map(|q| q * q.ln()).sum::<f64>();
                ((t.ret - tr.value).powi(2) - a * tr.probs[t.action_index].ln() - beta * h) / b
            })
            .sum()
    }

    #[test]
    fn matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut p: NetParams<f64> = NetParams::init(tiny(), &mut rng).unwrap();
        for x in p.as_mut_slice() {
            *x += rng.random_range(-0.3..0.3);
        }
        let batch: Vec<ReturnTarget> = (0..3)
            .map(|k| ReturnTarget {
                observation: obs(&mut rng, k),
                action_index: rng.random_range(0..12),
                ret: rng.random_range(-1.0..1.0),
                advantage: 0.0,
            })
            .collect();
        let beta = 0.05;
        let mut g = NetParams::zeros(tiny()).unwrap();
        a3c_loss_and_grads(&batch, &p, beta, &mut g).unwrap();
        let adv: Vec<f64> = batch
            .iter()
            .map(|t| t.ret - forward(&t.observation, &p).unwrap().value)
            .collect();
        let h = 1e-5;
        for k in 0..p.len() {
            let mut a = p.clone();
            a.as_mut_slice()[k] += h;
            let mut b = p.clone();
            b.as_mut_slice()[k] -= h;
            let numeric = (objective(&batch, &a, beta, &adv) - objective(&batch, &b, beta, &adv)) / (2.0 * h);
            let analytic = g.as_slice()[k];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            assert!(rel < 1e-4, "param {k}: {analytic} vs {numeric}");
        }
    }

    #[test]
    fn stationary_at_uniform_policy_and_exact_value() {
        let p = NetParams::<f64>::zeros(tiny()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let batch = vec![ReturnTarget {
            observation: obs(&mut rng, 2),
            action_index: 4,
            ret: 0.0,
            advantage: 0.0,
        }];
        let mut g = NetParams::zeros(tiny()).unwrap();
        a3c_loss_and_grads(&batch, &p, 1e-4, &mut g).unwrap();
        assert!(g.as_slice().iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn entropy_coefficient_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p: NetParams<f64> = NetParams::init(tiny(), &mut rng).unwrap();
        let batch = vec![ReturnTarget {
            observation: obs(&mut rng, 1),
            action_index: 2,
            ret: 0.6,
            advantage: 0.0,
        }];
        let grad = |beta| {
            let mut g = NetParams::zeros(tiny()).unwrap();
            a3c_loss_and_grads(&batch, &p, beta, &mut g).unwrap();
            g
        };
        let (g0, g1, g2) = (grad(0.0), grad(1e-4), grad(2e-4));
        for k in 0..g0.len() {
            let d1 = g1.as_slice()[k] - g0.as_slice()[k];
            let d2 = g2.as_slice()[k] - g0.as_slice()[k];
            assert!((d2 - 2.0 * d1).abs() < 1e-12);
        }
    }

    fn single_update(beta: f64, ret: f64) -> (ForwardProbe, ForwardProbe) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p: NetParams<f32> = NetParams::init(tiny(), &mut rng).unwrap();
        let o = obs(&mut rng, 2);
        let before = ForwardProbe::of(&o, &p);
        let target = ReturnTarget {
            observation: o.clone(),
            action_index: 7,
            ret: if ret.is_nan() { before.value } else { ret },
            advantage: 0.0,
        };
        let mut g = NetParams::zeros(tiny()).unwrap();
        a3c_loss_and_grads(&[target], &p, beta, &mut g).unwrap();
        let mut s = AdamState::new(p.len());
        adam_update(&mut p, &g, &mut s, 1e-4, &AdamConfig::default()).unwrap();
        (before, ForwardProbe::of(&o, &p))
    }

    struct ForwardProbe {
        log_p7: f64,
        entropy: f64,
        value: f64,
    }

    impl ForwardProbe {
        fn of(o: &ObservationSequence, p: &NetParams<f32>) -> Self {
            let t = forward(o, p).unwrap();
            Self {
                log_p7: t.log_probs[7] as f64,
                entropy: t.entropy() as f64,
                value: t.value as f64,
            }
        }
    }

    #[test]
    fn positive_advantage_raises_chosen_log_prob() {
        let (before, after) = single_update(0.0, 5.0);
        assert!(after.log_p7 > before.log_p7);
    }

    #[test]
    fn entropy_bonus_raises_entropy() {
        // return equal to the current value: zero advantage, only the entropy term acts
        let (before, after) = single_update(1.0, f64::NAN);
        assert!(after.entropy > before.entropy);
    }

    #[test]
    fn supervised_memorises_one_example() {
        let cfg = NetConfig {
            lstm_hidden: 4,
            fc_widths: [16, 16],
            ..NetConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut p: NetParams<f32> = NetParams::init(cfg, &mut rng).unwrap();
        let ex = vec![SupervisedExample {
            observation: obs(&mut rng, 1),
            target_action: 3,
            target_value: 0.8,
        }];
        let mut g = NetParams::zeros(cfg).unwrap();
        let mut s = AdamState::new(p.len());
        let mut losses = Vec::new();
        for _ in 0..500 {
            let st = supervised_loss_and_grads(&ex, &p, 1.0, &mut g).unwrap();
            losses.push(st.value_loss + st.policy_loss);
            adam_update(&mut p, &g, &mut s, 3e-3, &AdamConfig::default()).unwrap();
        }
        assert!(*losses.last().unwrap() < 0.01, "{:?}", losses.last());
        let sampled: Vec<f64> = losses.iter().step_by(50).copied().collect();
        assert!(sampled.windows(2).all(|w| w[1] < w[0]), "{sampled:?}");
    }

    #[test]
    fn clipping_bounds_norm() {
        let mut g = NetParams::<f64>::zeros(tiny()).unwrap();
        g.as_mut_slice().iter_mut().for_each(|x| *x = 1.0);
        let before = clip_global_norm(&mut g, 2.0);
        assert!((before - (249f64).sqrt()).abs() < 1e-9);
        assert!((g.l2_norm() - 2.0).abs() < 1e-12);
        clip_global_norm(&mut g, 0.0);
        assert!((g.l2_norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_batch_rejected() {
        let p = NetParams::<f64>::zeros(tiny()).unwrap();
        let mut g = p.clone();
        assert!(matches!(
            a3c_loss_and_grads(&[], &p, 0.0, &mut g),
            Err(TrainError::EmptyBatch)
        ));
    }
}
