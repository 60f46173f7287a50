//! Forward pass and exact backpropagation (through time, for the LSTM) of the policy/value
//! network:
//!
//! ```text
//! others (farthest .. closest) -> LSTM -> h_n ─┐
//!                                   ego ───────┴─ concat -> FC+ReLU -> FC+ReLU ─┬─ softmax policy
//!                                                                                └─ scalar value
//! ```

use super::linalg::{affine, affine_backward};
use super::params::{Gradients, NetParams, Tensor};
use super::{NetConfig, NetError, Real};
use crate::obs::ObservationSequence;
use crate::sim::{LearnedPolicy, PolicyError, PolicyOutput};

/// Saved activations of one LSTM step.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmStep<T> {
    /// Cell input `[h_prev, x]`.
    pub input: Vec<T>,
    pub c_prev: Vec<T>,
    /// Activated gates `[i, f, o, g]`, each of width `H`.
    pub gates: Vec<T>,
    pub c: Vec<T>,
    pub tanh_c: Vec<T>,
    pub h: Vec<T>,
}

/// Everything the backward pass needs, captured by [`forward`].
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace<T> {
    config: NetConfig,
    pub lstm: Vec<LstmStep<T>>,
    /// Feed-forward input `[h_n, ego]`.
    pub encoded: Vec<T>,
    pub fc1: Vec<T>,
    pub fc2: Vec<T>,
    pub logits: Vec<T>,
    pub log_probs: Vec<T>,
    pub probs: Vec<T>,
    pub value: T,
}

impl<T: Real> ForwardTrace<T> {
    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    /// Final LSTM hidden state (zero when no other agent was observed).
    pub fn encoding(&self) -> &[T] {
        &self.encoded[..self.config.lstm_hidden]
    }

    /// Entropy of the policy distribution, in nats.
    pub fn entropy(&self) -> T {
        -self
            .probs
            .iter()
            .zip(&self.log_probs)
            .map(|(&p, &lp)| p * lp)
            .sum::<T>()
    }
}

fn to_real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("finite input")
}

fn sigmoid<T: Real>(z: T) -> T {
    T::one() / (T::one() + (-z).exp())
}

/// Converts an observation into network inputs: one vector per other agent plus the ego vector.
pub fn encode_inputs<T: Real>(obs: &ObservationSequence) -> (Vec<Vec<T>>, Vec<T>) {
    let others = obs
        .others
        .iter()
        .map(|o| o.to_array().iter().map(|&v| to_real(v)).collect())
        .collect();
    let ego = obs.ego.to_array().iter().map(|&v| to_real(v)).collect();
    (others, ego)
}

/// Runs the LSTM over `inputs` from a zero state. Returns `h_n` and the per-step trace.
pub fn lstm_encode<T: Real>(inputs: &[Vec<T>], params: &NetParams<T>) -> Result<(Vec<T>, Vec<LstmStep<T>>), NetError> {
    let cfg = params.config();
    if inputs.len() > cfg.max_sequence {
        return Err(NetError::SequenceTooLong {
            len: inputs.len(),
            max: cfg.max_sequence,
        });
    }
    let hd = cfg.lstm_hidden;
    let w = params.tensor(Tensor::LstmWeight);
    let b = params.tensor(Tensor::LstmBias);
    let mut h = vec![T::zero(); hd];
    let mut c = vec![T::zero(); hd];
    let mut steps = Vec::with_capacity(inputs.len());
    let mut z = vec![T::zero(); 4 * hd];
    for x in inputs {
        if x.len() != cfg.other_obs_dim {
            return Err(NetError::InputWidth {
                expected: cfg.other_obs_dim,
                got: x.len(),
            });
        }
        let mut input = Vec::with_capacity(cfg.lstm_input());
        input.extend_from_slice(&h);
        input.extend_from_slice(x);
        affine(w, b, &input, &mut z);
        let mut gates = vec![T::zero(); 4 * hd];
        for k in 0..3 * hd {
            gates[k] = sigmoid(z[k]);
        }
        for k in 3 * hd..4 * hd {
            gates[k] = z[k].tanh();
        }
        let c_prev = c;
        let (i, rest) = gates.split_at(hd);
        let (f, rest) = rest.split_at(hd);
        let (o, g) = rest.split_at(hd);
        c = (0..hd).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
        let tanh_c: Vec<T> = c.iter().map(|v| v.tanh()).collect();
        h = (0..hd).map(|k| o[k] * tanh_c[k]).collect();
        steps.push(LstmStep {
            input,
            c_prev,
            gates,
            c: c.clone(),
            tanh_c,
            h: h.clone(),
        });
    }
    Ok((h, steps))
}

/// Forward pass on pre-encoded inputs.
pub fn forward_inputs<T: Real>(
    others: &[Vec<T>],
    ego: &[T],
    params: &NetParams<T>,
) -> Result<ForwardTrace<T>, NetError> {
    let cfg = *params.config();
    if ego.len() != cfg.ego_dim {
        return Err(NetError::InputWidth {
            expected: cfg.ego_dim,
            got: ego.len(),
        });
    }
    let (h_n, lstm) = lstm_encode(others, params)?;
    let mut encoded = h_n;
    encoded.extend_from_slice(ego);

    let [f1, f2] = cfg.fc_widths;
    let mut fc1 = vec![T::zero(); f1];
    affine(
        params.tensor(Tensor::Fc1Weight),
        params.tensor(Tensor::Fc1Bias),
        &encoded,
        &mut fc1,
    );
    fc1.iter_mut().for_each(|v| *v = v.max(T::zero()));
    let mut fc2 = vec![T::zero(); f2];
    affine(
        params.tensor(Tensor::Fc2Weight),
        params.tensor(Tensor::Fc2Bias),
        &fc1,
        &mut fc2,
    );
    fc2.iter_mut().for_each(|v| *v = v.max(T::zero()));

    let mut logits = vec![T::zero(); cfg.action_count];
    affine(
        params.tensor(Tensor::PolicyWeight),
        params.tensor(Tensor::PolicyBias),
        &fc2,
        &mut logits,
    );
    let mut value = [T::zero()];
    affine(
        params.tensor(Tensor::ValueWeight),
        params.tensor(Tensor::ValueBias),
        &fc2,
        &mut value,
    );

    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let log_sum = logits.iter().map(|&z| (z - max).exp()).sum::<T>().ln();
    let log_probs: Vec<T> = logits.iter().map(|&z| z - max - log_sum).collect();
    let probs: Vec<T> = log_probs.iter().map(|lp| lp.exp()).collect();

    if !value[0].is_finite() || !max.is_finite() || probs.iter().any(|p| !p.is_finite()) {
        return Err(NetError::NonFinite("forward pass"));
    }
    Ok(ForwardTrace {
        config: cfg,
        lstm,
        encoded,
        fc1,
        fc2,
        logits,
        log_probs,
        probs,
        value: value[0],
    })
}

pub fn forward<T: Real>(obs: &ObservationSequence, params: &NetParams<T>) -> Result<ForwardTrace<T>, NetError> {
    let (others, ego) = encode_inputs(obs);
    forward_inputs(&others, &ego, params)
}

/// Gradient of `logit_seed . logits + value_seed * value` with respect to every parameter.
pub fn backward<T: Real>(
    trace: &ForwardTrace<T>,
    logit_seed: &[T],
    value_seed: T,
    params: &NetParams<T>,
) -> Result<Gradients<T>, NetError> {
    let mut grads = NetParams::zeros(*params.config())?;
    backward_accumulate(trace, logit_seed, value_seed, params, &mut grads)?;
    Ok(grads)
}

/// Like [`backward`] but adds into an existing gradient buffer.
pub fn backward_accumulate<T: Real>(
    trace: &ForwardTrace<T>,
    logit_seed: &[T],
    value_seed: T,
    params: &NetParams<T>,
    grads: &mut Gradients<T>,
) -> Result<(), NetError> {
    let cfg = *params.config();
    if trace.config != cfg || *grads.config() != cfg {
        return Err(NetError::TraceMismatch);
    }
    if logit_seed.len() != cfg.action_count {
        return Err(NetError::InputWidth {
            expected: cfg.action_count,
            got: logit_seed.len(),
        });
    }
    let zero = T::zero();
    let [f1, f2] = cfg.fc_widths;

    // heads
    let mut d_fc2 = vec![zero; f2];
    {
        let (dw, db) = split_pair(grads, Tensor::PolicyWeight, Tensor::PolicyBias);
        affine_backward(
            params.tensor(Tensor::PolicyWeight),
            &trace.fc2,
            logit_seed,
            dw,
            db,
            Some(&mut d_fc2),
        );
    }
    {
        let (dw, db) = split_pair(grads, Tensor::ValueWeight, Tensor::ValueBias);
        affine_backward(
            params.tensor(Tensor::ValueWeight),
            &trace.fc2,
            &[value_seed],
            dw,
            db,
            Some(&mut d_fc2),
        );
    }

    // FC2 and FC1 with ReLU
    for (d, &a) in d_fc2.iter_mut().zip(&trace.fc2) {
        if a <= zero {
            *d = zero;
        }
    }
    let mut d_fc1 = vec![zero; f1];
    {
        let (dw, db) = split_pair(grads, Tensor::Fc2Weight, Tensor::Fc2Bias);
        affine_backward(
            params.tensor(Tensor::Fc2Weight),
            &trace.fc1,
            &d_fc2,
            dw,
            db,
            Some(&mut d_fc1),
        );
    }
    for (d, &a) in d_fc1.iter_mut().zip(&trace.fc1) {
        if a <= zero {
            *d = zero;
        }
    }
    let hd = cfg.lstm_hidden;
    let mut d_encoded = vec![zero; cfg.encoded_dim()];
    {
        let (dw, db) = split_pair(grads, Tensor::Fc1Weight, Tensor::Fc1Bias);
        let d_enc = if trace.lstm.is_empty() {
            None
        } else {
            Some(&mut d_encoded[..])
        };
        affine_backward(params.tensor(Tensor::Fc1Weight), &trace.encoded, &d_fc1, dw, db, d_enc);
    }
    if trace.lstm.is_empty() {
        return Ok(());
    }

    // LSTM, backwards through the agent sequence
    let w = params.tensor(Tensor::LstmWeight);
    let mut dh: Vec<T> = d_encoded[..hd].to_vec();
    let mut dc = vec![zero; hd];
    let mut dz = vec![zero; 4 * hd];
    let mut d_input = vec![zero; cfg.lstm_input()];
    let one = T::one();
    for step in trace.lstm.iter().rev() {
        let (i, rest) = step.gates.split_at(hd);
        let (f, rest) = rest.split_at(hd);
        let (o, g) = rest.split_at(hd);
        for k in 0..hd {
            let tc = step.tanh_c[k];
            let d_o = dh[k] * tc;
            let dck = dc[k] + dh[k] * o[k] * (one - tc * tc);
            let d_i = dck * g[k];
            let d_f = dck * step.c_prev[k];
            let d_g = dck * i[k];
            dc[k] = dck * f[k];
            dz[k] = d_i * i[k] * (one - i[k]);
            dz[hd + k] = d_f * f[k] * (one - f[k]);
            dz[2 * hd + k] = d_o * o[k] * (one - o[k]);
            dz[3 * hd + k] = d_g * (one - g[k] * g[k]);
        }
        d_input.iter_mut().for_each(|v| *v = zero);
        let (dw, db) = split_pair(grads, Tensor::LstmWeight, Tensor::LstmBias);
        affine_backward(w, &step.input, &dz, dw, db, Some(&mut d_input));
        dh.copy_from_slice(&d_input[..hd]);
    }
    Ok(())
}

impl LearnedPolicy for NetParams<f32> {
    fn evaluate(&self, observations: &[ObservationSequence]) -> Result<Vec<PolicyOutput>, PolicyError> {
        observations
            .iter()
            .map(|obs| {
                let t = forward(obs, self)?;
                Ok(PolicyOutput {
                    probs: t.probs,
                    value: t.value,
                })
            })
            .collect()
    }
}

/// Mutable views of a weight tensor and the bias stored right after it.
fn split_pair<T: Real>(grads: &mut Gradients<T>, weight: Tensor, bias: Tensor) -> (&mut [T], &mut [T]) {
    let wr = grads.layout().range(weight);
    let br = grads.layout().range(bias);
    debug_assert_eq!(wr.end, br.start);
    let (w, b) = grads.as_mut_slice()[wr.start..br.end].split_at_mut(wr.len());
    (w, b)
}
