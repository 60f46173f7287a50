use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TrainError;

/// How an action index is drawn from a policy distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// Draw from the categorical distribution (training).
    Sample,
    /// Most probable action, lowest index on ties (execution).
    Greedy,
}

/// Tolerance on the total probability mass, sized for f32 softmax outputs.
const NORMALIZATION_TOL: f64 = 1e-4;

pub fn select_action<R: Rng + ?Sized>(probs: &[f32], mode: SelectionMode, rng: &mut R) -> Result<usize, TrainError> {
    let total: f64 = probs.iter().map(|&p| p as f64).sum();
    if probs.is_empty() || probs.iter().any(|p| !p.is_finite() || *p < 0.0) || (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(TrainError::InvalidDistribution { total });
    }
    match mode {
        SelectionMode::Greedy => {
            let mut best = 0;
            for (i, &p) in probs.iter().enumerate() {
                if p > probs[best] {
                    best = i;
                }
            }
            Ok(best)
        }
        SelectionMode::Sample => {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut last_nonzero = 0;
            for (i, &p) in probs.iter().enumerate() {
                if p > 0.0 {
                    last_nonzero = i;
                    acc += p as f64;
                    if u < acc {
                        return Ok(i);
                    }
                }
            }
            Ok(last_nonzero)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_hot_in_both_modes() {
        let mut probs = vec![0.0f32; 12];
        probs[3] = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            assert_eq!(select_action(&probs, SelectionMode::Sample, &mut rng).unwrap(), 3);
        }
        assert_eq!(select_action(&probs, SelectionMode::Greedy, &mut rng).unwrap(), 3);
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let probs = vec![1.0f32 / 12.0; 12];
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20)
                .map(|_| select_action(&probs, SelectionMode::Sample, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(42), draw(42));
        assert!(draw(42).iter().all(|&i| i < 12));
    }

    #[test]
    fn greedy_ties_go_to_lowest_index() {
        let mut probs = vec![0.0f32; 12];
        probs[0] = 0.5;
        probs[1] = 0.5;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(select_action(&probs, SelectionMode::Greedy, &mut rng).unwrap(), 0);
    }

    #[test]
    fn sample_frequencies_follow_probabilities() {
        let probs = [0.1f32, 0.6, 0.3];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = [0usize; 3];
        for _ in 0..20_000 {
            counts[select_action(&probs, SelectionMode::Sample, &mut rng).unwrap()] += 1;
        }
        for (c, p) in counts.iter().zip(probs) {
            assert!((*c as f64 / 20_000.0 - p as f64).abs() < 0.015);
        }
    }

    #[test]
    fn rejects_unnormalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(select_action(&[0.5, 0.2], SelectionMode::Greedy, &mut rng).is_err());
        assert!(select_action(&[1.5, -0.5], SelectionMode::Sample, &mut rng).is_err());
        assert!(select_action(&[], SelectionMode::Sample, &mut rng).is_err());
    }
}
