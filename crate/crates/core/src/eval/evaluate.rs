use serde::{Deserialize, Serialize};

use super::metrics::extra_time_to_goal;
use super::{EvalError, TestSuite};
use crate::net::NetParams;
use crate::obs::ObsConfig;
use crate::sim::{run_episode, EpisodeLog, ExpertConfig, PolicyTable, PolicyTag, SimConfig, Status, ACTION_COUNT};
use crate::trainer::SelectionMode;

/// A policy under evaluation; it controls every agent of every case.
#[derive(Clone, Copy)]
pub enum EvalPolicy<'a> {
    Learned {
        name: &'a str,
        params: &'a NetParams<f32>,
    },
    /// `NonCooperative`, `ZeroVelocity` or `Scripted`.
    Baseline(PolicyTag),
}

impl EvalPolicy<'_> {
    pub fn name(&self) -> String {
        match self {
            EvalPolicy::Learned { name, .. } => name.to_string(),
            EvalPolicy::Baseline(tag) => match tag {
                PolicyTag::NonCooperative => "non_cooperative".into(),
                PolicyTag::ZeroVelocity => "zero_velocity".into(),
                PolicyTag::Scripted => "scripted".into(),
                PolicyTag::Learned => "learned".into(),
            },
        }
    }

    fn tag(&self) -> PolicyTag {
        match self {
            EvalPolicy::Learned { .. } => PolicyTag::Learned,
            EvalPolicy::Baseline(tag) => *tag,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseResult {
    Success,
    /// At least one agent collided (takes precedence over timeouts).
    Collision,
    /// No collision, but at least one agent did not reach its goal in time.
    Stuck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseOutcome {
    pub case: usize,
    pub n_agents: usize,
    pub result: CaseResult,
    /// Mean over agents of the extra time to goal; successful cases only.
    pub extra_time: Option<f64>,
    /// Time of the first collision.
    pub collision_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcomes {
    pub suite_id: String,
    pub policy: String,
    pub cases: Vec<CaseOutcome>,
}

impl EvalOutcomes {
    pub fn save(&self, path: &std::path::Path) -> Result<(), EvalError> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn success_rate(&self) -> f64 {
        let ok = self.cases.iter().filter(|c| c.result == CaseResult::Success).count();
        ok as f64 / self.cases.len().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub sim: SimConfig,
    pub obs: ObsConfig,
    pub expert: ExpertConfig,
    pub mode: SelectionMode,
    /// Threads to spread cases over; results do not depend on it.
    pub threads: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            obs: ObsConfig::default(),
            expert: ExpertConfig::default(),
            mode: SelectionMode::Greedy,
            threads: 1,
        }
    }
}

/// Classifies a finished episode.
pub fn case_outcome(case: usize, log: &EpisodeLog) -> CaseOutcome {
    let world = log.final_world();
    let collision_time = world
        .iter()
        .filter(|a| a.status == Status::Collided)
        .map(|a| a.elapsed)
        .min_by(f64::total_cmp);
    let all_arrived = world.iter().all(|a| a.status == Status::AtGoal);
    let result = if collision_time.is_some() {
        CaseResult::Collision
    } else if all_arrived {
        CaseResult::Success
    } else {
        CaseResult::Stuck
    };
    let extra_time = (result == CaseResult::Success).then(|| {
        let total: f64 = world
            .iter()
            .map(|a| extra_time_to_goal(log, a.id).expect("every agent arrived"))
            .sum();
        total / world.len() as f64
    });
    CaseOutcome {
        case,
        n_agents: world.len(),
        result,
        extra_time,
        collision_time,
    }
}

/// Runs every case of the suite with all agents under `policy`. Also returns the episode logs.
pub fn evaluate_with_logs(
    policy: EvalPolicy<'_>,
    suite: &TestSuite,
    opts: &EvalOptions,
) -> Result<(EvalOutcomes, Vec<EpisodeLog>), EvalError> {
    if suite.is_empty() {
        return Err(EvalError::EmptySuite);
    }
    if let EvalPolicy::Learned { params, .. } = policy {
        if params.config().action_count != ACTION_COUNT {
            return Err(EvalError::Incompatible(format!(
                "network has {} actions, the simulator {}",
                params.config().action_count,
                ACTION_COUNT
            )));
        }
    }
    let tag = policy.tag();
    let run_case = |case: usize| -> Result<EpisodeLog, EvalError> {
        let scenario = suite.scenarios[case].clone().with_policy(tag);
        let mut table = match policy {
            EvalPolicy::Learned { params, .. } => PolicyTable::with_learned(params, opts.mode),
            EvalPolicy::Baseline(_) => PolicyTable::baselines(),
        };
        table.obs = opts.obs;
        table.expert = opts.expert;
        Ok(run_episode(&scenario, &table, &opts.sim, case as u64)?)
    };
    let threads = opts.threads.clamp(1, suite.len());
    let logs: Vec<EpisodeLog> = if threads == 1 {
        (0..suite.len()).map(run_case).collect::<Result<_, _>>()?
    } else {
        let chunk = suite.len().div_ceil(threads);
        let run_case = &run_case;
        let parts: Vec<Result<Vec<EpisodeLog>, EvalError>> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    s.spawn(move || {
                        (t * chunk..((t + 1) * chunk).min(suite.len()))
                            .map(run_case)
                            .collect::<Result<Vec<_>, _>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("evaluation thread panicked"))
                .collect()
        });
        let mut logs = Vec::with_capacity(suite.len());
        for part in parts {
            logs.extend(part?);
        }
        logs
    };
    let cases = logs.iter().enumerate().map(|(i, log)| case_outcome(i, log)).collect();
    Ok((
        EvalOutcomes {
            suite_id: suite.id.clone(),
            policy: policy.name(),
            cases,
        },
        logs,
    ))
}

pub fn evaluate(policy: EvalPolicy<'_>, suite: &TestSuite, opts: &EvalOptions) -> Result<EvalOutcomes, EvalError> {
    evaluate_with_logs(policy, suite, opts).map(|(outcomes, _)| outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{generate_head_on_suite, generate_suite, head_on_collision_time};

    #[test]
    fn zero_velocity_is_always_stuck() {
        let suite = generate_suite("z", 3, 4.0, 5, 1, &SimConfig::default()).unwrap();
        let out = evaluate(
            EvalPolicy::Baseline(PolicyTag::ZeroVelocity),
            &suite,
            &EvalOptions::default(),
        )
        .unwrap();
        assert!(out.cases.iter().all(|c| c.result == CaseResult::Stuck));
    }

    #[test]
    fn non_cooperative_head_on_collides_on_time() {
        let sim = SimConfig::default();
        let suite = generate_head_on_suite(10, 2, &sim);
        let out = evaluate(
            EvalPolicy::Baseline(PolicyTag::NonCooperative),
            &suite,
            &EvalOptions::default(),
        )
        .unwrap();
        for (c, s) in out.cases.iter().zip(&suite.scenarios) {
            assert_eq!(c.result, CaseResult::Collision);
            let t = c.collision_time.unwrap();
            let expected = head_on_collision_time(s);
            assert!(t >= expected && t <= expected + sim.dt + 1e-9, "{t} vs {expected}");
        }
    }

    #[test]
    fn threads_do_not_change_results() {
        let suite = generate_suite("t", 2, 4.0, 7, 5, &SimConfig::default()).unwrap();
        let policy = EvalPolicy::Baseline(PolicyTag::Scripted);
        let one = evaluate(policy, &suite, &EvalOptions::default()).unwrap();
        let three = evaluate(
            policy,
            &suite,
            &EvalOptions {
                threads: 3,
                ..EvalOptions::default()
            },
        )
        .unwrap();
        assert_eq!(one, three);
    }
}
