use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::evaluate::{CaseResult, EvalOutcomes};
use super::EvalError;
use crate::sim::{EpisodeLog, Status};

/// Arrival time minus the straight-line travel time at preferred speed.
pub fn extra_time_to_goal(log: &EpisodeLog, agent_id: usize) -> Result<f64, EvalError> {
    let outcome = log
        .outcomes
        .iter()
        .find(|o| o.agent_id == agent_id)
        .ok_or(EvalError::UnknownAgent(agent_id))?;
    match (outcome.status, outcome.arrival_time) {
        (Status::AtGoal, Some(t)) => Ok(t - outcome.start.distance(outcome.goal) / outcome.pref_speed),
        _ => Err(EvalError::NotAtGoal { agent_id }),
    }
}

/// Nearest-rank percentile: the smallest sample with at least `p` percent of the samples at or
/// below it. `None` for an empty sample.
pub fn percentile_nearest_rank(samples: &[f64], p: f64) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// One column of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub policy: String,
    pub cases: usize,
    pub pct_collisions: f64,
    pub pct_stuck: f64,
    /// Cases every compared policy solved; the timing statistics use only these.
    pub timing_cases: usize,
    pub extra_time_mean: Option<f64>,
    pub extra_time_p75: Option<f64>,
    pub extra_time_p90: Option<f64>,
}

impl Metrics {
    pub fn pct_failures(&self) -> f64 {
        self.pct_collisions + self.pct_stuck
    }
}

/// Failure rates over all cases and timing statistics over the cases solved by every policy.
pub fn compare(outcomes: &[EvalOutcomes]) -> Result<Vec<Metrics>, EvalError> {
    let first = outcomes.first().ok_or(EvalError::NoOutcomes)?;
    for o in outcomes {
        if o.suite_id != first.suite_id || o.cases.len() != first.cases.len() {
            return Err(EvalError::SuiteMismatch(first.suite_id.clone(), o.suite_id.clone()));
        }
    }
    let common: BTreeSet<usize> = (0..first.cases.len())
        .filter(|&i| outcomes.iter().all(|o| o.cases[i].result == CaseResult::Success))
        .collect();
    Ok(outcomes
        .iter()
        .map(|o| {
            let n = o.cases.len();
            let pct = |r: CaseResult| 100.0 * o.cases.iter().filter(|c| c.result == r).count() as f64 / n as f64;
            let times: Vec<f64> = common.iter().filter_map(|&i| o.cases[i].extra_time).collect();
            let mean = (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64);
            Metrics {
                policy: o.policy.clone(),
                cases: n,
                pct_collisions: pct(CaseResult::Collision),
                pct_stuck: pct(CaseResult::Stuck),
                timing_cases: times.len(),
                extra_time_mean: mean,
                extra_time_p75: percentile_nearest_rank(&times, 75.0),
                extra_time_p90: percentile_nearest_rank(&times, 90.0),
            }
        })
        .collect())
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
}

/// Table with one row per policy: extra time (mean / 75th / 90th) and failures (collisions / stuck).
pub fn format_table(suite_id: &str, metrics: &[Metrics]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "suite: {suite_id}  (percentiles: nearest rank)");
    let _ = writeln!(
        s,
        "{:<24} {:>6} {:>8}  {:<22} {:<24}",
        "policy", "cases", "timed", "extra time avg/75/90 s", "% failures (coll/stuck)"
    );
    for m in metrics {
        let times = format!(
            "{} / {} / {}",
            opt(m.extra_time_mean),
            opt(m.extra_time_p75),
            opt(m.extra_time_p90)
        );
        let fails = format!("{:.1} ({:.1} / {:.1})", m.pct_failures(), m.pct_collisions, m.pct_stuck);
        let _ = writeln!(
            s,
            "{:<24} {:>6} {:>8}  {:<22} {:<24}",
            m.policy, m.cases, m.timing_cases, times, fails
        );
    }
    s
}

pub fn write_report_csv(path: &Path, suite_id: &str, metrics: &[Metrics]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "suite_id",
        "policy",
        "cases",
        "timing_cases",
        "extra_time_mean",
        "extra_time_p75",
        "extra_time_p90",
        "pct_failures",
        "pct_collisions",
        "pct_stuck",
        "percentile_method",
    ])?;
    let f = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for m in metrics {
        w.write_record([
            suite_id.to_string(),
            m.policy.clone(),
            m.cases.to_string(),
            m.timing_cases.to_string(),
            f(m.extra_time_mean),
            f(m.extra_time_p75),
            f(m.extra_time_p90),
            m.pct_failures().to_string(),
            m.pct_collisions.to_string(),
            m.pct_stuck.to_string(),
            "nearest_rank".to_string(),
        ])?;
    }
    w.flush().map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })
}
