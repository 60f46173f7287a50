use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::agent::{AgentState, PolicyTag, Status};
use super::{SimConfig, SimError};
use crate::geom::Vec2;

/// Version written into every scenario file.
pub const SCENARIO_FORMAT: u32 = 1;

/// Initial conditions for one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub start: Vec2,
    pub goal: Vec2,
    pub radius: f64,
    pub pref_speed: f64,
    pub policy: PolicyTag,
}

impl AgentSpec {
    /// Straight-line travel time at preferred speed.
    pub fn straight_line_time(&self) -> f64 {
        self.start.distance(self.goal) / self.pref_speed
    }
}

/// A complete, reproducible episode setup. The domain is the square
/// `[-domain_size/2, domain_size/2]^2` centered at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub agents: Vec<AgentSpec>,
    pub domain_size: f64,
    pub rng_seed: u64,
    pub dt: f64,
    pub time_limit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructuredKind {
    /// Agents evenly spaced on a circle, each heading to the antipodal point.
    Circle,
    /// Opposing pairs stacked in rows, each pair swapping sides.
    PairSwaps,
}

impl ScenarioSpec {
    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidScenario(msg));
        if self.agents.is_empty() {
            return bad("scenario has no agents".into());
        }
        if !(self.dt > 0.0) || !(self.time_limit > 0.0) {
            return bad(format!(
                "dt {} and time_limit {} must be positive",
                self.dt, self.time_limit
            ));
        }
        let half = self.domain_size / 2.0 + 1e-9;
        for (i, a) in self.agents.iter().enumerate() {
            if !(a.radius > 0.0) || !(a.pref_speed > 0.0) {
                return bad(format!("agent {i}: radius and pref_speed must be positive"));
            }
            if a.goal.x.abs() > half || a.goal.y.abs() > half {
                return bad(format!("agent {i}: goal {:?} outside the domain", a.goal));
            }
            for (j, b) in self.agents.iter().enumerate().skip(i + 1) {
                if a.start.distance(b.start) - a.radius - b.radius <= 0.0 {
                    return bad(format!("agents {i} and {j} overlap at start"));
                }
            }
        }
        Ok(())
    }

    /// Builds the world at t = 0. Agents start at rest facing their goals.
    pub fn initial_world(&self) -> Vec<AgentState> {
        self.agents
            .iter()
            .enumerate()
            .map(|(id, a)| AgentState {
                id,
                position: a.start,
                velocity: Vec2::ZERO,
                heading: (a.goal - a.start).angle(),
                radius: a.radius,
                goal: a.goal,
                pref_speed: a.pref_speed,
                policy: a.policy,
                status: Status::Active,
                elapsed: 0.0,
            })
            .collect()
    }

    /// Replaces every agent's policy tag.
    pub fn with_policy(mut self, tag: PolicyTag) -> Self {
        for a in &mut self.agents {
            a.policy = tag;
        }
        self
    }
}

/// Episode time limit: generous multiple of the slowest straight-line time.
pub fn time_limit_for(agents: &[AgentSpec], cfg: &SimConfig) -> f64 {
    let slowest = agents.iter().map(AgentSpec::straight_line_time).fold(0.0, f64::max);
    cfg.min_time_limit.max(cfg.time_limit_factor * slowest)
}

/// Domain size used by the benchmark tables for `n` agents.
pub fn preset_domain_size(n: usize) -> f64 {
    if n >= 10 {
        6.0
    } else {
        4.0
    }
}

fn clear_of(p: Vec2, r: f64, q: Vec2, rq: f64, margin: f64) -> bool {
    p.distance(q) - r - rq >= margin
}

// Positions tried per agent before the whole layout is redrawn.
const PLACEMENT_TRIES: usize = 100;

/// One attempt at a full layout; `None` when some agent could not be placed.
fn try_place<R: Rng + ?Sized>(n: usize, domain_size: f64, rng: &mut R, cfg: &SimConfig) -> Option<Vec<AgentSpec>> {
    let half = domain_size / 2.0;
    let mut agents: Vec<AgentSpec> = Vec::with_capacity(n);
    for _ in 0..n {
        let radius = rng.random_range(cfg.radius_range[0]..=cfg.radius_range[1]);
        let pref_speed = rng.random_range(cfg.pref_speed_range[0]..=cfg.pref_speed_range[1]);
        let sample = |rng: &mut R| Vec2::new(rng.random_range(-half..=half), rng.random_range(-half..=half));
        let start = (0..PLACEMENT_TRIES).map(|_| sample(rng)).find(|&p| {
            agents.iter().all(|o| {
                clear_of(p, radius, o.start, o.radius, cfg.start_margin)
                    && clear_of(p, radius, o.goal, o.radius, cfg.start_margin)
            })
        })?;
        let goal = (0..PLACEMENT_TRIES).map(|_| sample(rng)).find(|&g| {
            g.distance(start) >= cfg.min_goal_distance
                && agents.iter().all(|o| {
                    clear_of(g, radius, o.goal, o.radius, cfg.start_margin)
                        && clear_of(g, radius, o.start, o.radius, cfg.start_margin)
                })
        })?;
        agents.push(AgentSpec {
            start,
            goal,
            radius,
            pref_speed,
            policy: PolicyTag::Learned,
        });
    }
    Some(agents)
}

/// Random scenario with `n` agents whose starts and goals lie uniformly in the domain.
///
/// Agent radius and preferred speed are drawn from the configured ranges. Starts are kept
/// `start_margin` apart from each other, goals likewise, and no goal overlaps another
/// agent's start. All agents are tagged `Learned`.
pub fn generate_random_scenario<R: Rng + ?Sized>(
    n: usize,
    domain_size: f64,
    rng: &mut R,
    cfg: &SimConfig,
) -> Result<ScenarioSpec, SimError> {
    if n == 0 {
        return Err(SimError::InvalidAgentCount { kind: "random", n });
    }
    let agents = (0..cfg.max_sampling_attempts)
        .find_map(|_| try_place(n, domain_size, rng, cfg))
        .ok_or(SimError::ScenarioCrowded {
            n,
            domain_size,
            attempts: cfg.max_sampling_attempts,
        })?;
    let time_limit = time_limit_for(&agents, cfg);
    Ok(ScenarioSpec {
        agents,
        domain_size,
        rng_seed: rng.random(),
        dt: cfg.dt,
        time_limit,
    })
}

/// Radius and preferred speed used for every agent of a structured scenario.
pub const STRUCTURED_RADIUS: f64 = 0.5;
pub const STRUCTURED_PREF_SPEED: f64 = 1.0;

pub fn generate_structured_scenario(kind: StructuredKind, n: usize, cfg: &SimConfig) -> Result<ScenarioSpec, SimError> {
    let r = STRUCTURED_RADIUS;
    let agent = |start: Vec2, goal: Vec2| AgentSpec {
        start,
        goal,
        radius: r,
        pref_speed: STRUCTURED_PREF_SPEED,
        policy: PolicyTag::Learned,
    };
    let (agents, extent) = match kind {
        StructuredKind::Circle => {
            if n < 2 {
                return Err(SimError::InvalidAgentCount { kind: "circle", n });
            }
            // neighbours on the circle keep at least `2r + 0.4` between centers
            let circle = (n as f64 * (2.0 * r + 0.4) / (2.0 * PI)).max(2.5);
            let agents: Vec<AgentSpec> = (0..n)
                .map(|i| {
                    let start = Vec2::from_angle(2.0 * PI * i as f64 / n as f64) * circle;
                    agent(start, -start)
                })
                .collect();
            (agents, circle)
        }
        StructuredKind::PairSwaps => {
            if n < 2 || !n.is_multiple_of(2) {
                return Err(SimError::InvalidAgentCount { kind: "pair_swaps", n });
            }
            let rows = n / 2;
            let spacing = 1.5;
            let half_width = 3.0;
            let mut agents = Vec::with_capacity(n);
            for k in 0..rows {
                let y = (k as f64 - (rows as f64 - 1.0) / 2.0) * spacing;
                let left = Vec2::new(-half_width, y);
                let right = Vec2::new(half_width, y);
                agents.push(agent(left, right));
                agents.push(agent(right, left));
            }
            let extent = half_width.max((rows as f64 - 1.0) / 2.0 * spacing);
            (agents, extent)
        }
    };
    let time_limit = time_limit_for(&agents, cfg);
    let spec = ScenarioSpec {
        agents,
        domain_size: 2.0 * (extent + r),
        rng_seed: 0,
        dt: cfg.dt,
        time_limit,
    };
    spec.validate()?;
    Ok(spec)
}

/// On-disk list of scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub format: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub scenarios: Vec<ScenarioSpec>,
}

impl ScenarioFile {
    pub fn new(scenarios: Vec<ScenarioSpec>) -> Self {
        Self {
            format: SCENARIO_FORMAT,
            suite_id: None,
            seed: None,
            scenarios,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), SimError> {
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json).map_err(|e| SimError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        let file: ScenarioFile = serde_json::from_str(&text)?;
        if file.format != SCENARIO_FORMAT {
            return Err(SimError::FormatVersion {
                expected: SCENARIO_FORMAT,
                found: file.format,
            });
        }
        for s in &file.scenarios {
            s.validate()?;
        }
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_is_reproducible_and_valid() {
        let cfg = SimConfig::default();
        let a = generate_random_scenario(4, 4.0, &mut ChaCha8Rng::seed_from_u64(7), &cfg).unwrap();
        let b = generate_random_scenario(4, 4.0, &mut ChaCha8Rng::seed_from_u64(7), &cfg).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        for ag in &a.agents {
            assert!((0.2..=0.8).contains(&ag.radius));
            assert!((0.5..=2.0).contains(&ag.pref_speed));
        }
        for (i, x) in a.agents.iter().enumerate() {
            for y in &a.agents[i + 1..] {
                assert!(x.start.distance(y.start) - x.radius - y.radius >= 0.2);
            }
        }
    }

    #[test]
    fn ten_agents_fit_preset_domain() {
        let cfg = SimConfig::default();
        assert_eq!(preset_domain_size(10), 6.0);
        assert_eq!(preset_domain_size(2), 4.0);
        let s = generate_random_scenario(10, preset_domain_size(10), &mut ChaCha8Rng::seed_from_u64(1), &cfg).unwrap();
        assert_eq!(s.len(), 10);
        s.validate().unwrap();
    }

    #[test]
    fn crowded_domain_fails() {
        let cfg = SimConfig::default();
        let err = generate_random_scenario(50, 1.0, &mut ChaCha8Rng::seed_from_u64(3), &cfg).unwrap_err();
        assert!(matches!(err, SimError::ScenarioCrowded { .. }));
    }

    #[test]
    fn time_limit_rule() {
        let cfg = SimConfig::default();
        let mut agents = vec![AgentSpec {
            start: Vec2::ZERO,
            goal: Vec2::new(4.0, 0.0),
            radius: 0.3,
            pref_speed: 1.0,
            policy: PolicyTag::Learned,
        }];
        assert_eq!(time_limit_for(&agents, &cfg), 30.0);
        agents[0].goal = Vec2::new(10.0, 0.0);
        agents[0].pref_speed = 0.5;
        assert_eq!(time_limit_for(&agents, &cfg), 80.0);
    }

    #[test]
    fn circle_goals_are_antipodal() {
        let cfg = SimConfig::default();
        let s = generate_structured_scenario(StructuredKind::Circle, 10, &cfg).unwrap();
        assert_eq!(s.len(), 10);
        for a in &s.agents {
            let rotated = a.start.rotate(PI);
            assert!(rotated.distance(a.goal) < 1e-12);
        }
        let two = generate_structured_scenario(StructuredKind::Circle, 2, &cfg).unwrap();
        assert!((two.agents[0].start + two.agents[1].start).norm() < 1e-12);
        assert!(two.agents[0].goal.distance(two.agents[1].start) < 1e-12);
    }

    #[test]
    fn pair_swaps_have_opposing_pairs() {
        let cfg = SimConfig::default();
        let s = generate_structured_scenario(StructuredKind::PairSwaps, 6, &cfg).unwrap();
        assert_eq!(s.len(), 6);
        for pair in s.agents.chunks(2) {
            assert_eq!(pair[0].start, pair[1].goal);
            assert_eq!(pair[1].start, pair[0].goal);
        }
        assert!(generate_structured_scenario(StructuredKind::PairSwaps, 5, &cfg).is_err());
        assert!(generate_structured_scenario(StructuredKind::Circle, 1, &cfg).is_err());
    }

    #[test]
    fn initial_heading_faces_goal() {
        let cfg = SimConfig::default();
        let s = generate_structured_scenario(StructuredKind::Circle, 4, &cfg).unwrap();
        for a in s.initial_world() {
            let bearing = (a.goal - a.position).angle();
            assert!((a.heading - bearing).abs() < 1e-12);
        }
    }

    #[test]
    fn file_round_trip() {
        let cfg = SimConfig::default();
        let s = generate_random_scenario(3, 4.0, &mut ChaCha8Rng::seed_from_u64(9), &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("suite.json");
        ScenarioFile::new(vec![s.clone()]).save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"format\": 1"));
        let back = ScenarioFile::load(&path).unwrap();
        assert_eq!(back.scenarios, vec![s]);
    }
}
