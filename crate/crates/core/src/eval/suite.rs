use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EvalError;
use crate::geom::Vec2;
use crate::sim::{
    generate_random_scenario, time_limit_for, AgentSpec, PolicyTag, ScenarioFile, ScenarioSpec, SimConfig, SimError,
};

/// Immutable list of evaluation cases, identified by `id`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSuite {
    pub id: String,
    pub seed: u64,
    pub scenarios: Vec<ScenarioSpec>,
}

impl TestSuite {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn save(&self, path: &Path) -> Result<(), EvalError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|source| EvalError::Io {
                path: dir.to_path_buf(),
                source,
            })?;
        }
        let file = ScenarioFile {
            suite_id: Some(self.id.clone()),
            seed: Some(self.seed),
            ..ScenarioFile::new(self.scenarios.clone())
        };
        Ok(file.save(path)?)
    }

    /// Loads a suite file; a file without a suite id is named after its path.
    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let file = ScenarioFile::load(path)?;
        Ok(Self {
            id: file.suite_id.unwrap_or_else(|| path.display().to_string()),
            seed: file.seed.unwrap_or(0),
            scenarios: file.scenarios,
        })
    }
}

/// `count` random cases with `n_agents` agents in a `domain_size` square.
pub fn generate_suite(
    id: &str,
    n_agents: usize,
    domain_size: f64,
    count: usize,
    seed: u64,
    sim: &SimConfig,
) -> Result<TestSuite, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scenarios = (0..count)
        .map(|_| generate_random_scenario(n_agents, domain_size, &mut rng, sim))
        .collect::<Result<Vec<_>, SimError>>()?;
    Ok(TestSuite {
        id: id.to_string(),
        seed,
        scenarios,
    })
}

/// Two agents on the x-axis driving straight at each other's start, with random separation,
/// radii and speeds. Goals are the opposite agent's start.
pub fn generate_head_on_suite(count: usize, seed: u64, sim: &SimConfig) -> TestSuite {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scenarios = (0..count)
        .map(|_| {
            let half = rng.random_range(1.5..3.0);
            let offset = rng.random_range(-1.0..1.0);
            let a = Vec2::new(-half, offset);
            let b = Vec2::new(half, offset);
            let agents: Vec<AgentSpec> = [(a, b), (b, a)]
                .into_iter()
                .map(|(start, goal)| AgentSpec {
                    start,
                    goal,
                    radius: rng.random_range(sim.radius_range[0]..=sim.radius_range[1]),
                    pref_speed: rng.random_range(sim.pref_speed_range[0]..=sim.pref_speed_range[1]),
                    policy: PolicyTag::Learned,
                })
                .collect();
            ScenarioSpec {
                time_limit: time_limit_for(&agents, sim),
                agents,
                domain_size: 2.0 * half,
                rng_seed: rng.random(),
                dt: sim.dt,
            }
        })
        .collect();
    TestSuite {
        id: format!("head_on_{seed}"),
        seed,
        scenarios,
    }
}

/// Continuous-time first contact of two agents moving toward each other at constant speed along
/// the line joining them.
pub fn head_on_collision_time(scenario: &ScenarioSpec) -> f64 {
    let [a, b] = [&scenario.agents[0], &scenario.agents[1]];
    let gap = a.start.distance(b.start) - a.radius - b.radius;
    gap / (a.pref_speed + b.pref_speed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_are_reproducible_and_round_trip() {
        let sim = SimConfig::default();
        let a = generate_suite("s", 2, 4.0, 10, 3, &sim).unwrap();
        let b = generate_suite("s", 2, 4.0, 10, 3, &sim).unwrap();
        assert_eq!(a, b);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("suite.json");
        a.save(&path).unwrap();
        assert_eq!(TestSuite::load(&path).unwrap(), a);
    }

    #[test]
    fn head_on_geometry() {
        let s = generate_head_on_suite(5, 1, &SimConfig::default());
        for c in &s.scenarios {
            assert_eq!(c.agents[0].goal, c.agents[1].start);
            assert!(head_on_collision_time(c) > 0.0);
        }
    }
}
