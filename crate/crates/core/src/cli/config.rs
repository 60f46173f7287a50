//! Run configuration: one TOML file with a section per module, plus `--set key=value` overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use super::CliError;
use crate::net::NetConfig;
use crate::obs::ObsConfig;
use crate::sim::{ExpertConfig, SimConfig};
use crate::trainer::{PretrainConfig, TrainingConfig};

/// Kind of scenarios produced by `gen-suite` (and by `rollout` without a scenario file).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    Random,
    HeadOn,
    Circle,
    PairSwaps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSection {
    /// Suite id; empty means one derived from the other fields.
    pub id: String,
    pub kind: SuiteKind,
    pub n_agents: usize,
    /// Square spawn area side (m); `0` picks 4 m below 10 agents and 6 m otherwise.
    pub domain_size: f64,
    pub cases: usize,
}

impl Default for SuiteSection {
    fn default() -> Self {
        Self {
            id: String::new(),
            kind: SuiteKind::Random,
            n_agents: 2,
            domain_size: 0.0,
            cases: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Threads used to spread evaluation cases.
    pub threads: usize,
    /// Random single-agent cases rolled out after `pretrain` as a competence check.
    pub pretrain_check_cases: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            threads: 1,
            pretrain_check_cases: 100,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RolloutSection {
    /// Store the full action distribution of every learned decision.
    pub record_distributions: bool,
}

/// Every setting of every subcommand. All keys are optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Seeds network initialisation, data generation, training scenarios and suites.
    pub seed: u64,
    pub sim: SimConfig,
    pub obs: ObsConfig,
    pub net: NetConfig,
    pub expert: ExpertConfig,
    pub pretrain: PretrainConfig,
    pub train: TrainingConfig,
    pub suite: SuiteSection,
    pub eval: EvalSection,
    pub rollout: RolloutSection,
}

impl Config {
    /// Reads `path` (if any), applies `overrides` and `seed`, and validates the result.
    pub fn load(path: Option<&Path>, overrides: &[String], seed: Option<u64>) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                text.parse::<Table>()
                    .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
            }
            None => Table::new(),
        };
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let mut config: Config = Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Usage(format!("invalid config: {e}")))?;
        if let Some(seed) = seed {
            config.seed = seed;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |e: &dyn std::fmt::Display| CliError::Usage(e.to_string());
        self.net.validate().map_err(|e| usage(&e))?;
        self.train.validate().map_err(|e| usage(&e))?;
        self.pretrain.validate().map_err(|e| usage(&e))?;
        if !self.sim.reward.is_valid() {
            return Err(CliError::Usage("invalid reward parameters".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    /// Library-level training config with the run seed applied.
    pub fn training(&self) -> TrainingConfig {
        TrainingConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }

    pub fn pretraining(&self) -> PretrainConfig {
        PretrainConfig {
            seed: self.seed,
            ..self.pretrain.clone()
        }
    }
}

/// Every settable dotted key, in file order.
pub fn valid_keys() -> Vec<String> {
    fn walk(prefix: &str, table: &Table, out: &mut Vec<String>) {
        for (k, v) in table {
            let key = if prefix.is_empty() {
                k.clone()
            } else {
                format!("{prefix}.{k}")
            };
            match v {
                Value::Table(t) => walk(&key, t, out),
                _ => out.push(key),
            }
        }
    }
    let defaults = Table::try_from(Config::default()).expect("config is serializable");
    let mut out = Vec::new();
    walk("", &defaults, &mut out);
    out
}

fn parse_value(text: &str) -> Value {
    // accept bare words as strings so `--set suite.kind=circle` works
    format!("v = {text}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(text.to_string()))
}

/// Applies one `section.key=value` override to a raw config table.
pub fn apply_override(table: &mut Table, item: &str) -> Result<(), CliError> {
    let (key, value) = item
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override `{item}` is not of the form key=value")))?;
    let key = key.trim();
    let keys = valid_keys();
    if !keys.iter().any(|k| k == key) {
        return Err(CliError::Usage(format!(
            "unknown config key `{key}`; valid keys are:\n  {}",
            keys.join("\n  ")
        )));
    }
    let mut parts: Vec<&str> = key.split('.').collect();
    let leaf = parts.pop().expect("non-empty key");
    let mut cur = table;
    for part in parts {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Usage(format!("config key `{part}` is not a section")))?;
    }
    cur.insert(leaf.to_string(), parse_value(value.trim()));
    Ok(())
}
