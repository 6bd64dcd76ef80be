//! Flat `key = value` experiment configuration.
//!
//! Blank lines and everything after `#` are ignored. Lists are comma
//! separated. Unknown keys are rejected. Every key is optional:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `mazes` | maze files (relative to the config file) or bundled names; empty means the whole bundled corpus | empty |
//! | `agent` | one or more of `proposed`, `dfs`, `memory_greedy` | `proposed` |
//! | `robots` | 1, 2 or 4 | 4 |
//! | `seeds` | mission seeds | `0, 1, 2, 3, 4` |
//! | `max_ticks` | tick limit per mission | 2000 |
//! | `coverage_target_pct` | stop once coverage reaches this | 99 |
//! | `range_px`, `loss_prob`, `delay_us`, `bandwidth_mbps` | network | 1500, 0, 0.2, 54 |
//! | `messaging` | `false` disables the network entirely | `true` |
//! | `alpha`, `gamma`, `epsilon`, `alpha_i`, `beta_i`, `loop_penalty`, `lambda` | learning | see [`RLParams`](crate::rl::RLParams) |
//! | `pretrain`, `pretrain_episodes` | sub-maze pretraining | `true`, 1 |
//! | `greedy_degree`, `memory_kappa` | memory-greedy baseline | 0.1, 0.1 |
//! | `sweep_param`, `sweep_values` | `range_px` or `loss_prob` and its values | none |

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::net::NetConfig;
use crate::sim::{AgentKind, MissionConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given twice")]
    Duplicate(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    fn invalid(key: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    /// The offending key, when the error concerns one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey(k) | ConfigError::Duplicate(k) => Some(k),
            ConfigError::Invalid { key, .. } => Some(key),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SweepParam {
    RangePx,
    LossProb,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::RangePx => "range_px",
            SweepParam::LossProb => "loss_prob",
        }
    }

    /// Writes `value` into the matching field of `net`.
    pub fn apply(self, net: &mut NetConfig, value: f64) {
        match self {
            SweepParam::RangePx => net.range_px = value,
            SweepParam::LossProb => net.loss_prob = value,
        }
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "range_px" => Ok(SweepParam::RangePx),
            "loss_prob" => Ok(SweepParam::LossProb),
            other => Err(format!("expected range_px or loss_prob, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// As written in the file; resolved against `base_dir` when loading.
    pub maze_paths: Vec<String>,
    pub base_dir: PathBuf,
    pub agents: Vec<AgentKind>,
    pub seeds: Vec<u64>,
    pub mission: MissionConfig,
    pub sweep: Option<Sweep>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            maze_paths: Vec::new(),
            base_dir: PathBuf::from("."),
            agents: vec![AgentKind::Proposed],
            seeds: (0..5).collect(),
            mission: MissionConfig::default(),
            sweep: None,
        }
    }
}

const KEYS: &[&str] = &[
    "mazes",
    "agent",
    "robots",
    "seeds",
    "max_ticks",
    "coverage_target_pct",
    "range_px",
    "loss_prob",
    "delay_us",
    "bandwidth_mbps",
    "messaging",
    "alpha",
    "gamma",
    "epsilon",
    "alpha_i",
    "beta_i",
    "loop_penalty",
    "lambda",
    "pretrain",
    "pretrain_episodes",
    "greedy_degree",
    "memory_kappa",
    "sweep_param",
    "sweep_values",
];

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| ConfigError::invalid(key, format!("{value:?}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    list(value).map(|v| parse_one(key, v)).collect()
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

impl ExperimentConfig {
    /// Parses config text; relative maze paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig {
            base_dir: base_dir.to_path_buf(),
            ..ExperimentConfig::default()
        };
        let mut seen = BTreeSet::new();
        let mut sweep_param: Option<SweepParam> = None;
        let mut sweep_values: Option<Vec<f64>> = None;

        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: n + 1 })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey(key.to_string()));
            }
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Duplicate(key.to_string()));
            }
            let m = &mut cfg.mission;
            match key {
                "mazes" => cfg.maze_paths = list(value).map(str::to_string).collect(),
                "agent" => {
                    cfg.agents = parse_list(key, value)?;
                    if cfg.agents.is_empty() {
                        return Err(ConfigError::invalid(key, "at least one agent required"));
                    }
                }
                "robots" => m.robots = parse_one(key, value)?,
                "seeds" => {
                    cfg.seeds = parse_list(key, value)?;
                    if cfg.seeds.is_empty() {
                        return Err(ConfigError::invalid(key, "at least one seed required"));
                    }
                }
                "max_ticks" => m.max_ticks = parse_one(key, value)?,
                "coverage_target_pct" => m.coverage_target_pct = parse_one(key, value)?,
                "range_px" => m.net.range_px = parse_one(key, value)?,
                "loss_prob" => m.net.loss_prob = parse_one(key, value)?,
                "delay_us" => m.net.delay_us = parse_one(key, value)?,
                "bandwidth_mbps" => m.net.bandwidth_mbps = parse_one(key, value)?,
                "messaging" => m.messaging = parse_one(key, value)?,
                "alpha" => m.rl.alpha = parse_one(key, value)?,
                "gamma" => m.rl.gamma = parse_one(key, value)?,
                "epsilon" => m.rl.epsilon = parse_one(key, value)?,
                "alpha_i" => m.rl.alpha_i = parse_one(key, value)?,
                "beta_i" => m.rl.beta_i = parse_one(key, value)?,
                "loop_penalty" => m.rl.loop_penalty = parse_one(key, value)?,
                "lambda" => m.rl.lambda = parse_one(key, value)?,
                "pretrain" => m.pretrain = parse_one(key, value)?,
                "pretrain_episodes" => m.pretrain_episodes = parse_one(key, value)?,
                "greedy_degree" => m.greedy_degree = parse_one(key, value)?,
                "memory_kappa" => m.memory_kappa = parse_one(key, value)?,
                "sweep_param" => sweep_param = Some(parse_one(key, value)?),
                "sweep_values" => sweep_values = Some(parse_list(key, value)?),
                _ => unreachable!("key list and match arms agree"),
            }
        }

        cfg.sweep = match (sweep_param, sweep_values) {
            (None, None) => None,
            (Some(param), Some(values)) if !values.is_empty() => Some(Sweep { param, values }),
            (Some(_), _) => {
                return Err(ConfigError::invalid("sweep_values", "required with sweep_param"))
            }
            (None, Some(_)) => {
                return Err(ConfigError::invalid("sweep_param", "required with sweep_values"))
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = &self.mission;
        if !matches!(m.robots, 1 | 2 | 4) {
            return Err(ConfigError::invalid("robots", "must be 1, 2 or 4"));
        }
        if m.max_ticks < 1 {
            return Err(ConfigError::invalid("max_ticks", "must be >= 1"));
        }
        if !(m.coverage_target_pct > 0.0 && m.coverage_target_pct <= 100.0) {
            return Err(ConfigError::invalid("coverage_target_pct", "must lie in (0, 100]"));
        }
        if m.pretrain_episodes < 1 {
            return Err(ConfigError::invalid("pretrain_episodes", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&m.greedy_degree) {
            return Err(ConfigError::invalid("greedy_degree", "must lie in [0, 1]"));
        }
        if !(m.memory_kappa >= 0.0 && m.memory_kappa.is_finite()) {
            return Err(ConfigError::invalid("memory_kappa", "must be finite and >= 0"));
        }
        m.net.validate().map_err(|e| match e {
            crate::net::NetError::InvalidParam { name, reason } => ConfigError::invalid(name, reason),
            other => ConfigError::invalid("net", other.to_string()),
        })?;
        m.rl.validate().map_err(|e| match e {
            crate::rl::RlError::InvalidParam { name, reason } => ConfigError::invalid(name, reason),
            other => ConfigError::invalid("rl", other.to_string()),
        })?;
        if let Some(sweep) = &self.sweep {
            for &v in &sweep.values {
                let mut net = m.net;
                sweep.param.apply(&mut net, v);
                if net.validate().is_err() {
                    return Err(ConfigError::invalid(
                        "sweep_values",
                        format!("{v} is not a valid {}", sweep.param.as_str()),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Writes every key, so that parsing the output yields an equal config.
    pub fn to_text(&self) -> String {
        let m = &self.mission;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("mazes", self.maze_paths.join(", "));
        kv("agent", join(&self.agents));
        kv("robots", m.robots.to_string());
        kv("seeds", join(&self.seeds));
        kv("max_ticks", m.max_ticks.to_string());
        kv("coverage_target_pct", m.coverage_target_pct.to_string());
        kv("range_px", m.net.range_px.to_string());
        kv("loss_prob", m.net.loss_prob.to_string());
        kv("delay_us", m.net.delay_us.to_string());
        kv("bandwidth_mbps", m.net.bandwidth_mbps.to_string());
        kv("messaging", m.messaging.to_string());
        kv("alpha", m.rl.alpha.to_string());
        kv("gamma", m.rl.gamma.to_string());
        kv("epsilon", m.rl.epsilon.to_string());
        kv("alpha_i", m.rl.alpha_i.to_string());
        kv("beta_i", m.rl.beta_i.to_string());
        kv("loop_penalty", m.rl.loop_penalty.to_string());
        kv("lambda", m.rl.lambda.to_string());
        kv("pretrain", m.pretrain.to_string());
        kv("pretrain_episodes", m.pretrain_episodes.to_string());
        kv("greedy_degree", m.greedy_degree.to_string());
        kv("memory_kappa", m.memory_kappa.to_string());
        if let Some(s) = &self.sweep {
            kv("sweep_param", s.param.as_str().to_string());
            kv("sweep_values", join(&s.values));
        }
        out
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    ExperimentConfig::parse(&text, base)
}
