use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{builtin_corpus, builtin_maze};
use crate::convert::convert_bytes;
use crate::maze::{Maze, MazeError};
use crate::net::LinkStats;
use crate::sim::{run_mission, AgentKind, MetricsLog, MissionConfig, SimError, Termination};

use super::config::{ConfigError, ExperimentConfig, SweepParam};

/// Coverage levels reported per run.
pub const THRESHOLDS: [f64; 3] = [33.0, 66.0, 99.0];

#[derive(Debug, Error)]
pub enum ExpError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read maze {path}: {source}")]
    MazeIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("maze {path}: {source}")]
    MazeParse {
        path: PathBuf,
        #[source]
        source: MazeError,
    },
    #[error("{agent} on {maze}, seed {seed}{}: {source}", value.map(|v| format!(", sweep value {v}")).unwrap_or_default())]
    Mission {
        agent: AgentKind,
        maze: String,
        seed: u64,
        value: Option<f64>,
        #[source]
        source: SimError,
    },
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One finished mission, reduced to what the reports need.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub agent: AgentKind,
    pub maze: String,
    pub seed: u64,
    pub sweep_value: Option<f64>,
    pub range_px: f64,
    pub loss_prob: f64,
    /// First tick reaching each of [`THRESHOLDS`].
    pub ticks_to: [Option<u64>; 3],
    pub final_tick: u64,
    pub final_coverage_pct: f64,
    pub final_overlap_pct: f64,
    pub collisions: u64,
    pub net: LinkStats,
    pub termination: Termination,
    /// Per-tick coverage, index = tick.
    pub coverage: Vec<f64>,
    pub overlap: Vec<f64>,
}

impl RunResult {
    fn from_log(
        agent: AgentKind,
        maze: &str,
        seed: u64,
        sweep_value: Option<f64>,
        cfg: &MissionConfig,
        log: &MetricsLog,
    ) -> Self {
        let last = log.last().copied().expect("a mission log has its tick-0 row");
        Self {
            agent,
            maze: maze.to_string(),
            seed,
            sweep_value,
            range_px: cfg.net.range_px,
            loss_prob: cfg.net.loss_prob,
            ticks_to: THRESHOLDS.map(|t| log.ticks_to(t)),
            final_tick: last.tick,
            final_coverage_pct: last.coverage_pct,
            final_overlap_pct: last.overlap_pct,
            collisions: log.rows.iter().map(|r| r.collisions).sum(),
            net: last.net,
            termination: log.termination,
            coverage: log.rows.iter().map(|r| r.coverage_pct).collect(),
            overlap: log.rows.iter().map(|r| r.overlap_pct).collect(),
        }
    }

    /// Coverage at `tick`, or the final coverage once the run has ended.
    pub fn coverage_at(&self, tick: u64) -> f64 {
        at_or_last(&self.coverage, tick)
    }

    pub fn overlap_at(&self, tick: u64) -> f64 {
        at_or_last(&self.overlap, tick)
    }
}

fn at_or_last(series: &[f64], tick: u64) -> f64 {
    let i = (tick as usize).min(series.len().saturating_sub(1));
    series.get(i).copied().unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepReport {
    pub sweep_param: Option<SweepParam>,
    /// In (agent, sweep value, maze, seed) order.
    pub runs: Vec<RunResult>,
}

impl SweepReport {
    pub fn runs_for(&self, agent: AgentKind) -> impl Iterator<Item = &RunResult> {
        self.runs.iter().filter(move |r| r.agent == agent)
    }
}

/// Resolves the config's maze list: bundled names, paths relative to the
/// config directory (any encoding [`convert_bytes`] accepts), or the whole bundled corpus when the list is empty.
pub fn load_mazes(cfg: &ExperimentConfig) -> Result<Vec<(String, Maze)>, ExpError> {
    if cfg.maze_paths.is_empty() {
        return Ok(builtin_corpus()
            .into_iter()
            .map(|(n, m)| (n.to_string(), m))
            .collect());
    }
    cfg.maze_paths
        .iter()
        .map(|entry| {
            if let Some(m) = builtin_maze(entry) {
                return Ok((entry.clone(), m));
            }
            let path = cfg.base_dir.join(entry);
            let bytes = std::fs::read(&path).map_err(|source| ExpError::MazeIo {
                path: path.clone(),
                source,
            })?;
            let maze = convert_bytes(&bytes).map_err(|source| ExpError::MazeParse { path, source })?;
            Ok((entry.clone(), maze))
        })
        .collect()
}

struct Job<'a> {
    agent: AgentKind,
    maze_name: &'a str,
    maze: &'a Maze,
    seed: u64,
    value: Option<f64>,
    mission: MissionConfig,
}

/// Runs the full cross product of agents, sweep values, mazes and seeds on
/// `jobs` worker threads. The result does not depend on `jobs`.
pub fn run_sweep_on(
    mazes: &[(String, Maze)],
    cfg: &ExperimentConfig,
    jobs: usize,
) -> Result<SweepReport, ExpError> {
    let values: Vec<Option<f64>> = match &cfg.sweep {
        Some(s) => s.values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut work = Vec::new();
    for &agent in &cfg.agents {
        for &value in &values {
            let mut mission = cfg.mission.with_agent(agent);
            if let (Some(s), Some(v)) = (&cfg.sweep, value) {
                s.param.apply(&mut mission.net, v);
            }
            for (name, maze) in mazes {
                for &seed in &cfg.seeds {
                    work.push(Job {
                        agent,
                        maze_name: name,
                        maze,
                        seed,
                        value,
                        mission,
                    });
                }
            }
        }
    }

    let run = |job: &Job<'_>| -> Result<RunResult, ExpError> {
        let log = run_mission(job.maze, &job.mission, job.seed).map_err(|source| {
            ExpError::Mission {
                agent: job.agent,
                maze: job.maze_name.to_string(),
                seed: job.seed,
                value: job.value,
                source,
            }
        })?;
        Ok(RunResult::from_log(
            job.agent,
            job.maze_name,
            job.seed,
            job.value,
            &job.mission,
            &log,
        ))
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()?;
    let runs = pool.install(|| work.par_iter().map(run).collect::<Result<Vec<_>, _>>())?;
    Ok(SweepReport {
        sweep_param: cfg.sweep.as_ref().map(|s| s.param),
        runs,
    })
}

pub fn run_sweep(cfg: &ExperimentConfig, jobs: usize) -> Result<SweepReport, ExpError> {
    let mazes = load_mazes(cfg)?;
    run_sweep_on(&mazes, cfg, jobs)
}
