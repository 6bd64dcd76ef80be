//! Synchronous world loop.
//!
//! A mission has two phases. Proposed-agent missions first pretrain one
//! table per sub-maze (one sub-maze per robot) and install the assembled
//! table into every robot. The second phase is a single continuous episode
//! of ticks. Within a tick the phase order is fixed:
//!
//! 1. every robot senses its cell;
//! 2. every robot broadcasts its position and the Q-values there;
//! 3. receivers fuse delivered messages into their tables and maps;
//! 4. every robot ranks its legal moves;
//! 5. conflicting moves are resolved;
//! 6. robots move;
//! 7. learning robots compute their reward and update;
//! 8. a metrics row is appended.

mod collision;
mod metrics;

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::baselines::{DfsState, MemoryGreedyState, DEFAULT_KAPPA};
use crate::local_map::LocalMap;
use crate::maze::{Action, Cell, Maze, MazeError};
use crate::net::{broadcast_round, NetConfig, NetMessage, NetStats};
use crate::rl::{
    build_qcop, goal_distance, pretrain_submaze, reward, select_ranked, QTable, RLParams,
    RewardInputs, RlError,
};

pub use collision::{resolve_collisions, Intent, Resolution};
pub use metrics::{MetricsLog, MetricsRow, Termination, METRICS_CSV_HEADER};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("robot {robot}: {source}")]
    Agent {
        robot: usize,
        #[source]
        source: RlError,
    },
    #[error("robot {robot} tried to move from {from} to {to} through a wall")]
    IllegalMove { robot: usize, from: Cell, to: Cell },
    #[error("invalid mission setup: {0}")]
    Setup(String),
    #[error(transparent)]
    Maze(#[from] MazeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentKind {
    Proposed,
    Dfs,
    MemoryGreedy,
}

impl AgentKind {
    pub const ALL: [AgentKind; 3] = [AgentKind::Proposed, AgentKind::Dfs, AgentKind::MemoryGreedy];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Proposed => "proposed",
            AgentKind::Dfs => "dfs",
            AgentKind::MemoryGreedy => "memory_greedy",
        }
    }
}

impl std::fmt::Display for AgentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "proposed" => Ok(AgentKind::Proposed),
            "dfs" => Ok(AgentKind::Dfs),
            "memory_greedy" => Ok(AgentKind::MemoryGreedy),
            other => Err(format!(
                "unknown agent kind {other:?} (expected proposed, dfs or memory_greedy)"
            )),
        }
    }
}

/// Everything that parameterises one mission apart from the maze and seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissionConfig {
    pub agent: AgentKind,
    pub robots: usize,
    pub net: NetConfig,
    pub rl: RLParams,
    pub max_ticks: u64,
    /// Episodes of sub-maze pretraining per robot (proposed agent only).
    pub pretrain_episodes: usize,
    /// Install the assembled pretrained table; off starts from zeros.
    pub pretrain: bool,
    /// Off disables the network entirely (no trials, no messages).
    pub messaging: bool,
    /// Random-move probability of the memory-greedy baseline.
    pub greedy_degree: f64,
    /// Visit-memory penalty weight of the memory-greedy baseline.
    pub memory_kappa: f64,
    /// The mission ends once coverage reaches this percentage.
    pub coverage_target_pct: f64,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            agent: AgentKind::Proposed,
            robots: 4,
            net: NetConfig::default(),
            rl: RLParams::default(),
            max_ticks: 2000,
            pretrain_episodes: 1,
            pretrain: true,
            messaging: true,
            greedy_degree: 0.1,
            memory_kappa: DEFAULT_KAPPA,
            coverage_target_pct: 99.0,
        }
    }
}

impl MissionConfig {
    pub fn with_agent(self, agent: AgentKind) -> Self {
        Self { agent, ..self }
    }
}

#[derive(Debug, Clone)]
pub enum Brain {
    Proposed(QTable),
    Dfs(DfsState),
    MemoryGreedy(MemoryGreedyState),
}

#[derive(Debug, Clone)]
pub struct RobotState {
    pub id: usize,
    pub pos: Cell,
    /// Cells this robot has physically occupied.
    pub visited: Vec<bool>,
    /// Cells reported explored by peers.
    pub peer_explored: Vec<bool>,
    pub local_map: LocalMap,
    pub brain: Brain,
    rng: ChaCha8Rng,
}

impl RobotState {
    pub fn qtable(&self) -> Option<&QTable> {
        match &self.brain {
            Brain::Proposed(q) => Some(q),
            Brain::MemoryGreedy(st) => Some(&st.qtable),
            Brain::Dfs(_) => None,
        }
    }

    fn qtable_mut(&mut self) -> Option<&mut QTable> {
        match &mut self.brain {
            Brain::Proposed(q) => Some(q),
            Brain::MemoryGreedy(st) => Some(&mut st.qtable),
            Brain::Dfs(_) => None,
        }
    }

    pub fn has_visited(&self, c: Cell) -> bool {
        self.visited[c.row * self.local_map.width() + c.col]
    }

    pub fn visited_count(&self) -> usize {
        self.visited.iter().filter(|v| **v).count()
    }

    fn message(&self, tick: u64) -> NetMessage {
        NetMessage {
            sender_id: self.id as u32,
            tick,
            pos: self.pos,
            qvals: self.qtable().map_or([0.0; 4], |q| q.row(self.pos)),
        }
    }
}

/// The full simulation state of one mission.
#[derive(Debug, Clone)]
pub struct WorldState {
    pub maze: Maze,
    pub cfg: MissionConfig,
    pub robots: Vec<RobotState>,
    pub tick: u64,
    /// Union of every robot's explored marks (equivalently, of visited cells).
    pub global_explored: Vec<bool>,
    /// Bit `i` set when robot `i` has occupied the cell.
    pub visitors: Vec<u8>,
    /// Cells reachable from at least one start corner.
    pub reachable: Vec<bool>,
    reachable_count: usize,
    initial_explored: usize,
    total_moves: u64,
    net_rng: ChaCha8Rng,
    pub net_stats: NetStats,
    pub log: MetricsLog,
}

impl WorldState {
    /// Places the robots on their corners and, for the proposed agent with
    /// pretraining enabled, runs sub-maze pretraining first.
    pub fn new(maze: &Maze, cfg: MissionConfig, seed: u64) -> Result<Self, SimError> {
        if !matches!(cfg.robots, 1 | 2 | 4) {
            return Err(SimError::Setup(format!(
                "robots must be 1, 2 or 4, got {}",
                cfg.robots
            )));
        }
        if cfg.max_ticks < 1 {
            return Err(SimError::Setup("max_ticks must be >= 1".into()));
        }
        cfg.rl
            .validate()
            .map_err(|e| SimError::Setup(e.to_string()))?;
        cfg.net
            .validate()
            .map_err(|e| SimError::Setup(e.to_string()))?;
        let starts: Vec<Cell> = (0..cfg.robots).map(|i| maze.corner(i)).collect();
        for i in 0..starts.len() {
            if starts[..i].contains(&starts[i]) {
                return Err(SimError::Setup(format!(
                    "{}x{} maze has too few corners for {} robots",
                    maze.width(),
                    maze.height(),
                    cfg.robots
                )));
            }
        }

        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let robot_seeds: Vec<u64> = (0..cfg.robots).map(|_| master.gen()).collect();
        let net_seed: u64 = master.gen();
        let pretrain_seeds: Vec<u64> = (0..cfg.robots).map(|_| master.gen()).collect();

        let initial_table = if cfg.agent == AgentKind::Proposed && cfg.pretrain {
            let regions = maze.decompose(cfg.robots)?;
            let tables: Vec<QTable> = regions
                .iter()
                .zip(&pretrain_seeds)
                .map(|(sub, &s)| {
                    let mut rng = ChaCha8Rng::seed_from_u64(s);
                    pretrain_submaze(sub, &cfg.rl, cfg.pretrain_episodes, &mut rng)
                })
                .collect();
            build_qcop(&tables, &regions).map_err(|e| SimError::Setup(e.to_string()))?
        } else {
            QTable::for_maze(maze)
        };

        let n = maze.cell_count();
        let mut reachable = vec![false; n];
        for &s in &starts {
            for (r, m) in reachable.iter_mut().zip(maze.reachable_mask(s)) {
                *r |= m;
            }
        }
        let reachable_count = reachable.iter().filter(|r| **r).count();

        let mut world = WorldState {
            maze: maze.clone(),
            cfg,
            robots: Vec::with_capacity(cfg.robots),
            tick: 0,
            global_explored: vec![false; n],
            visitors: vec![0; n],
            reachable,
            reachable_count,
            initial_explored: 0,
            total_moves: 0,
            net_rng: ChaCha8Rng::seed_from_u64(net_seed),
            net_stats: NetStats::default(),
            log: MetricsLog::new(),
        };
        for (id, (&start, &s)) in starts.iter().zip(&robot_seeds).enumerate() {
            let brain = match cfg.agent {
                AgentKind::Proposed => Brain::Proposed(initial_table.clone()),
                AgentKind::Dfs => Brain::Dfs(DfsState::new(maze.width(), maze.height(), start)),
                AgentKind::MemoryGreedy => Brain::MemoryGreedy(MemoryGreedyState::new(
                    QTable::for_maze(maze),
                    cfg.greedy_degree,
                    cfg.memory_kappa,
                )),
            };
            let mut robot = RobotState {
                id,
                pos: start,
                visited: vec![false; n],
                peer_explored: vec![false; n],
                local_map: LocalMap::for_maze(maze),
                brain,
                rng: ChaCha8Rng::seed_from_u64(s),
            };
            robot.visited[maze.index(start)] = true;
            robot.local_map.sense(maze, start);
            robot.local_map.mark_explored(start);
            if let Brain::MemoryGreedy(st) = &mut robot.brain {
                st.record_entry(start);
            }
            world.global_explored[maze.index(start)] = true;
            world.visitors[maze.index(start)] |= 1 << id;
            world.robots.push(robot);
        }
        world.initial_explored = world.explored_count();
        let row = world.metrics_row(0);
        world.log.rows.push(row);
        Ok(world)
    }

    pub fn reachable_count(&self) -> usize {
        self.reachable_count
    }

    pub fn explored_count(&self) -> usize {
        self.global_explored.iter().filter(|e| **e).count()
    }

    pub fn coverage_pct(&self) -> f64 {
        100.0 * self.explored_count() as f64 / self.reachable_count as f64
    }

    /// Cells occupied by at least two distinct robots, over explored cells.
    pub fn overlap_pct(&self) -> f64 {
        let shared = self.visitors.iter().filter(|v| v.count_ones() >= 2).count();
        100.0 * shared as f64 / self.explored_count().max(1) as f64
    }

    pub fn positions(&self) -> Vec<Cell> {
        self.robots.iter().map(|r| r.pos).collect()
    }

    pub fn is_done(&self) -> bool {
        self.log.termination != Termination::Running
    }

    fn metrics_row(&self, collisions: u64) -> MetricsRow {
        let explored = self.explored_count();
        let newly = explored.saturating_sub(self.initial_explored).max(1);
        let steps_per_cell = self.total_moves as f64 / newly as f64;
        let coverage_pct = self.coverage_pct();
        MetricsRow {
            tick: self.tick,
            coverage_pct,
            overlap_pct: self.overlap_pct(),
            collisions,
            net: self.net_stats.total,
            score: coverage_pct / 100.0 - self.cfg.rl.lambda * steps_per_cell,
        }
    }

    /// Advances one synchronous tick and returns the appended metrics row.
    pub fn tick(&mut self) -> Result<MetricsRow, SimError> {
        let maze = &self.maze;
        let rl = self.cfg.rl;

        // (1) sense
        for r in &mut self.robots {
            r.local_map.sense(maze, r.pos);
        }

        // (2) broadcast, (3) fuse
        if self.cfg.messaging {
            let positions: Vec<Cell> = self.robots.iter().map(|r| r.pos).collect();
            let outgoing: Vec<NetMessage> =
                self.robots.iter().map(|r| r.message(self.tick)).collect();
            let inboxes = broadcast_round(
                &positions,
                &outgoing,
                &self.cfg.net,
                maze.cell_pitch_px,
                &mut self.net_rng,
                &mut self.net_stats,
            );
            for (r, inbox) in self.robots.iter_mut().zip(inboxes) {
                for m in inbox {
                    match &mut r.brain {
                        Brain::Dfs(st) => st.mark_shared(m.pos),
                        _ => {
                            if let Some(q) = r.qtable_mut() {
                                q.merge_remote(m.pos, m.qvals);
                            }
                        }
                    }
                    let i = maze.index(m.pos);
                    r.peer_explored[i] = true;
                    r.local_map.mark_explored(m.pos);
                }
            }
        }

        // (4) rank moves
        let mut intents = Vec::with_capacity(self.robots.len());
        let mut ranked_actions: Vec<Vec<Action>> = Vec::with_capacity(self.robots.len());
        let mut d_prev = Vec::with_capacity(self.robots.len());
        for r in &mut self.robots {
            let legal = maze.legal_actions(r.pos);
            if legal.is_empty() && maze.cell_count() > 1 {
                return Err(SimError::Agent {
                    robot: r.id,
                    source: RlError::NoLegalAction(r.pos),
                });
            }
            d_prev.push(goal_distance(&r.local_map, r.pos));
            let actions: Vec<Action> = if legal.is_empty() {
                Vec::new()
            } else {
                match &r.brain {
                    Brain::Proposed(q) => select_ranked(q, r.pos, legal, &rl, &mut r.rng)
                        .map_err(|source| SimError::Agent { robot: r.id, source })?,
                    Brain::MemoryGreedy(st) => st
                        .ranked_step(r.pos, legal, &mut r.rng)
                        .map_err(|source| SimError::Agent { robot: r.id, source })?,
                    Brain::Dfs(st) => st.preferences(legal).iter().map(|m| m.action()).collect(),
                }
            };
            intents.push(Intent {
                pos: r.pos,
                prefs: actions
                    .iter()
                    .map(|&a| maze.neighbor(r.pos, a).expect("legal move stays in bounds"))
                    .collect(),
            });
            ranked_actions.push(actions);
        }

        // (5) repel
        let resolution = resolve_collisions(&intents);

        // (6) move, (7) learn
        for (i, r) in self.robots.iter_mut().enumerate() {
            let Some(k) = resolution.chosen[i] else {
                continue;
            };
            let from = r.pos;
            let to = resolution.targets[i];
            let action = ranked_actions[i][k];
            if !maze.passable(from, action) || maze.neighbor(from, action) != Some(to) {
                return Err(SimError::IllegalMove { robot: r.id, from, to });
            }
            let ti = maze.index(to);
            let looped = match r.brain {
                Brain::Proposed(_) => r.visited[ti] || r.peer_explored[ti],
                _ => r.visited[ti],
            };
            r.pos = to;
            r.visited[ti] = true;
            self.visitors[ti] |= 1 << r.id;
            self.global_explored[ti] = true;
            self.total_moves += 1;
            r.local_map.sense(maze, to);
            r.local_map.mark_explored(to);
            match &mut r.brain {
                Brain::Dfs(st) => st.commit(to),
                Brain::MemoryGreedy(st) => st.record_entry(to),
                Brain::Proposed(_) => {}
            }
            if r.qtable().is_some() {
                let d_curr = goal_distance(&r.local_map, to);
                let rew = reward(
                    &RewardInputs {
                        d_prev: d_prev[i],
                        d_curr,
                        looped,
                    },
                    &rl,
                )
                .map_err(|source| SimError::Agent { robot: r.id, source })?;
                let next_legal = maze.legal_actions(to);
                if let Some(q) = r.qtable_mut() {
                    q.q_update(from, action, rew, to, next_legal, &rl);
                }
            }
        }

        // (8) metrics
        self.tick += 1;
        let row = self.metrics_row(resolution.collisions as u64);
        self.log.rows.push(row);
        Ok(row)
    }

    /// Ticks until coverage reaches the target or `max_ticks` elapse.
    pub fn run(&mut self) -> Result<(), SimError> {
        loop {
            if self.coverage_pct() >= self.cfg.coverage_target_pct {
                self.log.termination = Termination::CoverageReached;
                return Ok(());
            }
            if self.tick >= self.cfg.max_ticks {
                self.log.termination = Termination::MaxTicks;
                return Ok(());
            }
            self.tick()?;
        }
    }
}

/// Builds a world, runs it to termination and returns its metrics.
pub fn run_mission(maze: &Maze, cfg: &MissionConfig, seed: u64) -> Result<MetricsLog, SimError> {
    let mut world = WorldState::new(maze, *cfg, seed)?;
    world.run()?;
    Ok(world.log)
}
