//! Comparison agents: a cooperative depth-first explorer and a
//! visit-count-penalised greedy Q-learner.

use rand::Rng;
use thiserror::Error;

use crate::maze::{Action, ActionSet, Cell};
use crate::rl::{explore, QTable, RlError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DfsError {
    #[error("DFS stack exhausted at {0}: exploration complete")]
    StackUnderflow(Cell),
}

/// A DFS decision: step into an unvisited neighbour, or retreat along the
/// stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DfsMove {
    Advance(Action),
    Backtrack(Action),
}

impl DfsMove {
    pub fn action(self) -> Action {
        match self {
            DfsMove::Advance(a) | DfsMove::Backtrack(a) => a,
        }
    }
}

/// Depth-first explorer. Peers' explored marks land in `shared_explored` and
/// are kept for the map only; they never prune the search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DfsState {
    width: usize,
    height: usize,
    pub path_stack: Vec<Cell>,
    pub visited: Vec<bool>,
    pub shared_explored: Vec<bool>,
}

impl DfsState {
    pub fn new(width: usize, height: usize, start: Cell) -> Self {
        let mut visited = vec![false; width * height];
        visited[start.row * width + start.col] = true;
        Self {
            width,
            height,
            path_stack: vec![start],
            visited,
            shared_explored: vec![false; width * height],
        }
    }

    pub fn current(&self) -> Cell {
        *self.path_stack.last().expect("stack holds the current cell")
    }

    pub fn has_visited(&self, c: Cell) -> bool {
        self.visited[c.row * self.width + c.col]
    }

    pub fn mark_shared(&mut self, c: Cell) {
        self.shared_explored[c.row * self.width + c.col] = true;
    }

    /// Candidate moves in preference order: unvisited neighbours in
    /// canonical order, then the backtrack step if there is one.
    pub fn preferences(&self, legal: ActionSet) -> Vec<DfsMove> {
        let here = self.current();
        let mut out: Vec<DfsMove> = legal
            .iter()
            .filter(|&a| {
                here.step(a, self.width, self.height)
                    .is_some_and(|n| !self.has_visited(n))
            })
            .map(DfsMove::Advance)
            .collect();
        if let Some(&parent) = self.path_stack.iter().rev().nth(1) {
            if let Some(a) = here.direction_to(parent) {
                out.push(DfsMove::Backtrack(a));
            }
        }
        out
    }

    pub fn choose(&self, legal: ActionSet) -> Result<DfsMove, DfsError> {
        self.preferences(legal)
            .first()
            .copied()
            .ok_or_else(|| DfsError::StackUnderflow(self.current()))
    }

    /// Applies the move that actually happened. Staying in place is a no-op;
    /// stepping onto the previous stack cell pops, anything else pushes.
    pub fn commit(&mut self, to: Cell) {
        if to == self.current() {
            return;
        }
        let len = self.path_stack.len();
        if len >= 2 && self.path_stack[len - 2] == to {
            self.path_stack.pop();
        } else {
            self.path_stack.push(to);
            self.visited[to.row * self.width + to.col] = true;
        }
    }
}

/// Chooses and applies one DFS move.
pub fn dfs_step(st: &mut DfsState, legal: ActionSet) -> Result<DfsMove, DfsError> {
    let mv = st.choose(legal)?;
    let to = st
        .current()
        .step(mv.action(), st.width, st.height)
        .expect("legal moves stay in bounds");
    st.commit(to);
    Ok(mv)
}

/// Greedy Q-learner whose choice is penalised by how often the robot has
/// already entered the target cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryGreedyState {
    pub qtable: QTable,
    pub visit_memory: Vec<u32>,
    /// Probability of a uniformly random move.
    pub greedy_degree: f64,
    /// Weight of the visit-memory penalty.
    pub kappa: f64,
}

pub const DEFAULT_KAPPA: f64 = 0.1;

impl MemoryGreedyState {
    pub fn new(qtable: QTable, greedy_degree: f64, kappa: f64) -> Self {
        let n = qtable.width() * qtable.height();
        Self {
            qtable,
            visit_memory: vec![0; n],
            greedy_degree,
            kappa,
        }
    }

    fn memory(&self, c: Cell) -> u32 {
        self.visit_memory[c.row * self.qtable.width() + c.col]
    }

    pub fn record_entry(&mut self, c: Cell) {
        let w = self.qtable.width();
        self.visit_memory[c.row * w + c.col] += 1;
    }

    fn score(&self, s: Cell, a: Action) -> f64 {
        let penalty = s
            .step(a, self.qtable.width(), self.qtable.height())
            .map_or(0.0, |n| self.kappa * self.memory(n) as f64);
        self.qtable.get(s, a) - penalty
    }

    /// Legal actions by descending penalised score, ties in canonical order.
    pub fn ranked(&self, s: Cell, legal: ActionSet) -> Vec<Action> {
        let mut actions: Vec<Action> = legal.iter().collect();
        actions.sort_by(|a, b| self.score(s, *b).total_cmp(&self.score(s, *a)));
        actions
    }

    pub fn ranked_step<R: Rng + ?Sized>(
        &self,
        s: Cell,
        legal: ActionSet,
        rng: &mut R,
    ) -> Result<Vec<Action>, RlError> {
        if legal.is_empty() {
            return Err(RlError::NoLegalAction(s));
        }
        let mut ranked = self.ranked(s, legal);
        if explore(self.greedy_degree, rng) {
            let pick = legal
                .nth(rng.gen_range(0..legal.len()))
                .expect("index within legal set");
            let pos = ranked.iter().position(|a| *a == pick).expect("pick is legal");
            let chosen = ranked.remove(pos);
            ranked.insert(0, chosen);
        }
        Ok(ranked)
    }
}

pub fn memory_greedy_step<R: Rng + ?Sized>(
    st: &MemoryGreedyState,
    s: Cell,
    legal: ActionSet,
    rng: &mut R,
) -> Result<Action, RlError> {
    st.ranked_step(s, legal, rng).map(|r| r[0])
}
