//! Tabular Q-learning for a single robot: value update, reward shaping,
//! epsilon-greedy action selection, and the two table-fusion rules (peer
//! messages during a mission, and assembly of pretrained sub-maze tables).

use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::local_map::LocalMap;
use crate::maze::{Action, ActionSet, Cell, Maze, SubMaze};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RlError {
    #[error("reward distance out of domain: {0} (distances must be >= 1)")]
    Domain(f64),
    #[error("no legal action at {0}")]
    NoLegalAction(Cell),
    #[error("tables {first} and {second} both define ({cell}, {action})")]
    Overlap {
        first: usize,
        second: usize,
        cell: Cell,
        action: Action,
    },
    #[error("table {table} defines {cell}, outside its region")]
    OutsideRegion { table: usize, cell: Cell },
    #[error("{tables} tables for {regions} regions")]
    CountMismatch { tables: usize, regions: usize },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },
}

/// Learning hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RLParams {
    /// Learning rate.
    pub alpha: f64,
    /// Discount factor.
    pub gamma: f64,
    /// Exploration probability of the epsilon-greedy policy.
    pub epsilon: f64,
    /// Weight of the progress-towards-goal reward term.
    pub alpha_i: f64,
    /// Weight of the proximity reward term.
    pub beta_i: f64,
    /// Added to the reward whenever a move re-enters an already explored cell.
    pub loop_penalty: f64,
    /// Per-step cost used by the reported mission score.
    pub lambda: f64,
}

impl Default for RLParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            gamma: 0.99,
            epsilon: 0.02,
            alpha_i: 1.0,
            beta_i: 0.0,
            loop_penalty: -1.0,
            lambda: 0.01,
        }
    }
}

impl RLParams {
    pub fn validate(&self) -> Result<(), RlError> {
        let bad = |name, reason: &str| {
            Err(RlError::InvalidParam {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha", "must lie in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma", "must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon", "must lie in [0, 1]");
        }
        if !self.alpha_i.is_finite() {
            return bad("alpha_i", "must be finite");
        }
        if !self.beta_i.is_finite() {
            return bad("beta_i", "must be finite");
        }
        if !(self.loop_penalty <= 0.0 && self.loop_penalty.is_finite()) {
            return bad("loop_penalty", "must be finite and <= 0");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda", "must be finite and >= 0");
        }
        Ok(())
    }

    /// Upper bound on `|reward(..)|` for any valid inputs.
    pub fn reward_bound(&self) -> f64 {
        self.alpha_i.abs() + self.beta_i.abs() + self.loop_penalty.abs()
    }

    /// Upper bound on `|Q|` reachable from a zero-initialised table.
    pub fn value_bound(&self) -> f64 {
        self.reward_bound() / (1.0 - self.gamma)
    }
}

/// Dense Q-table over the cells of one maze. Entries never written read as
/// `0.0` and are not counted as present.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    width: usize,
    height: usize,
    values: Vec<[f64; 4]>,
    visits: Vec<[u32; 4]>,
    present: Vec<u8>,
}

impl QTable {
    pub fn new(width: usize, height: usize) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            values: vec![[0.0; 4]; n],
            visits: vec![[0; 4]; n],
            present: vec![0; n],
        }
    }

    pub fn for_maze(maze: &Maze) -> Self {
        Self::new(maze.width(), maze.height())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn idx(&self, c: Cell) -> usize {
        debug_assert!(c.row < self.height && c.col < self.width, "{c} out of bounds");
        c.row * self.width + c.col
    }

    pub fn get(&self, c: Cell, a: Action) -> f64 {
        self.values[self.idx(c)][a.index()]
    }

    pub fn row(&self, c: Cell) -> [f64; 4] {
        self.values[self.idx(c)]
    }

    pub fn visits(&self, c: Cell, a: Action) -> u32 {
        self.visits[self.idx(c)][a.index()]
    }

    pub fn has_local_experience(&self, c: Cell) -> bool {
        self.visits[self.idx(c)].iter().any(|v| *v > 0)
    }

    pub fn contains(&self, c: Cell, a: Action) -> bool {
        self.present[self.idx(c)] & a.bit() != 0
    }

    /// Writes a value without touching visit counts.
    pub fn set(&mut self, c: Cell, a: Action, v: f64) {
        let i = self.idx(c);
        self.values[i][a.index()] = v;
        self.present[i] |= a.bit();
    }

    /// Number of defined `(cell, action)` entries.
    pub fn entry_count(&self) -> usize {
        self.present.iter().map(|p| p.count_ones() as usize).sum()
    }

    /// Defined entries in row-major, canonical-action order.
    pub fn entries(&self) -> impl Iterator<Item = (Cell, Action, f64, u32)> + '_ {
        (0..self.values.len()).flat_map(move |i| {
            let cell = Cell::new(i / self.width, i % self.width);
            Action::ALL
                .into_iter()
                .filter(move |a| self.present[i] & a.bit() != 0)
                .map(move |a| (cell, a, self.values[i][a.index()], self.visits[i][a.index()]))
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Highest value among `legal` at `c`; `0.0` if `legal` is empty.
    pub fn max_over(&self, c: Cell, legal: ActionSet) -> f64 {
        let row = self.row(c);
        legal
            .iter()
            .map(|a| row[a.index()])
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
            .unwrap_or(0.0)
    }

    /// One temporal-difference step:
    /// `Q(s,a) <- (1-alpha) Q(s,a) + alpha (r + gamma max_{a' in next_legal} Q(s',a'))`.
    pub fn q_update(
        &mut self,
        s: Cell,
        a: Action,
        r: f64,
        s_next: Cell,
        next_legal: ActionSet,
        p: &RLParams,
    ) {
        let target = r + p.gamma * self.max_over(s_next, next_legal);
        let i = self.idx(s);
        let old = self.values[i][a.index()];
        self.values[i][a.index()] = (1.0 - p.alpha) * old + p.alpha * target;
        self.present[i] |= a.bit();
        self.visits[i][a.index()] += 1;
    }

    /// Fuses a peer's per-direction values for `s`. The values are adopted
    /// only while this robot has no experience of its own at `s`.
    /// Returns whether the table changed.
    pub fn merge_remote(&mut self, s: Cell, qvals: [f64; 4]) -> bool {
        if self.has_local_experience(s) {
            return false;
        }
        let i = self.idx(s);
        let changed = self.values[i] != qvals || self.present[i] != 0b1111;
        self.values[i] = qvals;
        self.present[i] = 0b1111;
        changed
    }

    /// Legal actions ordered best first; ties keep canonical order.
    pub fn ranked(&self, s: Cell, legal: ActionSet) -> Vec<Action> {
        let row = self.row(s);
        let mut actions: Vec<Action> = legal.iter().collect();
        // stable sort keeps N, E, S, W among equal values
        actions.sort_by(|a, b| row[b.index()].total_cmp(&row[a.index()]));
        actions
    }

    /// CSV snapshot: `row,col,action,value,visits`, one line per defined entry.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,action,value,visits\n");
        for (c, a, v, n) in self.entries() {
            let _ = writeln!(out, "{},{},{},{},{}", c.row, c.col, a.letter(), v, n);
        }
        out
    }
}

/// Inputs to the per-robot reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardInputs {
    /// Goal distance before the move, in cells.
    pub d_prev: f64,
    /// Goal distance after the move, in cells.
    pub d_curr: f64,
    /// The move re-entered an already explored cell.
    pub looped: bool,
}

/// `alpha_i (1/d_curr - 1/d_prev) + beta_i (1 - 1/d_curr)`, plus the loop
/// penalty when the move looped back.
pub fn reward(input: &RewardInputs, p: &RLParams) -> Result<f64, RlError> {
    for d in [input.d_prev, input.d_curr] {
        if !(d >= 1.0) {
            return Err(RlError::Domain(d));
        }
    }
    let progress = p.alpha_i * (1.0 / input.d_curr - 1.0 / input.d_prev);
    let proximity = p.beta_i * (1.0 - 1.0 / input.d_curr);
    let penalty = if input.looped { p.loop_penalty } else { 0.0 };
    Ok(progress + proximity + penalty)
}

/// Distance from `pos` to the nearest frontier of `map`, clamped to at least
/// one; one when no frontier is reachable.
pub fn goal_distance(map: &LocalMap, pos: Cell) -> f64 {
    map.frontier_distance(pos).map_or(1.0, |d| d.max(1) as f64)
}

/// Epsilon-greedy choice over `legal`. Greedy ties resolve in N, E, S, W order.
pub fn select_action<R: Rng + ?Sized>(
    q: &QTable,
    s: Cell,
    legal: ActionSet,
    p: &RLParams,
    rng: &mut R,
) -> Result<Action, RlError> {
    select_ranked(q, s, legal, p, rng).map(|ranked| ranked[0])
}

/// Like [`select_action`] but returns the full preference order: the chosen
/// action first, then the remaining legal actions best first.
pub fn select_ranked<R: Rng + ?Sized>(
    q: &QTable,
    s: Cell,
    legal: ActionSet,
    p: &RLParams,
    rng: &mut R,
) -> Result<Vec<Action>, RlError> {
    if legal.is_empty() {
        return Err(RlError::NoLegalAction(s));
    }
    let mut ranked = q.ranked(s, legal);
    if explore(p.epsilon, rng) {
        let pick = legal
            .nth(rng.gen_range(0..legal.len()))
            .expect("index within legal set");
        let pos = ranked.iter().position(|a| *a == pick).expect("pick is legal");
        let chosen = ranked.remove(pos);
        ranked.insert(0, chosen);
    }
    Ok(ranked)
}

/// One Bernoulli draw with success probability `epsilon`.
pub(crate) fn explore<R: Rng + ?Sized>(epsilon: f64, rng: &mut R) -> bool {
    rng.gen::<f64>() < epsilon
}

/// Assembles the target-maze table from per-region tables. Visit counts are
/// reset: pretrained values are prior knowledge, not local experience.
pub fn build_qcop(tables: &[QTable], regions: &[SubMaze<'_>]) -> Result<QTable, RlError> {
    if tables.len() != regions.len() {
        return Err(RlError::CountMismatch {
            tables: tables.len(),
            regions: regions.len(),
        });
    }
    let Some(first) = tables.first() else {
        return Ok(QTable::new(0, 0));
    };
    let mut out = QTable::new(first.width, first.height);
    let mut owner: Vec<[Option<usize>; 4]> = vec![[None; 4]; first.width * first.height];
    for (t, (table, region)) in tables.iter().zip(regions).enumerate() {
        for (cell, action, value, _) in table.entries() {
            if !region.region.contains(cell) {
                return Err(RlError::OutsideRegion { table: t, cell });
            }
            let slot = &mut owner[out.idx(cell)][action.index()];
            if let Some(first) = *slot {
                return Err(RlError::Overlap {
                    first,
                    second: t,
                    cell,
                    action,
                });
            }
            *slot = Some(t);
            out.set(cell, action, value);
        }
    }
    Ok(out)
}

/// Learns a table for one region with a single robot. Each episode starts at
/// the region's corner with an empty map and ends once every cell reachable
/// inside the region has been visited, or after `10 x region size` steps.
pub fn pretrain_submaze<R: Rng + ?Sized>(
    sub: &SubMaze<'_>,
    p: &RLParams,
    episodes: usize,
    rng: &mut R,
) -> QTable {
    let maze = sub.parent;
    let mut q = QTable::for_maze(maze);
    let start = sub.start();
    let target = sub.reachable_cells().len();
    if target <= 1 {
        return q;
    }
    let step_cap = 10 * sub.region.len();
    let passable = |c: Cell, a: Action| sub.passable(c, a);
    for _ in 0..episodes {
        let mut map = LocalMap::for_maze(maze);
        let mut visited = vec![false; maze.cell_count()];
        let mut pos = start;
        visited[maze.index(pos)] = true;
        map.mark_explored(pos);
        let mut count = 1;
        let mut steps = 0;
        while count < target && steps < step_cap {
            map.sense_with(pos, passable);
            let legal = sub.legal_actions(pos);
            let a = select_action(&q, pos, legal, p, rng).expect("region has moves");
            let next = maze.neighbor(pos, a).expect("legal move stays in bounds");
            let d_prev = goal_distance(&map, pos);
            let ni = maze.index(next);
            let looped = visited[ni];
            if !looped {
                visited[ni] = true;
                count += 1;
            }
            map.sense_with(next, passable);
            map.mark_explored(next);
            let d_curr = goal_distance(&map, next);
            let r = reward(
                &RewardInputs {
                    d_prev,
                    d_curr,
                    looped,
                },
                p,
            )
            .expect("goal distances are clamped");
            q.q_update(pos, a, r, next, sub.legal_actions(next), p);
            pos = next;
            steps += 1;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(r: usize, col: usize) -> Cell {
        Cell::new(r, col)
    }

    #[test]
    fn update_collapses_to_reward() {
        let mut q = QTable::new(2, 2);
        let p = RLParams {
            alpha: 1.0,
            gamma: 0.0,
            ..RLParams::default()
        };
        q.q_update(c(0, 0), Action::East, 5.0, c(0, 1), ActionSet::FULL, &p);
        assert_eq!(q.get(c(0, 0), Action::East), 5.0);
        assert_eq!(q.visits(c(0, 0), Action::East), 1);
        assert_eq!(q.visits(c(0, 0), Action::North), 0);
    }

    #[test]
    fn update_half_step() {
        let mut q = QTable::new(2, 2);
        let p = RLParams {
            alpha: 0.5,
            gamma: 0.9,
            ..RLParams::default()
        };
        q.q_update(c(0, 0), Action::East, 1.0, c(0, 1), ActionSet::FULL, &p);
        // (1 - 0.5) * 0 + 0.5 * (1 + 0.9 * 0)
        assert_eq!(q.get(c(0, 0), Action::East), 0.5);
    }

    #[test]
    fn zero_alpha_leaves_values() {
        let mut q = QTable::new(2, 2);
        q.set(c(0, 0), Action::East, 2.0);
        let p = RLParams {
            alpha: 0.0,
            ..RLParams::default()
        };
        let before = q.row(c(0, 0));
        q.q_update(c(0, 0), Action::East, 7.0, c(0, 1), ActionSet::FULL, &p);
        assert_eq!(q.row(c(0, 0)), before);
        assert!(p.validate().is_err());
    }

    #[test]
    fn reward_values() {
        let p = RLParams::default();
        let r = |d_prev, d_curr, looped, p: &RLParams| {
            reward(
                &RewardInputs {
                    d_prev,
                    d_curr,
                    looped,
                },
                p,
            )
            .unwrap()
        };
        assert_eq!(r(1.0, 1.0, false, &p), 0.0);
        let p1 = RLParams {
            alpha_i: 1.0,
            beta_i: 0.0,
            ..p
        };
        assert_eq!(r(2.0, 1.0, false, &p1), 0.5);
        let p2 = RLParams {
            alpha_i: 1.0,
            beta_i: 0.5,
            loop_penalty: -1.0,
            ..p
        };
        assert_eq!(r(1.0, 2.0, true, &p2), -1.25);
        assert!(matches!(
            reward(
                &RewardInputs {
                    d_prev: 0.5,
                    d_curr: 1.0,
                    looped: false
                },
                &p
            ),
            Err(RlError::Domain(_))
        ));
    }

    #[test]
    fn goal_distance_conventions() {
        let maze = Maze::open(3, 3);
        let mut map = LocalMap::for_maze(&maze);
        map.sense(&maze, c(0, 0));
        assert_eq!(goal_distance(&map, c(0, 1)), 1.0);
        assert_eq!(goal_distance(&map, c(0, 0)), 1.0);
        for cell in maze.cells() {
            map.sense(&maze, cell);
        }
        assert_eq!(goal_distance(&map, c(2, 2)), 1.0);
    }

    #[test]
    fn greedy_and_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = RLParams {
            epsilon: 0.0,
            ..RLParams::default()
        };
        let mut q = QTable::new(3, 3);
        q.set(c(1, 1), Action::North, 1.0);
        assert_eq!(
            select_action(&q, c(1, 1), ActionSet::FULL, &p, &mut rng).unwrap(),
            Action::North
        );
        let legal = ActionSet::from_actions(&[Action::South, Action::East]);
        assert_eq!(
            select_action(&QTable::new(3, 3), c(1, 1), legal, &p, &mut rng).unwrap(),
            Action::East
        );
        assert_eq!(
            select_action(&q, c(1, 1), ActionSet::EMPTY, &p, &mut rng),
            Err(RlError::NoLegalAction(c(1, 1)))
        );
    }

    #[test]
    fn merge_rules() {
        let mut q = QTable::new(3, 3);
        assert!(q.merge_remote(c(1, 1), [1.0, 2.0, 3.0, 4.0]));
        assert_eq!(q.row(c(1, 1)), [1.0, 2.0, 3.0, 4.0]);
        assert!(!q.merge_remote(c(1, 1), [1.0, 2.0, 3.0, 4.0]));

        let p = RLParams::default();
        for _ in 0..3 {
            q.q_update(c(0, 0), Action::North, -1.0, c(0, 0), ActionSet::EMPTY, &p);
        }
        assert_eq!(q.visits(c(0, 0), Action::North), 3);
        let before = q.clone();
        assert!(!q.merge_remote(c(0, 0), [9.0; 4]));
        assert_eq!(q, before);
    }

    #[test]
    fn qcop_union_and_overlap() {
        let maze = Maze::open(4, 2);
        let halves = maze.decompose(2).unwrap();
        let mut left = QTable::for_maze(&maze);
        left.q_update(c(0, 0), Action::East, 1.0, c(0, 1), ActionSet::FULL, &RLParams::default());
        let mut right = QTable::for_maze(&maze);
        right.set(c(1, 3), Action::West, -2.0);
        let cop = build_qcop(&[left.clone(), right.clone()], &halves).unwrap();
        assert_eq!(cop.entry_count(), 2);
        assert_eq!(cop.get(c(0, 0), Action::East), 0.5);
        assert_eq!(cop.get(c(1, 3), Action::West), -2.0);
        assert_eq!(cop.visits(c(0, 0), Action::East), 0);

        let whole = maze.decompose(1).unwrap();
        let single = build_qcop(std::slice::from_ref(&left), &whole).unwrap();
        assert_eq!(single.entries().map(|e| (e.0, e.1, e.2)).collect::<Vec<_>>(),
                   left.entries().map(|e| (e.0, e.1, e.2)).collect::<Vec<_>>());
        assert!(!single.has_local_experience(c(0, 0)));

        let err = build_qcop(&[right.clone(), right], &halves).unwrap_err();
        assert!(matches!(err, RlError::OutsideRegion { table: 0, .. }));
        let mut dup = QTable::for_maze(&maze);
        dup.set(c(0, 0), Action::East, 3.0);
        let err = build_qcop(&[left, dup], &[halves[0], halves[0]]).unwrap_err();
        assert!(matches!(err, RlError::Overlap { first: 0, second: 1, .. }));
    }

    #[test]
    fn pretrain_single_cell_region() {
        let maze = Maze::open(2, 2);
        let subs = maze.decompose(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = pretrain_submaze(&subs[0], &RLParams::default(), 10, &mut rng);
        assert_eq!(q.entry_count(), 0);
        assert_eq!(q.max_abs(), 0.0);
    }

    #[test]
    fn csv_export() {
        let mut q = QTable::new(2, 1);
        q.set(c(0, 1), Action::West, -0.5);
        assert_eq!(q.to_csv(), "row,col,action,value,visits\n0,1,W,-0.5,0\n");
    }
}
