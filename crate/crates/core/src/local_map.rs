//! A robot's partial knowledge of the maze.

use std::collections::VecDeque;

use crate::maze::{Action, ActionSet, Cell, Maze};

/// Per-cell knowledge: whether the cell is known to exist, which of its walls
/// have been observed, and whether it has been explored (visited by this
/// robot or reported explored by a peer).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalMap {
    width: usize,
    height: usize,
    known: Vec<bool>,
    explored: Vec<bool>,
    /// Bits of sides whose wall state has been observed.
    observed: Vec<u8>,
    /// Wall bits, meaningful only where `observed` is set.
    walls: Vec<u8>,
}

impl LocalMap {
    pub fn new(width: usize, height: usize) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            known: vec![false; n],
            explored: vec![false; n],
            observed: vec![0; n],
            walls: vec![0; n],
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
        c.row * self.width + c.col
    }

    fn neighbor(&self, c: Cell, a: Action) -> Option<Cell> {
        c.step(a, self.width, self.height)
    }

    pub fn is_known(&self, c: Cell) -> bool {
        self.known[self.idx(c)]
    }

    pub fn is_explored(&self, c: Cell) -> bool {
        self.explored[self.idx(c)]
    }

    pub fn known_count(&self) -> usize {
        self.known.iter().filter(|k| **k).count()
    }

    /// Observed wall state of one side, `None` if not yet seen.
    pub fn wall(&self, c: Cell, a: Action) -> Option<bool> {
        let i = self.idx(c);
        (self.observed[i] & a.bit() != 0).then(|| self.walls[i] & a.bit() != 0)
    }

    /// Known to be open in `a` and leading to an in-bounds cell.
    pub fn known_passable(&self, c: Cell, a: Action) -> bool {
        self.wall(c, a) == Some(false) && self.neighbor(c, a).is_some()
    }

    /// Records the true wall state of one side of `c` (and its mirror).
    pub fn observe_side(&mut self, c: Cell, a: Action, walled: bool) {
        let i = self.idx(c);
        self.observed[i] |= a.bit();
        if walled {
            self.walls[i] |= a.bit();
        } else {
            self.walls[i] &= !a.bit();
        }
        if let Some(n) = self.neighbor(c, a) {
            let ni = self.idx(n);
            let b = a.opposite().bit();
            self.observed[ni] |= b;
            if walled {
                self.walls[ni] |= b;
            } else {
                self.walls[ni] &= !b;
            }
        }
    }

    /// Senses the cell at `c`: all four walls become known, and every
    /// neighbour reachable through an open side becomes a known cell.
    /// `passable` supplies the ground truth (the maze, or a sub-maze whose
    /// boundary counts as walls).
    pub fn sense_with(&mut self, c: Cell, passable: impl Fn(Cell, Action) -> bool) {
        let i = self.idx(c);
        self.known[i] = true;
        for a in Action::ALL {
            let open = passable(c, a);
            self.observe_side(c, a, !open);
            if open {
                if let Some(n) = self.neighbor(c, a) {
                    let ni = self.idx(n);
                    self.known[ni] = true;
                }
            }
        }
    }

    pub fn sense(&mut self, maze: &Maze, c: Cell) {
        self.sense_with(c, |cell, a| maze.passable(cell, a));
    }

    /// Marks a cell explored (and known).
    pub fn mark_explored(&mut self, c: Cell) {
        let i = self.idx(c);
        self.known[i] = true;
        self.explored[i] = true;
    }

    /// A known, unexplored cell with at least one side that is not known to
    /// be walled and leads to an unknown cell.
    pub fn is_frontier(&self, c: Cell) -> bool {
        if !self.is_known(c) || self.is_explored(c) {
            return false;
        }
        Action::ALL.into_iter().any(|a| match self.neighbor(c, a) {
            Some(n) => !self.is_known(n) && self.wall(c, a) != Some(true),
            None => false,
        })
    }

    /// Breadth-first step distance from `pos` through known-passable sides to
    /// the nearest frontier cell. `None` when no frontier is reachable.
    pub fn frontier_distance(&self, pos: Cell) -> Option<usize> {
        let mut dist = vec![usize::MAX; self.known.len()];
        let mut queue = VecDeque::from([pos]);
        dist[self.idx(pos)] = 0;
        while let Some(c) = queue.pop_front() {
            let d = dist[self.idx(c)];
            if self.is_frontier(c) {
                return Some(d);
            }
            for a in Action::ALL {
                if self.known_passable(c, a) {
                    let n = self.neighbor(c, a).expect("known passable has neighbour");
                    let ni = self.idx(n);
                    if dist[ni] == usize::MAX {
                        dist[ni] = d + 1;
                        queue.push_back(n);
                    }
                }
            }
        }
        None
    }

    pub fn known_legal(&self, c: Cell) -> ActionSet {
        Action::ALL
            .into_iter()
            .filter(|&a| self.known_passable(c, a))
            .collect()
    }

    /// Observed wall masks restricted to fully observed cells.
    pub fn observed_walls(&self) -> impl Iterator<Item = (Cell, u8, u8)> + '_ {
        (0..self.known.len()).map(move |i| {
            (
                Cell::new(i / self.width, i % self.width),
                self.observed[i],
                self.walls[i] & self.observed[i],
            )
        })
    }
}
