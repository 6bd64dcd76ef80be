//! Seeded generation of micromouse-style mazes.
//!
//! A spanning tree is carved with either a recursive backtracker (long
//! corridors) or randomized Prim (short branches), the 2x2 centre is opened
//! into a goal room with a single entrance, and `extra_openings` additional
//! interior walls are removed to create loops. Every cell is reachable from
//! every corner.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::maze::{Action, Cell, Maze};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CarveStyle {
    Backtracker,
    Prim,
}

#[derive(Debug, Clone, Copy)]
pub struct MazeSpec {
    pub width: usize,
    pub height: usize,
    pub style: CarveStyle,
    pub extra_openings: usize,
    pub center_room: bool,
}

impl Default for MazeSpec {
    fn default() -> Self {
        Self {
            width: 16,
            height: 16,
            style: CarveStyle::Backtracker,
            extra_openings: 12,
            center_room: true,
        }
    }
}

struct Carver {
    w: usize,
    h: usize,
    walls: Vec<u8>,
}

impl Carver {
    fn new(w: usize, h: usize) -> Self {
        Self {
            w,
            h,
            walls: vec![0b1111; w * h],
        }
    }

    fn neighbor(&self, c: Cell, a: Action) -> Option<Cell> {
        c.step(a, self.w, self.h)
    }

    fn open(&mut self, c: Cell, a: Action) {
        if let Some(n) = self.neighbor(c, a) {
            self.walls[c.row * self.w + c.col] &= !a.bit();
            self.walls[n.row * self.w + n.col] &= !a.opposite().bit();
        }
    }

    fn is_open(&self, c: Cell, a: Action) -> bool {
        self.walls[c.row * self.w + c.col] & a.bit() == 0
    }
}

pub fn generate(spec: &MazeSpec, seed: u64) -> Maze {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (spec.width.max(1), spec.height.max(1));
    let mut carver = Carver::new(w, h);
    let room = (spec.center_room && w >= 4 && h >= 4).then(|| {
        let (r0, c0) = (h / 2 - 1, w / 2 - 1);
        [
            Cell::new(r0, c0),
            Cell::new(r0, c0 + 1),
            Cell::new(r0 + 1, c0),
            Cell::new(r0 + 1, c0 + 1),
        ]
    });

    let mut in_tree = vec![false; w * h];
    let idx = |c: Cell| c.row * w + c.col;
    // the goal room is carved as one unit, attached through a single entrance
    if let Some(room) = room {
        for c in room {
            in_tree[idx(c)] = true;
        }
    }
    let start = Cell::new(h - 1, 0);
    in_tree[idx(start)] = true;
    match spec.style {
        CarveStyle::Backtracker => {
            let mut stack = vec![start];
            while let Some(&c) = stack.last() {
                let options: Vec<Action> = Action::ALL
                    .into_iter()
                    .filter(|&a| carver.neighbor(c, a).is_some_and(|n| !in_tree[idx(n)]))
                    .collect();
                match options.choose(&mut rng) {
                    Some(&a) => {
                        let n = carver.neighbor(c, a).unwrap();
                        carver.open(c, a);
                        in_tree[idx(n)] = true;
                        stack.push(n);
                    }
                    None => {
                        stack.pop();
                    }
                }
            }
        }
        CarveStyle::Prim => {
            let mut frontier: Vec<(Cell, Action)> = Vec::new();
            let push_edges = |c: Cell, frontier: &mut Vec<(Cell, Action)>, carver: &Carver| {
                for a in Action::ALL {
                    if carver.neighbor(c, a).is_some() {
                        frontier.push((c, a));
                    }
                }
            };
            push_edges(start, &mut frontier, &carver);
            while !frontier.is_empty() {
                let i = rng.gen_range(0..frontier.len());
                let (c, a) = frontier.swap_remove(i);
                let n = carver.neighbor(c, a).unwrap();
                if in_tree[idx(n)] {
                    continue;
                }
                carver.open(c, a);
                in_tree[idx(n)] = true;
                push_edges(n, &mut frontier, &carver);
            }
        }
    }

    if let Some(room) = room {
        carver.open(room[0], Action::East);
        carver.open(room[2], Action::East);
        carver.open(room[0], Action::South);
        carver.open(room[1], Action::South);
        let mut entrances: Vec<(Cell, Action)> = Vec::new();
        for c in room {
            for a in Action::ALL {
                if let Some(n) = carver.neighbor(c, a) {
                    if !room.contains(&n) {
                        entrances.push((c, a));
                    }
                }
            }
        }
        let &(c, a) = entrances.choose(&mut rng).unwrap();
        carver.open(c, a);
    }

    // extra openings, never into the goal room
    let mut closed: Vec<(Cell, Action)> = Vec::new();
    for row in 0..h {
        for col in 0..w {
            let c = Cell::new(row, col);
            for a in [Action::East, Action::South] {
                if let Some(n) = carver.neighbor(c, a) {
                    let touches_room = room.is_some_and(|r| r.contains(&c) || r.contains(&n));
                    if !carver.is_open(c, a) && !touches_room {
                        closed.push((c, a));
                    }
                }
            }
        }
    }
    closed.shuffle(&mut rng);
    for &(c, a) in closed.iter().take(spec.extra_openings) {
        carver.open(c, a);
    }

    Maze::from_walls(w, h, carver.walls).expect("carved mazes are symmetric and closed")
}
