//! Rectangular cell mazes: the ASCII wall-grid format, passability,
//! reachability and rectangular sub-maze decomposition.
//!
//! The text format is `(2H+1)` lines of `(2W+1)` characters. Even lines hold
//! posts (`+`) and horizontal wall segments (`-` or space); odd lines hold
//! vertical wall segments (`|` or space) and cell interiors (always space).
//! Every line, including the last, is terminated by `\n`.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

/// Pixels between neighbouring cell centres.
pub const DEFAULT_CELL_PITCH_PX: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// Grid neighbour in a `width` x `height` grid, ignoring walls.
    pub fn step(self, dir: Action, width: usize, height: usize) -> Option<Cell> {
        let n = match dir {
            Action::North => Cell::new(self.row.checked_sub(1)?, self.col),
            Action::South => Cell::new(self.row + 1, self.col),
            Action::West => Cell::new(self.row, self.col.checked_sub(1)?),
            Action::East => Cell::new(self.row, self.col + 1),
        };
        (n.row < height && n.col < width).then_some(n)
    }

    /// The action leading from `self` to an adjacent `other`.
    pub fn direction_to(self, other: Cell) -> Option<Action> {
        match (other.row as isize - self.row as isize, other.col as isize - self.col as isize) {
            (-1, 0) => Some(Action::North),
            (1, 0) => Some(Action::South),
            (0, 1) => Some(Action::East),
            (0, -1) => Some(Action::West),
            _ => None,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// Movement directions. The declaration order (N, E, S, W) is the canonical
/// tie-breaking order everywhere in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    North,
    East,
    South,
    West,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::North, Action::East, Action::South, Action::West];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn from_index(i: usize) -> Action {
        Self::ALL[i & 3]
    }

    /// Wall-mask bit for this side of a cell.
    pub const fn bit(self) -> u8 {
        1 << (self as u8)
    }

    pub const fn opposite(self) -> Action {
        match self {
            Action::North => Action::South,
            Action::East => Action::West,
            Action::South => Action::North,
            Action::West => Action::East,
        }
    }

    pub const fn letter(self) -> char {
        match self {
            Action::North => 'N',
            Action::East => 'E',
            Action::South => 'S',
            Action::West => 'W',
        }
    }

    pub fn from_letter(c: char) -> Option<Action> {
        match c {
            'N' => Some(Action::North),
            'E' => Some(Action::East),
            'S' => Some(Action::South),
            'W' => Some(Action::West),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// A subset of the four actions, iterated in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ActionSet(u8);

impl ActionSet {
    pub const EMPTY: ActionSet = ActionSet(0);
    pub const FULL: ActionSet = ActionSet(0b1111);

    pub fn from_actions(actions: &[Action]) -> Self {
        actions.iter().fold(Self::EMPTY, |s, &a| s.with(a))
    }

    pub const fn with(self, a: Action) -> Self {
        ActionSet(self.0 | a.bit())
    }

    pub const fn without(self, a: Action) -> Self {
        ActionSet(self.0 & !a.bit())
    }

    pub const fn contains(self, a: Action) -> bool {
        self.0 & a.bit() != 0
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = Action> {
        Action::ALL.into_iter().filter(move |a| self.contains(*a))
    }

    /// The `n`-th member in canonical order.
    pub fn nth(self, n: usize) -> Option<Action> {
        self.iter().nth(n)
    }
}

impl FromIterator<Action> for ActionSet {
    fn from_iter<I: IntoIterator<Item = Action>>(iter: I) -> Self {
        iter.into_iter().fold(Self::EMPTY, |s, a| s.with(a))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MazeError {
    #[error("malformed maze at line {line}, column {col}: {reason}")]
    Malformed {
        line: usize,
        col: usize,
        reason: String,
    },
    #[error("bad decomposition: {0}")]
    BadDecomposition(String),
}

impl MazeError {
    fn malformed(line: usize, col: usize, reason: impl Into<String>) -> Self {
        MazeError::Malformed {
            line,
            col,
            reason: reason.into(),
        }
    }
}

/// Wall grid. Immutable once built; `walls[row * width + col]` holds one bit
/// per [`Action`].
#[derive(Debug, Clone, PartialEq)]
pub struct Maze {
    width: usize,
    height: usize,
    walls: Vec<u8>,
    pub cell_pitch_px: f64,
}

impl Maze {
    /// Builds a maze from raw wall masks, checking symmetry and the outer
    /// boundary. Errors report the offending cell as line/column of the text
    /// rendering.
    pub fn from_walls(width: usize, height: usize, walls: Vec<u8>) -> Result<Self, MazeError> {
        if width == 0 || height == 0 {
            return Err(MazeError::malformed(1, 1, "maze must have at least one cell"));
        }
        if walls.len() != width * height {
            return Err(MazeError::malformed(
                1,
                1,
                format!("expected {} wall masks, got {}", width * height, walls.len()),
            ));
        }
        let maze = Maze {
            width,
            height,
            walls: walls.into_iter().map(|w| w & 0x0f).collect(),
            cell_pitch_px: DEFAULT_CELL_PITCH_PX,
        };
        maze.check_invariants()?;
        Ok(maze)
    }

    /// A maze with only the outer boundary walled.
    pub fn open(width: usize, height: usize) -> Self {
        let mut walls = vec![0u8; width * height];
        for row in 0..height {
            for col in 0..width {
                let w = &mut walls[row * width + col];
                if row == 0 {
                    *w |= Action::North.bit();
                }
                if row + 1 == height {
                    *w |= Action::South.bit();
                }
                if col == 0 {
                    *w |= Action::West.bit();
                }
                if col + 1 == width {
                    *w |= Action::East.bit();
                }
            }
        }
        Maze {
            width,
            height,
            walls,
            cell_pitch_px: DEFAULT_CELL_PITCH_PX,
        }
    }

    fn check_invariants(&self) -> Result<(), MazeError> {
        for cell in self.cells() {
            let line = 2 * cell.row + 2;
            let col = 2 * cell.col + 2;
            for a in Action::ALL {
                match self.neighbor(cell, a) {
                    None => {
                        if !self.has_wall(cell, a) {
                            return Err(MazeError::malformed(
                                line,
                                col,
                                format!("open boundary on the {a} side of cell {cell}"),
                            ));
                        }
                    }
                    Some(n) => {
                        if self.has_wall(cell, a) != self.has_wall(n, a.opposite()) {
                            return Err(MazeError::malformed(
                                line,
                                col,
                                format!("asymmetric wall between {cell} and {n}"),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    pub fn index(&self, c: Cell) -> usize {
        c.row * self.width + c.col
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index / self.width, index % self.width)
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.row < self.height && c.col < self.width
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.cell_count()).map(|i| self.cell_at(i))
    }

    pub fn wall_mask(&self, c: Cell) -> u8 {
        self.walls[self.index(c)]
    }

    pub fn has_wall(&self, c: Cell, dir: Action) -> bool {
        self.wall_mask(c) & dir.bit() != 0
    }

    /// Grid neighbour in `dir`, ignoring walls.
    pub fn neighbor(&self, c: Cell, dir: Action) -> Option<Cell> {
        c.step(dir, self.width, self.height)
    }

    pub fn passable(&self, from: Cell, dir: Action) -> bool {
        self.in_bounds(from) && self.neighbor(from, dir).is_some() && !self.has_wall(from, dir)
    }

    pub fn legal_actions(&self, from: Cell) -> ActionSet {
        Action::ALL
            .into_iter()
            .filter(|&a| self.passable(from, a))
            .collect()
    }

    /// Returns a copy with the wall on `dir` of `c` (and its mirror) removed.
    /// Boundary walls cannot be removed.
    pub fn without_wall(&self, c: Cell, dir: Action) -> Maze {
        let mut m = self.clone();
        if let Some(n) = self.neighbor(c, dir) {
            let (ci, ni) = (m.index(c), m.index(n));
            m.walls[ci] &= !dir.bit();
            m.walls[ni] &= !dir.opposite().bit();
        }
        m
    }

    /// Flood fill over passable edges. The result is indexed by cell index.
    pub fn reachable_mask(&self, start: Cell) -> Vec<bool> {
        let mut seen = vec![false; self.cell_count()];
        let mut stack = vec![start];
        seen[self.index(start)] = true;
        while let Some(c) = stack.pop() {
            for a in self.legal_actions(c).iter() {
                let n = self.neighbor(c, a).expect("passable implies neighbour");
                let ni = self.index(n);
                if !seen[ni] {
                    seen[ni] = true;
                    stack.push(n);
                }
            }
        }
        seen
    }

    pub fn reachable_cells(&self, start: Cell) -> Vec<Cell> {
        self.reachable_mask(start)
            .iter()
            .enumerate()
            .filter(|(_, &r)| r)
            .map(|(i, _)| self.cell_at(i))
            .collect()
    }

    /// BFS step distances from `start`; `None` for unreachable cells.
    pub fn distances_from(&self, start: Cell) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.cell_count()];
        let mut queue = VecDeque::from([start]);
        dist[self.index(start)] = Some(0);
        while let Some(c) = queue.pop_front() {
            let d = dist[self.index(c)].unwrap_or(0);
            for a in self.legal_actions(c).iter() {
                let n = self.neighbor(c, a).expect("passable implies neighbour");
                let ni = self.index(n);
                if dist[ni].is_none() {
                    dist[ni] = Some(d + 1);
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    /// Start corner for robot `id`: 0 top-left, 1 top-right, 2 bottom-left,
    /// 3 bottom-right.
    pub fn corner(&self, id: usize) -> Cell {
        let last_row = self.height - 1;
        let last_col = self.width - 1;
        match id % 4 {
            0 => Cell::new(0, 0),
            1 => Cell::new(0, last_col),
            2 => Cell::new(last_row, 0),
            _ => Cell::new(last_row, last_col),
        }
    }

    /// Splits the maze into `k` rectangular regions, region `i` containing
    /// the start corner of robot `i`.
    pub fn decompose(&self, k: usize) -> Result<Vec<SubMaze<'_>>, MazeError> {
        let (w, h) = (self.width, self.height);
        let regions = match k {
            1 => vec![Region::new(0, 0, h, w)],
            2 => {
                if w % 2 != 0 {
                    return Err(MazeError::BadDecomposition(format!(
                        "width {w} is not divisible by 2"
                    )));
                }
                vec![Region::new(0, 0, h, w / 2), Region::new(0, w / 2, h, w / 2)]
            }
            4 => {
                if w % 2 != 0 || h % 2 != 0 {
                    return Err(MazeError::BadDecomposition(format!(
                        "{w}x{h} is not divisible into quadrants"
                    )));
                }
                let (hw, hh) = (w / 2, h / 2);
                vec![
                    Region::new(0, 0, hh, hw),
                    Region::new(0, hw, hh, hw),
                    Region::new(hh, 0, hh, hw),
                    Region::new(hh, hw, hh, hw),
                ]
            }
            _ => {
                return Err(MazeError::BadDecomposition(format!(
                    "k = {k} is unsupported (expected 1, 2 or 4)"
                )))
            }
        };
        Ok(regions
            .into_iter()
            .enumerate()
            .map(|(id, region)| SubMaze {
                parent: self,
                region,
                id,
            })
            .collect())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((2 * self.height + 1) * (2 * self.width + 2));
        for row in 0..=self.height {
            // post line above `row` (or the bottom boundary)
            for col in 0..self.width {
                out.push('+');
                let walled = if row == self.height {
                    true
                } else {
                    self.has_wall(Cell::new(row, col), Action::North)
                };
                out.push(if walled { '-' } else { ' ' });
            }
            out.push_str("+\n");
            if row == self.height {
                break;
            }
            for col in 0..=self.width {
                let walled = if col == self.width {
                    true
                } else {
                    self.has_wall(Cell::new(row, col), Action::West)
                };
                out.push(if walled { '|' } else { ' ' });
                if col < self.width {
                    out.push(' ');
                }
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for Maze {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl std::str::FromStr for Maze {
    type Err = MazeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_maze(s)
    }
}

/// Parses the ASCII wall-grid format. Line and column numbers in errors are
/// 1-based.
pub fn parse_maze(text: &str) -> Result<Maze, MazeError> {
    if text.is_empty() {
        return Err(MazeError::malformed(1, 1, "empty input"));
    }
    if !text.ends_with('\n') {
        let last = text.lines().count();
        return Err(MazeError::malformed(last, 1, "missing trailing newline"));
    }
    let lines: Vec<&[u8]> = text[..text.len() - 1]
        .split('\n')
        .map(str::as_bytes)
        .collect();
    let line_count = lines.len();
    if line_count < 3 || line_count % 2 == 0 {
        return Err(MazeError::malformed(
            line_count,
            1,
            format!("expected an odd number (>= 3) of lines, got {line_count}"),
        ));
    }
    let line_len = lines[0].len();
    if line_len < 3 || line_len % 2 == 0 {
        return Err(MazeError::malformed(
            1,
            line_len.max(1),
            format!("expected an odd line length (>= 3), got {line_len}"),
        ));
    }
    let height = (line_count - 1) / 2;
    let width = (line_len - 1) / 2;

    let mut walls = vec![0u8; width * height];
    for (li, line) in lines.iter().enumerate() {
        if line.len() != line_len {
            return Err(MazeError::malformed(
                li + 1,
                line.len().min(line_len) + 1,
                format!("ragged line: length {} != {}", line.len(), line_len),
            ));
        }
        for (ci, &ch) in line.iter().enumerate() {
            let illegal = || {
                MazeError::malformed(
                    li + 1,
                    ci + 1,
                    format!("illegal character {:?}", ch as char),
                )
            };
            let boundary = li == 0 || li == line_count - 1 || ci == 0 || ci == line_len - 1;
            match (li % 2, ci % 2) {
                (0, 0) => {
                    if ch != b'+' {
                        return Err(illegal());
                    }
                }
                (0, _) => {
                    let walled = match ch {
                        b'-' => true,
                        b' ' => false,
                        _ => return Err(illegal()),
                    };
                    if boundary && !walled {
                        return Err(MazeError::malformed(li + 1, ci + 1, "open boundary"));
                    }
                    let col = ci / 2;
                    let below = li / 2;
                    if walled {
                        if below < height {
                            walls[below * width + col] |= Action::North.bit();
                        }
                        if below > 0 {
                            walls[(below - 1) * width + col] |= Action::South.bit();
                        }
                    }
                }
                (_, 0) => {
                    let walled = match ch {
                        b'|' => true,
                        b' ' => false,
                        _ => return Err(illegal()),
                    };
                    if boundary && !walled {
                        return Err(MazeError::malformed(li + 1, ci + 1, "open boundary"));
                    }
                    let row = li / 2;
                    let right = ci / 2;
                    if walled {
                        if right < width {
                            walls[row * width + right] |= Action::West.bit();
                        }
                        if right > 0 {
                            walls[row * width + right - 1] |= Action::East.bit();
                        }
                    }
                }
                _ => {
                    if ch != b' ' {
                        return Err(illegal());
                    }
                }
            }
        }
    }
    Maze::from_walls(width, height, walls)
}

/// Axis-aligned block of cells: rows `row0..row0+rows`, cols `col0..col0+cols`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Region {
    pub const fn new(row0: usize, col0: usize, rows: usize, cols: usize) -> Self {
        Self {
            row0,
            col0,
            rows,
            cols,
        }
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.row >= self.row0
            && c.row < self.row0 + self.rows
            && c.col >= self.col0
            && c.col < self.col0 + self.cols
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (self.row0..self.row0 + self.rows)
            .flat_map(move |r| (self.col0..self.col0 + self.cols).map(move |c| Cell::new(r, c)))
    }
}

/// One region of a decomposition, tied to its parent maze.
#[derive(Debug, Clone, Copy)]
pub struct SubMaze<'a> {
    pub parent: &'a Maze,
    pub region: Region,
    pub id: usize,
}

impl SubMaze<'_> {
    /// Region boundaries act as walls.
    pub fn passable(&self, from: Cell, dir: Action) -> bool {
        self.region.contains(from)
            && self.parent.passable(from, dir)
            && self
                .parent
                .neighbor(from, dir)
                .is_some_and(|n| self.region.contains(n))
    }

    pub fn legal_actions(&self, from: Cell) -> ActionSet {
        Action::ALL
            .into_iter()
            .filter(|&a| self.passable(from, a))
            .collect()
    }

    /// The region's cell closest to robot `id`'s maze corner.
    pub fn start(&self) -> Cell {
        let corner = self.parent.corner(self.id);
        let r = &self.region;
        Cell::new(
            corner.row.clamp(r.row0, r.row0 + r.rows - 1),
            corner.col.clamp(r.col0, r.col0 + r.cols - 1),
        )
    }

    /// Cells reachable from [`SubMaze::start`] without leaving the region.
    pub fn reachable_cells(&self) -> Vec<Cell> {
        let start = self.start();
        let mut seen = vec![false; self.parent.cell_count()];
        seen[self.parent.index(start)] = true;
        let mut stack = vec![start];
        let mut out = vec![start];
        while let Some(c) = stack.pop() {
            for a in self.legal_actions(c).iter() {
                let n = self.parent.neighbor(c, a).expect("passable implies neighbour");
                let ni = self.parent.index(n);
                if !seen[ni] {
                    seen[ni] = true;
                    stack.push(n);
                    out.push(n);
                }
            }
        }
        out.sort();
        out
    }
}
