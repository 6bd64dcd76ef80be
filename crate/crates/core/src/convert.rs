//! Conversion from common micromouse maze encodings into [`Maze`].
//!
//! Two input encodings are recognised:
//!
//! * the wide text rendering used by many online maze archives, with `o`
//!   posts and three-character horizontal segments (`o---o---o`);
//! * the 256-byte binary `.maz` layout: one byte per cell, stored column by
//!   column starting at the south-west corner (`index = x * 16 + y`, `y`
//!   growing northwards), with bits N=1, E=2, S=4, W=8.
//!
//! Text already in the compact `+-+` format is passed through the regular
//! parser.

use crate::maze::{parse_maze, Action, Maze, MazeError};

/// Guesses the encoding and converts.
pub fn convert_bytes(bytes: &[u8]) -> Result<Maze, MazeError> {
    if bytes.len() == 256 && bytes.iter().any(|b| *b < 0x20 && *b != b'\n') {
        return from_maz_binary(bytes);
    }
    let text = std::str::from_utf8(bytes)
        .map_err(|_| malformed(1, 1, "input is neither UTF-8 text nor a 256-byte .maz file"))?;
    let text = text.replace("\r\n", "\n");
    if text.trim_start().starts_with('o') {
        from_wide_text(&text)
    } else {
        let mut text = text;
        if !text.ends_with('\n') {
            text.push('\n');
        }
        parse_maze(&text)
    }
}

fn malformed(line: usize, col: usize, reason: &str) -> MazeError {
    MazeError::Malformed {
        line,
        col,
        reason: reason.to_string(),
    }
}

/// `o---o` style text: `(2H+1)` lines of `(4W+1)` characters.
pub fn from_wide_text(text: &str) -> Result<Maze, MazeError> {
    let lines: Vec<&str> = text
        .lines()
        .map(str::trim_end)
        .skip_while(|l| l.is_empty())
        .collect();
    let lines: Vec<&str> = {
        let mut v = lines;
        while v.last().is_some_and(|l| l.is_empty()) {
            v.pop();
        }
        v
    };
    if lines.len() < 3 || lines.len() % 2 == 0 {
        return Err(malformed(lines.len().max(1), 1, "expected an odd number of lines"));
    }
    let width = (lines[0].len().saturating_sub(1)) / 4;
    if width == 0 || lines[0].len() != 4 * width + 1 {
        return Err(malformed(1, 1, "post line must be 4W+1 characters wide"));
    }
    let mut compact = String::new();
    for (li, line) in lines.iter().enumerate() {
        // trailing spaces may have been trimmed
        let padded: Vec<u8> = line
            .bytes()
            .chain(std::iter::repeat(b' '))
            .take(4 * width + 1)
            .collect();
        if line.len() > 4 * width + 1 {
            return Err(malformed(li + 1, 4 * width + 2, "line too long"));
        }
        for x in 0..=width {
            let post = padded[4 * x];
            if li % 2 == 0 {
                if post != b'o' && post != b'+' {
                    return Err(malformed(li + 1, 4 * x + 1, "expected a post"));
                }
                compact.push('+');
                if x < width {
                    let seg = &padded[4 * x + 1..4 * x + 4];
                    compact.push(if seg.contains(&b'-') { '-' } else { ' ' });
                }
            } else {
                compact.push(if post == b'|' { '|' } else { ' ' });
                if x < width {
                    compact.push(' ');
                }
            }
        }
        compact.push('\n');
    }
    parse_maze(&compact)
}

/// 256-byte `.maz` binary (16x16).
pub fn from_maz_binary(bytes: &[u8]) -> Result<Maze, MazeError> {
    const SIDE: usize = 16;
    if bytes.len() != SIDE * SIDE {
        return Err(malformed(1, 1, "binary maze must be exactly 256 bytes"));
    }
    let mut walls = vec![0u8; SIDE * SIDE];
    for (i, &b) in bytes.iter().enumerate() {
        let x = i / SIDE;
        let y = i % SIDE;
        let row = SIDE - 1 - y;
        let col = x;
        let mut mask = 0u8;
        for (bit, action) in [
            (1u8, Action::North),
            (2, Action::East),
            (4, Action::South),
            (8, Action::West),
        ] {
            if b & bit != 0 {
                mask |= action.bit();
            }
        }
        walls[row * SIDE + col] = mask;
    }
    Maze::from_walls(SIDE, SIDE, walls)
}

/// Inverse of [`from_maz_binary`] for 16x16 mazes.
pub fn to_maz_binary(maze: &Maze) -> Option<Vec<u8>> {
    const SIDE: usize = 16;
    if maze.width() != SIDE || maze.height() != SIDE {
        return None;
    }
    let mut out = vec![0u8; SIDE * SIDE];
    for cell in maze.cells() {
        let x = cell.col;
        let y = SIDE - 1 - cell.row;
        let mask = maze.wall_mask(cell);
        let mut b = 0u8;
        for (bit, action) in [
            (1u8, Action::North),
            (2, Action::East),
            (4, Action::South),
            (8, Action::West),
        ] {
            if mask & action.bit() != 0 {
                b |= bit;
            }
        }
        out[x * SIDE + y] = b;
    }
    Some(out)
}
