//! The bundled set of 17 micromouse-style 16x16 mazes.
//!
//! The files under `corpus/` were produced by [`crate::generate`] (odd
//! entries with the recursive backtracker, even ones with Prim) and are
//! stored in the text format so they can be diffed and round-tripped.

use crate::maze::{parse_maze, Maze};

pub const CORPUS_TEXT: [(&str, &str); 17] = [
    ("maze01", include_str!("../corpus/maze01.txt")),
    ("maze02", include_str!("../corpus/maze02.txt")),
    ("maze03", include_str!("../corpus/maze03.txt")),
    ("maze04", include_str!("../corpus/maze04.txt")),
    ("maze05", include_str!("../corpus/maze05.txt")),
    ("maze06", include_str!("../corpus/maze06.txt")),
    ("maze07", include_str!("../corpus/maze07.txt")),
    ("maze08", include_str!("../corpus/maze08.txt")),
    ("maze09", include_str!("../corpus/maze09.txt")),
    ("maze10", include_str!("../corpus/maze10.txt")),
    ("maze11", include_str!("../corpus/maze11.txt")),
    ("maze12", include_str!("../corpus/maze12.txt")),
    ("maze13", include_str!("../corpus/maze13.txt")),
    ("maze14", include_str!("../corpus/maze14.txt")),
    ("maze15", include_str!("../corpus/maze15.txt")),
    ("maze16", include_str!("../corpus/maze16.txt")),
    ("maze17", include_str!("../corpus/maze17.txt")),
];

/// Parses every bundled maze, in corpus order.
pub fn builtin_corpus() -> Vec<(&'static str, Maze)> {
    CORPUS_TEXT
        .iter()
        .map(|(name, text)| (*name, parse_maze(text).expect("bundled maze parses")))
        .collect()
}

pub fn builtin_maze(name: &str) -> Option<Maze> {
    CORPUS_TEXT
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse_maze(text).expect("bundled maze parses"))
}
