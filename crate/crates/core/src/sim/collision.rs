//! Deterministic repelling of conflicting moves.
//!
//! Contested cells go to the robot already standing there, otherwise to the
//! lowest id. Losers fall back to their next preference that is neither a
//! cell they already lost nor a cell another robot currently targets, or
//! stay put. A head-on swap is never granted: the higher id backs off to
//! another free preference, failing that the lower id does, failing that both
//! stay. The rules are applied until nothing changes.

use std::collections::BTreeMap;

use crate::maze::Cell;

/// One robot's request for this tick: where it stands and the cells it
/// would like to move to, best first. An empty list means stay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Intent {
    pub pos: Cell,
    pub prefs: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolution {
    /// Final cell of every robot (its own position when it stays).
    pub targets: Vec<Cell>,
    /// Which preference each robot ended up with, `None` for staying.
    pub chosen: Vec<Option<usize>>,
    /// Number of times a robot lost a contest or was stopped by a swap.
    pub collisions: usize,
}

pub fn resolve_collisions(intents: &[Intent]) -> Resolution {
    let n = intents.len();
    let mut choice: Vec<Option<usize>> = intents
        .iter()
        .map(|i| (!i.prefs.is_empty()).then_some(0))
        .collect();
    let mut excluded: Vec<Vec<Cell>> = vec![Vec::new(); n];
    let mut collisions = 0;

    let target = |choice: &[Option<usize>], i: usize| -> Cell {
        choice[i].map_or(intents[i].pos, |k| intents[i].prefs[k])
    };
    // best preference of robot `r` not yet excluded and not targeted by others
    let next_free = |choice: &[Option<usize>], excluded: &[Vec<Cell>], r: usize| -> Option<usize> {
        (0..intents[r].prefs.len()).find(|&k| {
            let c = intents[r].prefs[k];
            !excluded[r].contains(&c) && (0..n).all(|o| o == r || target(choice, o) != c)
        })
    };

    // every change adds an exclusion or turns a mover into a stayer
    let bound = 2 * (n + intents.iter().map(|i| i.prefs.len()).sum::<usize>()) + 1;
    for _ in 0..bound {
        let mut changed = false;

        for i in 0..n {
            for j in i + 1..n {
                if choice[i].is_some()
                    && choice[j].is_some()
                    && target(&choice, i) == intents[j].pos
                    && target(&choice, j) == intents[i].pos
                {
                    // the higher id yields first; if it has nowhere else to
                    // go the lower id yields; if neither can, both stay
                    collisions += 1;
                    changed = true;
                    let yielded = [j, i].into_iter().find(|&y| {
                        let blocked = if y == j { intents[i].pos } else { intents[j].pos };
                        excluded[y].push(blocked);
                        match next_free(&choice, &excluded, y) {
                            Some(k) => {
                                choice[y] = Some(k);
                                true
                            }
                            None => false,
                        }
                    });
                    if yielded.is_none() {
                        choice[i] = None;
                        choice[j] = None;
                    }
                }
            }
        }

        let mut claims: BTreeMap<Cell, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            claims.entry(target(&choice, i)).or_default().push(i);
        }
        let contested: Vec<(Cell, Vec<usize>)> =
            claims.into_iter().filter(|(_, ids)| ids.len() > 1).collect();
        for (cell, ids) in contested {
            let winner = ids
                .iter()
                .copied()
                .find(|&i| choice[i].is_none())
                .unwrap_or(ids[0]);
            for &loser in ids.iter().filter(|&&i| i != winner) {
                // a loser may already have been re-routed by an earlier group
                if target(&choice, loser) != cell || choice[loser].is_none() {
                    continue;
                }
                excluded[loser].push(cell);
                collisions += 1;
                changed = true;
                choice[loser] = next_free(&choice, &excluded, loser);
            }
        }

        if !changed {
            break;
        }
    }

    // safety net: anything still conflicting stays (all-stay is conflict free)
    loop {
        let mut fixed = true;
        for i in 0..n {
            if choice[i].is_none() {
                continue;
            }
            let t = target(&choice, i);
            let clash = (0..n).any(|o| o != i && target(&choice, o) == t);
            let swap = (0..n).any(|o| {
                o != i && t == intents[o].pos && target(&choice, o) == intents[i].pos
            });
            if clash || swap {
                choice[i] = None;
                collisions += 1;
                fixed = false;
            }
        }
        if fixed {
            break;
        }
    }

    Resolution {
        targets: (0..n).map(|i| target(&choice, i)).collect(),
        chosen: choice,
        collisions,
    }
}
