//! Strategies and property checks shared by the invariant tests and the
//! acceptance suite.
#![allow(dead_code)]

use mazecomm_core::maze::{parse_maze, Action, ActionSet, Cell, Maze};
use mazecomm_core::net::{in_range, NetConfig, NetMessage};
use mazecomm_core::rl::{QTable, RLParams};
use mazecomm_core::sim::{resolve_collisions, AgentKind, Intent, MissionConfig, WorldState};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

/// Wall masks from explicit interior wall choices: `east[r * (w - 1) + c]`
/// closes the side between (r, c) and (r, c + 1), `south[r * w + c]` the
/// side between (r, c) and (r + 1, c).
pub fn maze_from_bits(w: usize, h: usize, east: &[bool], south: &[bool]) -> Maze {
    let mut walls = vec![0u8; w * h];
    for r in 0..h {
        for c in 0..w {
            let m = &mut walls[r * w + c];
            if r == 0 {
                *m |= Action::North.bit();
            }
            if r + 1 == h {
                *m |= Action::South.bit();
            }
            if c == 0 {
                *m |= Action::West.bit();
            }
            if c + 1 == w {
                *m |= Action::East.bit();
            }
        }
    }
    for r in 0..h {
        for c in 0..w.saturating_sub(1) {
            if east[r * (w - 1) + c] {
                walls[r * w + c] |= Action::East.bit();
                walls[r * w + c + 1] |= Action::West.bit();
            }
        }
    }
    for r in 0..h.saturating_sub(1) {
        for c in 0..w {
            if south[r * w + c] {
                walls[r * w + c] |= Action::South.bit();
                walls[(r + 1) * w + c] |= Action::North.bit();
            }
        }
    }
    Maze::from_walls(w, h, walls).expect("symmetric by construction")
}

/// Any maze with sides in `1..=max_side`, walls drawn independently.
pub fn arb_maze(max_side: usize) -> impl Strategy<Value = Maze> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(w, h)| {
        (
            proptest::collection::vec(any::<bool>(), h * w.saturating_sub(1)),
            proptest::collection::vec(any::<bool>(), h.saturating_sub(1) * w),
        )
            .prop_map(move |(e, s)| maze_from_bits(w, h, &e, &s))
    })
}

/// Opens one inner side of every sealed corner so no robot starts boxed in.
pub fn open_corners(mut maze: Maze) -> Maze {
    for id in 0..4 {
        let c = maze.corner(id);
        if maze.legal_actions(c).is_empty() {
            let dir = if c.col == 0 { Action::East } else { Action::West };
            let alt = if c.row == 0 { Action::South } else { Action::North };
            maze = if maze.neighbor(c, dir).is_some() {
                maze.without_wall(c, dir)
            } else {
                maze.without_wall(c, alt)
            };
        }
    }
    maze
}

/// Sides in {2, 4, 6} so that one, two or four robots all fit.
pub fn arb_mission_maze() -> impl Strategy<Value = Maze> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(hw, hh)| {
        let (w, h) = (2 * hw, 2 * hh);
        (
            proptest::collection::vec(prop::bool::weighted(0.35), h * (w - 1)),
            proptest::collection::vec(prop::bool::weighted(0.35), (h - 1) * w),
        )
            .prop_map(move |(e, s)| open_corners(maze_from_bits(w, h, &e, &s)))
    })
}

pub fn arb_agent() -> impl Strategy<Value = AgentKind> {
    prop_oneof![
        Just(AgentKind::Proposed),
        Just(AgentKind::Dfs),
        Just(AgentKind::MemoryGreedy)
    ]
}

#[derive(Debug, Clone)]
pub struct MissionCase {
    pub maze: Maze,
    pub cfg: MissionConfig,
    pub seed: u64,
}

pub fn arb_mission() -> impl Strategy<Value = MissionCase> {
    (
        arb_mission_maze(),
        arb_agent(),
        prop_oneof![Just(1usize), Just(2), Just(4)],
        any::<u64>(),
        0.0f64..=1.0,
        50.0f64..800.0,
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(
            |(maze, agent, robots, seed, loss, range, messaging, pretrain)| MissionCase {
                maze,
                cfg: MissionConfig {
                    agent,
                    robots,
                    max_ticks: 40,
                    messaging,
                    pretrain,
                    net: NetConfig {
                        loss_prob: loss,
                        range_px: range,
                        ..NetConfig::default()
                    },
                    ..MissionConfig::default()
                },
                seed,
            },
        )
}

/// Steps a mission tick by tick checking coverage monotonicity, wall
/// legality of every move, exclusive occupancy, the Q bound, network
/// conservation and termination.
pub fn check_mission(case: &MissionCase) -> Result<(), TestCaseError> {
    let mut world = WorldState::new(&case.maze, case.cfg, case.seed)
        .map_err(|e| TestCaseError::fail(format!("setup failed: {e}")))?;
    let bound = case.cfg.rl.value_bound() * (1.0 + 1e-12);
    let mut prev_cov = world.coverage_pct();
    let mut prev_pos = world.positions();
    check_exclusive(&prev_pos)?;
    world
        .clone()
        .run()
        .map_err(|e| TestCaseError::fail(format!("run failed: {e}")))?;
    for _ in 0..case.cfg.max_ticks {
        if world.coverage_pct() >= case.cfg.coverage_target_pct {
            break;
        }
        world
            .tick()
            .map_err(|e| TestCaseError::fail(format!("tick {} failed: {e}", world.tick)))?;
        let cov = world.coverage_pct();
        prop_assert!(cov + 1e-12 >= prev_cov, "coverage fell {prev_cov} -> {cov}");
        prev_cov = cov;
        let pos = world.positions();
        for (from, to) in prev_pos.iter().zip(&pos) {
            if from != to {
                let dir = from.direction_to(*to);
                prop_assert!(
                    dir.is_some_and(|d| case.maze.passable(*from, d)),
                    "illegal move {from:?} -> {to:?}"
                );
            }
        }
        check_exclusive(&pos)?;
        prev_pos = pos;
        for r in &world.robots {
            if let Some(q) = r.qtable() {
                prop_assert!(q.max_abs() <= bound, "|Q| {} > {bound}", q.max_abs());
            }
        }
        prop_assert!(world.net_stats.is_consistent());
    }
    prop_assert!(world.tick <= case.cfg.max_ticks);
    Ok(())
}

fn check_exclusive(pos: &[Cell]) -> Result<(), TestCaseError> {
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            prop_assert_ne!(pos[i], pos[j], "robots {} and {} share a cell", i, j);
        }
    }
    Ok(())
}

pub fn check_walls_symmetric(maze: &Maze) -> Result<(), TestCaseError> {
    for c in maze.cells() {
        for a in Action::ALL {
            match maze.neighbor(c, a) {
                Some(n) => prop_assert_eq!(maze.has_wall(c, a), maze.has_wall(n, a.opposite())),
                None => prop_assert!(maze.has_wall(c, a)),
            }
        }
    }
    Ok(())
}

pub fn check_codec_round_trip(maze: &Maze) -> Result<(), TestCaseError> {
    let text = maze.to_text();
    let back = parse_maze(&text).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(&back, maze);
    prop_assert_eq!(back.to_text(), text);
    check_walls_symmetric(&back)
}

pub fn arb_message() -> impl Strategy<Value = NetMessage> {
    (
        any::<u32>(),
        any::<u64>(),
        0usize..=u16::MAX as usize,
        0usize..=u16::MAX as usize,
        proptest::array::uniform4(any::<f64>()),
    )
        .prop_map(|(sender_id, tick, row, col, qvals)| NetMessage {
            sender_id,
            tick,
            pos: Cell::new(row, col),
            qvals,
        })
}

pub fn check_message_round_trip(msg: &NetMessage) -> Result<(), TestCaseError> {
    let back = NetMessage::decode(&msg.encode()).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(back.sender_id, msg.sender_id);
    prop_assert_eq!(back.tick, msg.tick);
    prop_assert_eq!(back.pos, msg.pos);
    for (a, b) in back.qvals.iter().zip(&msg.qvals) {
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }
    Ok(())
}

/// Every cell lies in exactly one region, for each supported split that
/// fits the maze.
pub fn check_decompose_partition(maze: &Maze) -> Result<(), TestCaseError> {
    for k in [1, 2, 4] {
        let Ok(parts) = maze.decompose(k) else {
            let fits = k == 1
                || (k == 2 && maze.width() % 2 == 0)
                || (k == 4 && maze.width() % 2 == 0 && maze.height() % 2 == 0);
            prop_assert!(!fits, "decompose({}) refused a {}x{} maze", k, maze.width(), maze.height());
            continue;
        };
        prop_assert_eq!(parts.len(), k);
        for c in maze.cells() {
            let owners = parts.iter().filter(|p| p.region.contains(c)).count();
            prop_assert_eq!(owners, 1, "cell {:?} in {} regions for k={}", c, owners, k);
        }
        let total: usize = parts.iter().map(|p| p.region.len()).sum();
        prop_assert_eq!(total, maze.cell_count());
        for (i, p) in parts.iter().enumerate() {
            prop_assert!(p.region.contains(p.start()));
            prop_assert_eq!(p.id, i);
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct QOps {
    pub w: usize,
    pub h: usize,
    pub params: RLParams,
    /// (s, a, r as a fraction of the reward bound, s', legal at s')
    pub ops: Vec<(Cell, Action, f64, Cell, ActionSet)>,
}

pub fn arb_qops() -> impl Strategy<Value = QOps> {
    (1usize..=5, 1usize..=5, 0.01f64..=1.0, 0.0f64..0.995).prop_flat_map(|(w, h, alpha, gamma)| {
        let op = (
            0..w * h,
            0usize..4,
            -1.0f64..=1.0,
            0..w * h,
            0u8..16,
        );
        proptest::collection::vec(op, 1..200).prop_map(move |raw| {
            let cell = |i: usize| Cell::new(i / w, i % w);
            QOps {
                w,
                h,
                params: RLParams {
                    alpha,
                    gamma,
                    ..RLParams::default()
                },
                ops: raw
                    .into_iter()
                    .map(|(s, a, r, n, legal)| {
                        let legal: Vec<Action> = Action::ALL
                            .into_iter()
                            .filter(|a| legal & a.bit() != 0)
                            .collect();
                        (
                            cell(s),
                            Action::from_index(a),
                            r,
                            cell(n),
                            ActionSet::from_actions(&legal),
                        )
                    })
                    .collect(),
            }
        })
    })
}

pub fn check_q_bound(case: &QOps) -> Result<(), TestCaseError> {
    let p = &case.params;
    let r_max = p.reward_bound();
    let bound = p.value_bound() * (1.0 + 1e-12);
    let mut q = QTable::new(case.w, case.h);
    for &(s, a, frac, n, legal) in &case.ops {
        q.q_update(s, a, frac * r_max, n, legal, p);
        prop_assert!(q.max_abs() <= bound, "|Q| {} > {}", q.max_abs(), bound);
    }
    Ok(())
}

/// Up to four robots on distinct cells of a 5x5 grid, each asking for a few
/// distinct neighbouring cells.
pub fn arb_intents() -> impl Strategy<Value = Vec<Intent>> {
    proptest::sample::subsequence((0..25usize).collect::<Vec<_>>(), 1..=4)
        .prop_flat_map(|cells| {
            let n = cells.len();
            (
                Just(cells),
                proptest::collection::vec(
                    proptest::sample::subsequence(vec![0usize, 1, 2, 3], 0..=4).prop_shuffle(),
                    n,
                ),
            )
        })
        .prop_map(|(cells, dirs)| {
            cells
                .into_iter()
                .zip(dirs)
                .map(|(i, ds)| {
                    let pos = Cell::new(i / 5, i % 5);
                    let prefs = ds
                        .into_iter()
                        .filter_map(|d| pos.step(Action::from_index(d), 5, 5))
                        .collect();
                    Intent { pos, prefs }
                })
                .collect()
        })
}

pub fn check_resolution(intents: &[Intent]) -> Result<(), TestCaseError> {
    let res = resolve_collisions(intents);
    prop_assert_eq!(res.targets.len(), intents.len());
    check_exclusive(&res.targets)?;
    for (i, it) in intents.iter().enumerate() {
        match res.chosen[i] {
            None => prop_assert_eq!(res.targets[i], it.pos),
            Some(k) => prop_assert_eq!(res.targets[i], it.prefs[k]),
        }
        for (j, jt) in intents.iter().enumerate() {
            if i != j && it.pos != res.targets[i] {
                prop_assert!(
                    !(res.targets[i] == jt.pos && res.targets[j] == it.pos),
                    "robots {} and {} swapped",
                    i,
                    j
                );
            }
        }
    }
    Ok(())
}

pub fn check_range_symmetric(a: Cell, b: Cell, range: f64) -> Result<(), TestCaseError> {
    let cfg = NetConfig {
        range_px: range,
        ..NetConfig::default()
    };
    prop_assert_eq!(in_range(a, b, &cfg, 100.0), in_range(b, a, &cfg, 100.0));
    Ok(())
}
