//! Multi-robot maze exploration with cooperative Q-learning over a lossy,
//! range-limited broadcast network.

pub mod baselines;
pub mod convert;
pub mod corpus;
pub mod exp;
pub mod generate;
pub mod local_map;
pub mod maze;
pub mod net;
pub mod rl;
pub mod sim;

pub use maze::{parse_maze, Action, ActionSet, Cell, Maze, MazeError};
pub use sim::{run_mission, AgentKind, MetricsLog, MissionConfig, SimError, WorldState};
