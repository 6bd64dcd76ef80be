//! Batch experiments: config files, parallel sweeps and CSV summaries.

pub mod config;
pub mod report;
pub mod sweep;

pub use config::{load_config, ConfigError, ExperimentConfig, Sweep, SweepParam};
pub use report::{emit_report, median, median_ticks};
pub use sweep::{load_mazes, run_sweep, run_sweep_on, ExpError, RunResult, SweepReport, THRESHOLDS};
