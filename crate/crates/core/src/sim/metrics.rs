use std::fmt::Write as _;

use crate::net::LinkStats;

/// One row per tick; tick 0 is the initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub tick: u64,
    pub coverage_pct: f64,
    pub overlap_pct: f64,
    pub collisions: u64,
    /// Cumulative network counters.
    pub net: LinkStats,
    /// Coverage fraction minus lambda times moves per newly covered cell.
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Running,
    CoverageReached,
    MaxTicks,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Running => "running",
            Termination::CoverageReached => "coverage_reached",
            Termination::MaxTicks => "max_ticks",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsLog {
    pub rows: Vec<MetricsRow>,
    pub termination: Termination,
}

pub const METRICS_CSV_HEADER: &str =
    "tick,coverage_pct,overlap_pct,collisions,sent,delivered,dropped,bytes,score";

impl MetricsLog {
    pub fn new() -> Self {
        Self {
            rows: Vec::new(),
            termination: Termination::Running,
        }
    }

    pub fn last(&self) -> Option<&MetricsRow> {
        self.rows.last()
    }

    /// First tick whose coverage reaches `pct`.
    pub fn ticks_to(&self, pct: f64) -> Option<u64> {
        self.rows.iter().find(|r| r.coverage_pct >= pct).map(|r| r.tick)
    }

    /// The row at `tick`, or the final row if the run ended earlier.
    pub fn at_or_final(&self, tick: u64) -> Option<&MetricsRow> {
        self.rows
            .iter()
            .find(|r| r.tick == tick)
            .or_else(|| self.rows.last())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(METRICS_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.6},{:.6},{},{},{},{},{},{:.6}",
                r.tick,
                r.coverage_pct,
                r.overlap_pct,
                r.collisions,
                r.net.sent,
                r.net.delivered,
                r.net.dropped,
                r.net.bytes_sent,
                r.score
            );
        }
        out
    }

    /// Per-tick cumulative network counters: `tick,sent,delivered,dropped,bytes`.
    pub fn net_stats_csv(&self) -> String {
        let mut out = String::from("tick,sent,delivered,dropped,bytes\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.tick, r.net.sent, r.net.delivered, r.net.dropped, r.net.bytes_sent
            );
        }
        out
    }
}

impl Default for MetricsLog {
    fn default() -> Self {
        Self::new()
    }
}
