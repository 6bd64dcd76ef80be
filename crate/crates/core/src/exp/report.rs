use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::sim::AgentKind;

use super::sweep::{RunResult, SweepReport, THRESHOLDS};

pub const RUNS_HEADER: &str = "agent,maze,seed,sweep_value,range_px,loss_prob,ticks_to_33,ticks_to_66,ticks_to_99,final_tick,final_coverage_pct,final_overlap_pct,collisions,sent,delivered,dropped,bytes,termination";
pub const TIME_HEADER: &str = "agent,sweep_value,threshold_pct,median_ticks,mean_ticks,reached,runs";
pub const CURVE_HEADER: &str = "agent,sweep_value,tick,median_pct,mean_pct";
pub const RANGE_HEADER: &str = "agent,range_px,runs,median_final_coverage_pct,mean_final_coverage_pct,median_final_overlap_pct,median_ticks_to_99,mean_bytes_sent";
pub const LOSS_HEADER: &str = "agent,loss_prob,runs,median_final_coverage_pct,mean_final_coverage_pct,median_final_overlap_pct,median_ticks_to_99,mean_bytes_sent";

/// Median of finite samples; `None` when empty.
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Median tick count where a run that never got there counts as infinite.
pub fn median_ticks(ts: &[Option<u64>]) -> Option<f64> {
    let xs: Vec<f64> = ts
        .iter()
        .map(|t| t.map_or(f64::INFINITY, |t| t as f64))
        .collect();
    median(&xs)
}

fn fmt_opt(x: Option<f64>) -> String {
    match x {
        None => String::new(),
        Some(v) if v.is_infinite() => "inf".into(),
        Some(v) => format!("{v:.6}"),
    }
}

fn fmt_value(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Runs grouped by (agent, sweep value) in first-seen order.
fn groups(report: &SweepReport) -> Vec<((AgentKind, Option<f64>), Vec<&RunResult>)> {
    group_by(&report.runs, |r| (r.agent, r.sweep_value))
}

fn group_by<K: PartialEq + Copy>(
    runs: &[RunResult],
    key: impl Fn(&RunResult) -> K,
) -> Vec<(K, Vec<&RunResult>)> {
    let mut out: Vec<(K, Vec<&RunResult>)> = Vec::new();
    for r in runs {
        let k = key(r);
        match out.iter_mut().find(|(g, _)| *g == k) {
            Some((_, v)) => v.push(r),
            None => out.push((k, vec![r])),
        }
    }
    out
}

pub fn runs_csv(report: &SweepReport) -> String {
    let mut out = format!("{RUNS_HEADER}\n");
    for r in &report.runs {
        let t = r.ticks_to.map(|t| t.map(|t| t.to_string()).unwrap_or_default());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{:.6},{:.6},{},{},{},{},{},{}",
            r.agent,
            r.maze,
            r.seed,
            fmt_value(r.sweep_value),
            r.range_px,
            r.loss_prob,
            t[0],
            t[1],
            t[2],
            r.final_tick,
            r.final_coverage_pct,
            r.final_overlap_pct,
            r.collisions,
            r.net.sent,
            r.net.delivered,
            r.net.dropped,
            r.net.bytes_sent,
            r.termination.as_str()
        );
    }
    out
}

pub fn time_per_coverage_csv(report: &SweepReport) -> String {
    let mut out = format!("{TIME_HEADER}\n");
    for ((agent, value), runs) in groups(report) {
        for (k, th) in THRESHOLDS.iter().enumerate() {
            let ts: Vec<Option<u64>> = runs.iter().map(|r| r.ticks_to[k]).collect();
            let reached: Vec<f64> = ts.iter().flatten().map(|&t| t as f64).collect();
            let _ = writeln!(
                out,
                "{agent},{},{th},{},{},{},{}",
                fmt_value(value),
                fmt_opt(median_ticks(&ts)),
                fmt_opt(mean(&reached)),
                reached.len(),
                runs.len()
            );
        }
    }
    out
}

fn curve_csv(report: &SweepReport, series: impl Fn(&RunResult, u64) -> f64) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for ((agent, value), runs) in groups(report) {
        let last = runs.iter().map(|r| r.final_tick).max().unwrap_or(0);
        for tick in 0..=last {
            let xs: Vec<f64> = runs.iter().map(|r| series(r, tick)).collect();
            let _ = writeln!(
                out,
                "{agent},{},{tick},{},{}",
                fmt_value(value),
                fmt_opt(median(&xs)),
                fmt_opt(mean(&xs))
            );
        }
    }
    out
}

pub fn coverage_vs_iter_csv(report: &SweepReport) -> String {
    curve_csv(report, RunResult::coverage_at)
}

pub fn overlap_vs_iter_csv(report: &SweepReport) -> String {
    curve_csv(report, RunResult::overlap_at)
}

fn param_sweep_csv(report: &SweepReport, header: &str, key: impl Fn(&RunResult) -> f64) -> String {
    let mut out = format!("{header}\n");
    for ((agent, v), runs) in group_by(&report.runs, |r| (r.agent, key(r))) {
        let cov: Vec<f64> = runs.iter().map(|r| r.final_coverage_pct).collect();
        let ovl: Vec<f64> = runs.iter().map(|r| r.final_overlap_pct).collect();
        let t99: Vec<Option<u64>> = runs.iter().map(|r| r.ticks_to[2]).collect();
        let bytes: Vec<f64> = runs.iter().map(|r| r.net.bytes_sent as f64).collect();
        let _ = writeln!(
            out,
            "{agent},{v},{},{},{},{},{},{}",
            runs.len(),
            fmt_opt(median(&cov)),
            fmt_opt(mean(&cov)),
            fmt_opt(median(&ovl)),
            fmt_opt(median_ticks(&t99)),
            fmt_opt(mean(&bytes))
        );
    }
    out
}

pub fn range_sweep_csv(report: &SweepReport) -> String {
    param_sweep_csv(report, RANGE_HEADER, |r| r.range_px)
}

pub fn loss_sweep_csv(report: &SweepReport) -> String {
    param_sweep_csv(report, LOSS_HEADER, |r| r.loss_prob)
}

/// Writes every summary table into `out_dir` and returns the paths written.
pub fn emit_report(report: &SweepReport, out_dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let files = [
        ("runs.csv", runs_csv(report)),
        ("time_per_coverage.csv", time_per_coverage_csv(report)),
        ("coverage_vs_iter.csv", coverage_vs_iter_csv(report)),
        ("overlap_vs_iter.csv", overlap_vs_iter_csv(report)),
        ("range_sweep.csv", range_sweep_csv(report)),
        ("loss_sweep.csv", loss_sweep_csv(report)),
    ];
    let mut written = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = out_dir.join(name);
        std::fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}
