use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use mazecomm_core::convert::convert_bytes;
use mazecomm_core::exp::{self, ExpError, SweepReport, THRESHOLDS};
use mazecomm_core::generate::{generate, CarveStyle, MazeSpec};
use mazecomm_core::AgentKind;

#[derive(Parser)]
#[command(name = "mazecomm", version, about = "Multi-robot maze exploration experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Run every mission described by a config file and write CSV summaries.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the config's seed list.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Overrides the config's agent list.
        #[arg(long, value_parser = parse_agent)]
        agent: Option<AgentKind>,
        /// Worker threads (defaults to the number of CPUs).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Convert a maze file (wide text, .maz binary or compact text) to the
    /// compact text format.
    ConvertMaze { input: PathBuf, output: PathBuf },
    /// Write a random 16x16 maze in the compact text format.
    GenerateMaze {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Style::Backtracker)]
        style: Style,
        #[arg(long, default_value_t = 12)]
        openings: usize,
        output: PathBuf,
    },
    /// Run the acceptance suite through cargo.
    Verify,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Style {
    Backtracker,
    Prim,
}

fn parse_agent(s: &str) -> Result<AgentKind, String> {
    s.parse()
}

/// A command failure, split by the exit status it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments, config or maze input, or an I/O error (exit 1).
    Setup(anyhow::Error),
    /// A mission failed while running (exit 2).
    Simulation(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Setup(_) => 1,
            Failure::Simulation(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Setup(e) => write!(f, "error: {e:#}"),
            Failure::Simulation(e) => write!(f, "simulation fault: {e:#}"),
        }
    }
}

/// Runs one parsed command, printing a short summary for `simulate`.
pub fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Simulate {
            config,
            out,
            seeds,
            agent,
            jobs,
        } => {
            let report = simulate(&config, &out, seeds, agent, jobs)?;
            print!("{}", summary(&report, &out));
            Ok(())
        }
        Cmd::ConvertMaze { input, output } => convert(&input, &output).map_err(Failure::Setup),
        Cmd::GenerateMaze {
            seed,
            style,
            openings,
            output,
        } => generate_maze(seed, style, openings, &output).map_err(Failure::Setup),
        Cmd::Verify => verify().map_err(Failure::Setup),
    }
}

pub fn simulate(
    config: &Path,
    out: &Path,
    seeds: Option<Vec<u64>>,
    agent: Option<AgentKind>,
    jobs: Option<usize>,
) -> Result<SweepReport, Failure> {
    let mut cfg = exp::load_config(config)
        .with_context(|| format!("loading {}", config.display()))
        .map_err(Failure::Setup)?;
    if let Some(seeds) = seeds {
        if seeds.is_empty() {
            return Err(Failure::Setup(anyhow::anyhow!("--seeds needs at least one seed")));
        }
        cfg.seeds = seeds;
    }
    if let Some(agent) = agent {
        cfg.agents = vec![agent];
    }
    let jobs = jobs.unwrap_or_else(|| {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    });

    let report = exp::run_sweep(&cfg, jobs).map_err(|e| match e {
        ExpError::Mission { .. } => Failure::Simulation(e.into()),
        other => Failure::Setup(other.into()),
    })?;
    exp::emit_report(&report, out)
        .with_context(|| format!("writing reports to {}", out.display()))
        .map_err(Failure::Setup)?;
    Ok(report)
}

pub fn summary(report: &SweepReport, out: &Path) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "{} runs, reports in {}", report.runs.len(), out.display());
    let mut agents: Vec<AgentKind> = Vec::new();
    for r in &report.runs {
        if !agents.contains(&r.agent) {
            agents.push(r.agent);
        }
    }
    for agent in agents {
        let runs: Vec<_> = report.runs_for(agent).collect();
        let ticks: Vec<String> = (0..THRESHOLDS.len())
            .map(|k| {
                let ts: Vec<Option<u64>> = runs.iter().map(|r| r.ticks_to[k]).collect();
                match exp::median_ticks(&ts) {
                    Some(t) if t.is_finite() => format!("{}%: {t}", THRESHOLDS[k]),
                    _ => format!("{}%: not reached", THRESHOLDS[k]),
                }
            })
            .collect();
        let cov: Vec<f64> = runs.iter().map(|r| r.final_coverage_pct).collect();
        let _ = writeln!(
            s,
            "  {:<13} median ticks to {}; median final coverage {:.2}%",
            agent.as_str(),
            ticks.join(", "),
            exp::median(&cov).unwrap_or(0.0)
        );
    }
    s
}

pub fn convert(input: &Path, output: &Path) -> anyhow::Result<()> {
    let bytes = std::fs::read(input).with_context(|| format!("reading {}", input.display()))?;
    let maze = convert_bytes(&bytes).with_context(|| format!("converting {}", input.display()))?;
    std::fs::write(output, maze.to_text())
        .with_context(|| format!("writing {}", output.display()))?;
    Ok(())
}

pub fn generate_maze(seed: u64, style: Style, openings: usize, output: &Path) -> anyhow::Result<()> {
    let spec = MazeSpec {
        style: match style {
            Style::Backtracker => CarveStyle::Backtracker,
            Style::Prim => CarveStyle::Prim,
        },
        extra_openings: openings,
        ..MazeSpec::default()
    };
    std::fs::write(output, generate(&spec, seed).to_text())
        .with_context(|| format!("writing {}", output.display()))?;
    Ok(())
}

pub fn verify() -> anyhow::Result<()> {
    let workspace = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let status = std::process::Command::new(std::env::var("CARGO").unwrap_or_else(|_| "cargo".into()))
        .current_dir(&workspace)
        .args(["test", "--release", "-p", "mazecomm-run", "--test", "acceptance", "--", "--nocapture", "--test-threads", "1"])
        .status()
        .context("running cargo")?;
    if !status.success() {
        bail!("acceptance suite reported failures");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use mazecomm_core::exp::SweepParam;
    use mazecomm_core::maze::parse_maze;

    fn run(args: &[&str]) -> Result<(), Failure> {
        let cli = Cli::try_parse_from(std::iter::once("mazecomm").chain(args.iter().copied()))
            .expect("arguments parse");
        execute(cli)
    }

    fn code(args: &[&str]) -> (u8, String) {
        match run(args) {
            Ok(()) => (0, String::new()),
            Err(e) => (e.exit_code(), e.to_string()),
        }
    }

    fn shipped(name: &str) -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
    }

    fn csv_rows(path: &Path) -> Vec<Vec<String>> {
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect()
    }

    #[test]
    fn range_config_sweeps_five_ranges() {
        let cfg = exp::load_config(&shipped("paper_fig5.cfg")).unwrap();
        let sweep = cfg.sweep.unwrap();
        assert_eq!(sweep.param, SweepParam::RangePx);
        assert_eq!(sweep.values, vec![1500.0, 1250.0, 1000.0, 750.0, 500.0]);
        assert_eq!(cfg.agents, AgentKind::ALL.to_vec());
        assert_eq!(cfg.mission.robots, 4);
    }

    #[test]
    fn shipped_configs_load() {
        for name in ["comparative.cfg", "loss_sweep.cfg", "quick.cfg"] {
            exp::load_config(&shipped(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        let loss = exp::load_config(&shipped("loss_sweep.cfg")).unwrap();
        assert_eq!(loss.sweep.unwrap().values.len(), 10);
        assert_eq!(loss.mission.max_ticks, 800);
    }

    #[test]
    fn range_sweep_has_one_row_per_value_and_agent() {
        let out = tempfile::tempdir().unwrap();
        let (c, err) = code(&[
            "simulate",
            "--config",
            shipped("paper_fig5.cfg").to_str().unwrap(),
            "--out",
            out.path().to_str().unwrap(),
            "--seeds",
            "0",
        ]);
        assert_eq!(c, 0, "{err}");
        let rows = csv_rows(&out.path().join("range_sweep.csv"));
        assert_eq!(rows.len(), 5 * 3);
        assert_eq!(csv_rows(&out.path().join("runs.csv")).len(), 5 * 3 * 17);
        // without a loss sweep every run shares one loss value
        assert_eq!(csv_rows(&out.path().join("loss_sweep.csv")).len(), 3);
    }

    #[test]
    fn comparative_run_fills_every_column() {
        let out = tempfile::tempdir().unwrap();
        let report = simulate(&shipped("comparative.cfg"), out.path(), None, None, None).unwrap();
        let runs = csv_rows(&out.path().join("runs.csv"));
        assert_eq!(runs.len(), 255);
        for r in &runs {
            assert!(!r[8].is_empty(), "ticks_to_99 missing in {r:?}");
            let t: Vec<u64> = r[6..9].iter().map(|x| x.parse().unwrap()).collect();
            assert!(t[0] <= t[1] && t[1] <= t[2]);
        }
        let time = csv_rows(&out.path().join("time_per_coverage.csv"));
        assert_eq!(time.len(), 3 * 3);
        assert!(time.iter().all(|r| r[6] == "85"));
        let text = summary(&report, out.path());
        assert!(text.starts_with("255 runs"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn overrides_and_single_run_report() {
        let out = tempfile::tempdir().unwrap();
        let (c, _) = code(&[
            "simulate",
            "--config",
            shipped("quick.cfg").to_str().unwrap(),
            "--out",
            out.path().to_str().unwrap(),
            "--seeds",
            "3",
            "--agent",
            "memory_greedy",
            "--jobs",
            "2",
        ]);
        assert_eq!(c, 0);
        let runs = csv_rows(&out.path().join("runs.csv"));
        assert_eq!(runs.len(), 2);
        assert!(runs.iter().all(|r| r[0] == "memory_greedy" && r[2] == "3"));
    }

    #[test]
    fn bad_agent_is_rejected_by_the_parser() {
        let parsed = Cli::try_parse_from(["mazecomm", "simulate", "--config", "x", "--agent", "nope"]);
        assert!(parsed.is_err());
    }

    #[test]
    fn bad_config_exits_one_and_names_the_key() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.cfg");
        let o = dir.path().join("o");
        std::fs::write(&cfg, "loss_prob = 1.5\n").unwrap();
        let (c, err) = code(&["simulate", "--config", cfg.to_str().unwrap(), "--out", o.to_str().unwrap()]);
        assert_eq!(c, 1);
        assert!(err.contains("loss_prob"), "{err}");

        std::fs::write(&cfg, "colour = blue\n").unwrap();
        let (c, err) = code(&["simulate", "--config", cfg.to_str().unwrap(), "--out", o.to_str().unwrap()]);
        assert_eq!(c, 1);
        assert!(err.contains("colour"), "{err}");

        let missing = dir.path().join("missing.cfg");
        let (c, _) = code(&["simulate", "--config", missing.to_str().unwrap(), "--out", o.to_str().unwrap()]);
        assert_eq!(c, 1);
    }

    #[test]
    fn sealed_start_exits_two() {
        let dir = tempfile::tempdir().unwrap();
        // the top-left cell is walled in on every side
        std::fs::write(
            dir.path().join("sealed.txt"),
            "+-+-+-+-+\n| |     |\n+-+ + + +\n|       |\n+-+-+-+-+\n",
        )
        .unwrap();
        let cfg = dir.path().join("sealed.cfg");
        std::fs::write(&cfg, "mazes = sealed.txt\nseeds = 4\nrobots = 4\n").unwrap();
        let o = dir.path().join("o");
        let (c, err) = code(&["simulate", "--config", cfg.to_str().unwrap(), "--out", o.to_str().unwrap()]);
        assert_eq!(c, 2, "{err}");
        assert!(err.contains("sealed.txt") && err.contains("seed 4"), "{err}");
    }

    #[test]
    fn unreadable_maze_exits_one() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("junk.txt"), "+-+\n|x|\n+-+\n").unwrap();
        let cfg = dir.path().join("junk.cfg");
        std::fs::write(&cfg, "mazes = junk.txt\n").unwrap();
        let o = dir.path().join("o");
        let (c, _) = code(&["simulate", "--config", cfg.to_str().unwrap(), "--out", o.to_str().unwrap()]);
        assert_eq!(c, 1);
    }

    #[test]
    fn convert_wide_text_to_compact() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("wide.txt");
        std::fs::write(&input, "o---o---o\n|       |\no   o---o\n|       |\no---o---o\n").unwrap();
        let output = dir.path().join("compact.txt");
        let (c, err) = code(&["convert-maze", input.to_str().unwrap(), output.to_str().unwrap()]);
        assert_eq!(c, 0, "{err}");
        let text = std::fs::read_to_string(&output).unwrap();
        assert_eq!(text, "+-+-+\n|   |\n+ +-+\n|   |\n+-+-+\n");
        parse_maze(&text).unwrap();

        let none = dir.path().join("none");
        let (c, _) = code(&["convert-maze", none.to_str().unwrap(), output.to_str().unwrap()]);
        assert_eq!(c, 1);
    }

    #[test]
    fn generated_maze_is_usable_and_seeded() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        let b = dir.path().join("b.txt");
        for p in [&a, &b] {
            let args = ["generate-maze", "--seed", "9", "--style", "prim", "--openings", "5", p.to_str().unwrap()];
            assert_eq!(code(&args).0, 0);
        }
        let text = std::fs::read_to_string(&a).unwrap();
        assert_eq!(text, std::fs::read_to_string(&b).unwrap());
        let maze = parse_maze(&text).unwrap();
        assert_eq!((maze.width(), maze.height()), (16, 16));

        let cfg = dir.path().join("gen.cfg");
        std::fs::write(&cfg, "mazes = a.txt\nagent = dfs\nseeds = 1\n").unwrap();
        let o = dir.path().join("o");
        assert_eq!(code(&["simulate", "--config", cfg.to_str().unwrap(), "--out", o.to_str().unwrap()]).0, 0);
        let runs = csv_rows(&o.join("runs.csv"));
        assert_eq!(runs[0][1], "a.txt");
        assert_eq!(runs[0][17], "coverage_reached");
    }
}
