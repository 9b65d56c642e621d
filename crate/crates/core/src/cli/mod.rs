//! The `nlsp` command-line tool.
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 for
//! configuration or usage errors. `summary.json` is written whenever a suite
//! ran, whatever the outcome.

mod config;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::suites::{self, Settings, SuiteReport};

pub use config::{BaseConfig, ConfigError, ExperimentConfig, WeightLaw};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "nlsp", version, about = "Checks for nonlinear Lebesgue spaces of metric-valued mappings")]
pub struct Cli {
    /// JSON experiment file
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for every random draw
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory for summary.json and CSV traces
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads
    #[arg(long, global = true, env = "NLSP_THREADS")]
    pub threads: Option<usize>,
    /// Override a tolerance, e.g. `--tolerance geodesic_speed=1e-8`
    #[arg(long = "tolerance", global = true, value_name = "NAME=VALUE", value_parser = parse_tolerance)]
    pub tolerances: Vec<(String, f64)>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Section isometries on random product mappings
    Fubini,
    /// Derivative and variation identities for curves of mappings
    Transport {
        /// Run the p = 1 indicator-curve scenario instead
        #[arg(long)]
        counterexample_p1: bool,
        /// Number of atoms for the indicator-curve scenario
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
    /// Pointwise-assembled geodesics and their speed traces
    Geodesic,
    /// Alexandrov comparison residuals in L^2
    Curvature,
    /// Energy certificates for length and geodesic structure
    Length,
    /// Speed identity for the L^p bundle norm
    Speed,
    /// Every suite
    All,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Fubini => "fubini",
            Command::Transport { counterexample_p1: true, .. } => "transport --counterexample-p1",
            Command::Transport { .. } => "transport",
            Command::Geodesic => "geodesic",
            Command::Curvature => "curvature",
            Command::Length => "length",
            Command::Speed => "speed",
            Command::All => "all",
        }
    }
}

fn parse_tolerance(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got '{s}'"))?;
    let value: f64 = value.trim().parse().map_err(|_| format!("'{value}' is not a number"))?;
    Ok((name.trim().to_string(), value))
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'a str,
    seed: u64,
    passed: bool,
    /// Metrics of a single-suite run, repeated at top level.
    #[serde(flatten)]
    metrics: BTreeMap<String, f64>,
    tolerances: BTreeMap<String, f64>,
    suites: &'a [SuiteReport],
}

fn run_command(command: &Command, s: &Settings) -> crate::Result<Vec<SuiteReport>> {
    Ok(match command {
        Command::Fubini => vec![suites::fubini(s)?],
        Command::Transport {
            counterexample_p1: true,
            n,
        } => vec![suites::counterexample(s, *n)?],
        Command::Transport { .. } => vec![suites::transport(s)?],
        Command::Geodesic => vec![suites::geodesic(s)?],
        Command::Curvature => vec![suites::curvature(s)?],
        Command::Length => vec![suites::length(s)?],
        Command::Speed => vec![suites::speed(s)?],
        Command::All => suites::all(s)?,
    })
}

fn write_artifacts(out: &Path, summary: &Summary<'_>, reports: &[SuiteReport]) -> std::io::Result<()> {
    std::fs::create_dir_all(out)?;
    let mut json = serde_json::to_string_pretty(summary).map_err(std::io::Error::other)?;
    json.push('\n');
    std::fs::write(out.join("summary.json"), json)?;
    for r in reports {
        for (name, contents) in &r.csv {
            std::fs::write(out.join(name), contents)?;
        }
    }
    Ok(())
}

/// Runs a parsed command line and returns the exit status.
pub fn run(cli: Cli) -> i32 {
    let mut stderr = std::io::stderr();
    let file = match &cli.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                let _ = writeln!(stderr, "config error: {e}");
                return EXIT_CONFIG;
            }
        },
        None => ExperimentConfig::default(),
    };
    let settings = match file.settings(cli.seed, &cli.tolerances) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(stderr, "config error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            let _ = writeln!(stderr, "config error: field `threads`: must be positive");
            return EXIT_CONFIG;
        }
        // a pool that already exists keeps its size; results do not depend on it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out = cli
        .out
        .clone()
        .or_else(|| file.output.clone())
        .unwrap_or_else(|| PathBuf::from("nlsp-out"));

    let reports = match run_command(&cli.command, &settings) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "config error: experiment cannot run: {e}");
            return EXIT_CONFIG;
        }
    };
    let passed = reports.iter().all(|r| r.passed);
    let metrics = match reports.as_slice() {
        [single] => single.metrics.clone(),
        _ => BTreeMap::new(),
    };
    let summary = Summary {
        command: cli.command.name(),
        seed: settings.seed,
        passed,
        metrics,
        tolerances: settings.tolerances.iter().map(|(k, v)| (k.clone(), *v)).collect(),
        suites: &reports,
    };
    if let Err(e) = write_artifacts(&out, &summary, &reports) {
        let _ = writeln!(stderr, "config error: cannot write to {}: {e}", out.display());
        return EXIT_CONFIG;
    }

    let mut stdout = std::io::stdout();
    for r in &reports {
        let _ = writeln!(stdout, "{:<18} {}", r.suite, if r.passed { "pass" } else { "FAIL" });
        for c in r.failures() {
            let bound = match (c.lower, c.upper) {
                (Some(l), Some(u)) => format!("expected in [{l:e}, {u:e}]"),
                (Some(l), None) => format!("expected >= {l:e}"),
                (None, Some(u)) => format!("expected <= {u:e}"),
                (None, None) => String::new(),
            };
            let _ = writeln!(
                stderr,
                "assertion failed: {}/{} ({}): value {:e}, {bound}",
                r.suite, c.name, c.invariant, c.value
            );
        }
    }
    let _ = writeln!(stdout, "summary written to {}", out.join("summary.json").display());
    if passed {
        EXIT_PASS
    } else {
        EXIT_ASSERTION
    }
}
