//! Command dispatch for the `manetga` binary.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::engine::{run, MetricsReport};
use crate::error::{ScenarioError, SimError};
use crate::gaopt::{backup_paths, evolve, route_demands, LinkGraph};
use crate::report;
use crate::scenario::{parse_scenario, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_SCENARIO: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "manetga", version, about = "MANET attack/defense simulator and GA link-weight optimizer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario; writes summary.csv, steps.csv and events.log.
    Simulate {
        scenario: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Overrides `param sim.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Optimize link weights; writes weights.csv, ga_history.csv and paths.csv.
    Optimize {
        scenario: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Overrides the optimizer seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run with defenses off and on; writes comparison.csv.
    AttackEval {
        scenario: PathBuf,
        /// Run a single arm instead of both.
        #[arg(long, value_enum)]
        defense: Option<Toggle>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the CSV summaries found in a directory.
    Report { dir: PathBuf },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Scenario {
        path: PathBuf,
        source: ScenarioError,
    },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Csv { .. } => EXIT_IO,
            CliError::Scenario { .. } | CliError::Invalid(_) | CliError::Sim(_) => EXIT_SCENARIO,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_scenario(&text).map_err(|source| CliError::Scenario {
        path: path.to_path_buf(),
        source,
    })
}

fn write_out(dir: &Path, files: &[(&str, String)]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (name, body) in files {
        let p = dir.join(name);
        fs::write(&p, body).map_err(io_err(&p))?;
    }
    Ok(())
}

pub fn cmd_simulate(path: &Path, out: &Path, seed: Option<u64>) -> Result<MetricsReport, CliError> {
    let mut sc = load_scenario(path)?;
    if let Some(s) = seed {
        sc.sim.seed = s;
    }
    let res = run(&sc)?;
    write_out(
        out,
        &[
            ("summary.csv", report::summary_csv(&res.report)),
            ("steps.csv", report::steps_csv(&res.report)),
            ("events.log", report::events_log(&res.log)),
        ],
    )?;
    Ok(res.report)
}

pub fn cmd_optimize(path: &Path, out: &Path, seed: Option<u64>) -> Result<String, CliError> {
    let mut sc = load_scenario(path)?;
    if sc.commodities.is_empty() {
        return Err(CliError::Invalid("scenario has no demand records".into()));
    }
    if let Some(s) = seed {
        sc.ga.seed = s;
    }
    let graph = LinkGraph::from_topology(&sc.topology);
    let evo = evolve(&graph, &sc.commodities, &sc.ga).map_err(SimError::from)?;
    let routed = route_demands(&graph, &evo.best, &sc.commodities).map_err(SimError::from)?;
    let routed = backup_paths(&graph, &evo.best, &routed).map_err(SimError::from)?;
    let paths = report::paths_csv(&sc.commodities, &routed);
    write_out(
        out,
        &[
            ("weights.csv", report::weights_csv(&graph, &evo.best)),
            ("ga_history.csv", report::history_csv(&evo.history)),
            ("paths.csv", paths.clone()),
        ],
    )?;
    Ok(format!(
        "best fitness {:.12} after {} generations\n{}",
        evo.best_breakdown.fitness,
        evo.history.len() - 1,
        report::table(&paths).unwrap_or(paths)
    ))
}

pub fn cmd_attack_eval(
    path: &Path,
    defense: Option<Toggle>,
    out: &Path,
    seed: Option<u64>,
) -> Result<String, CliError> {
    let mut sc = load_scenario(path)?;
    if sc.attackers.is_empty() {
        return Err(CliError::Invalid("scenario has no attacker records".into()));
    }
    if let Some(s) = seed {
        sc.sim.seed = s;
    }
    let arms: Vec<Toggle> = match defense {
        Some(t) => vec![t],
        None => vec![Toggle::Off, Toggle::On],
    };
    let mut results = Vec::new();
    for arm in arms {
        let mut s = sc.clone();
        s.defense.enabled = arm == Toggle::On;
        let label = if arm == Toggle::On { "on" } else { "off" };
        results.push((label, run(&s)?.report));
    }
    let refs: Vec<(&str, &MetricsReport)> = results.iter().map(|(l, r)| (*l, r)).collect();
    let csv = report::comparison_csv(&refs);
    write_out(out, &[("comparison.csv", csv.clone())])?;
    Ok(report::table(&csv).unwrap_or(csv))
}

pub fn cmd_report(dir: &Path) -> Result<String, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Io {
            path: dir.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        });
    }
    let mut out = String::new();
    for name in ["summary.csv", "comparison.csv", "paths.csv"] {
        let p = dir.join(name);
        if !p.exists() {
            continue;
        }
        let text = fs::read_to_string(&p).map_err(io_err(&p))?;
        let t = report::table(&text).map_err(|source| CliError::Csv {
            path: p.clone(),
            source,
        })?;
        out.push_str(&format!("== {name}\n{t}"));
    }
    if out.is_empty() {
        return Err(CliError::Io {
            path: dir.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no result files"),
        });
    }
    Ok(out)
}

/// Run a parsed command line; returns text for stdout.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Simulate { scenario, out, seed } => {
            let r = cmd_simulate(scenario, out, *seed)?;
            let csv = report::summary_csv(&r);
            Ok(report::table(&csv).unwrap_or(csv))
        }
        Command::Optimize { scenario, out, seed } => cmd_optimize(scenario, out, *seed),
        Command::AttackEval {
            scenario,
            defense,
            out,
            seed,
        } => cmd_attack_eval(scenario, *defense, out, *seed),
        Command::Report { dir } => cmd_report(dir),
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_SCENARIO } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(text) => {
            print!("{text}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
