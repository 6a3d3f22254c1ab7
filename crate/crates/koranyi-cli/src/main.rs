//! `koranyi`: command-line experiments on Korányi spheres.
//!
//! Every subcommand writes a long-format CSV (stdout or `--out`) ending in
//! a `#config-hash`/`#version` trailer, and a JSON summary with per-check
//! pass/fail, runtime and the resolved configuration on stderr. Exit codes:
//! 0 when every check passes, 1 on a failed check, 2 on bad arguments.

mod average;
mod commands;

use clap::{Args, Parser, Subcommand, ValueEnum};
use koranyi::exec::{with_threads, Exec};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Debug, Parser, Serialize)]
#[command(name = "koranyi", version, about = "Spherical averages on Heisenberg groups")]
struct Cli {
    /// Worker threads (0: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Run sweeps on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Check the structured-matrix identities on random instances.
    VerifyLemmas(VerifyArgs),
    /// Rotational and cinematic curvature at seeded samples.
    Curvature(CurvatureArgs),
    /// Scaling exponents of the counterexample families.
    Scaling(ScalingArgs),
    /// Exact vertices of the L^p improving regions and point classification.
    Region(RegionArgs),
    /// Averages or maximal functions of a configured test function.
    Average(AverageArgs),
    /// Quadrature nodes and weights on the unit Korányi sphere.
    SphereMesh(MeshArgs),
    /// Polar-coordinates identity on the Korányi Gaussian.
    PolarCheck(PolarArgs),
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum CurvatureRegion {
    Np,
    Eq,
    Im,
    NpRescaled,
}

#[derive(Debug, Args, Serialize)]
struct CurvatureArgs {
    #[arg(long, value_enum)]
    region: CurvatureRegion,
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Rescaling levels for `np-rescaled` (repeat or comma-separate).
    #[arg(long, value_delimiter = ',', default_values_t = [8u32, 10, 12, 14])]
    ell: Vec<u32>,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Relative singular-value threshold for rank decisions.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FamilyArg {
    Knapp,
    Ball,
    Annulus,
    SingleShell,
    All,
}

#[derive(Debug, Args, Serialize)]
struct ScalingArgs {
    #[arg(long, value_enum, default_value_t = FamilyArg::All)]
    family: FamilyArg,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Ladder `δ = 2^{-k}` starts at this `k`.
    #[arg(long, default_value_t = 3)]
    k_min: i32,
    /// Last `k` of the ladder (default 9 for n = 1, 6 otherwise).
    #[arg(long)]
    k_max: Option<i32>,
    /// Reported quantile of the sampled lower bounds.
    #[arg(long, default_value_t = 0.1)]
    quantile: f64,
    /// Radius `t` of the ANNULUS and KNAPP families.
    #[arg(long, default_value_t = 1.5)]
    t: f64,
}

#[derive(Debug, Args, Serialize)]
struct RegionArgs {
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Exponent p (integer, decimal, a/b or inf); requires --q.
    #[arg(long, requires = "q")]
    p: Option<String>,
    /// Exponent q; requires --p.
    #[arg(long, requires = "p")]
    q: Option<String>,
}

#[derive(Debug, Args, Serialize)]
struct AverageArgs {
    /// JSON experiment configuration (schema in the README).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct MeshArgs {
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 32)]
    n_rho: usize,
    #[arg(long, default_value_t = 32)]
    n_sph: usize,
}

#[derive(Debug, Args, Serialize)]
struct PolarArgs {
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 16)]
    n_rho: usize,
    #[arg(long, default_value_t = 16)]
    n_sph: usize,
    /// Also rerun with the sphere sizes doubled this many times.
    #[arg(long, default_value_t = 0)]
    doublings: u32,
    #[arg(long, default_value_t = 3.0)]
    r_max: f64,
    #[arg(long, default_value_t = 64)]
    r_nodes: usize,
    /// Gauss–Legendre nodes per axis of the Lebesgue grid (default: 32 for
    /// n = 1, 24 for n = 2).
    #[arg(long)]
    grid_nodes: Option<usize>,
}

/// One named assertion of a run.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub requirement: String,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, requirement: impl Into<String>, pass: bool) -> Self {
        Check { name: name.into(), value, requirement: requirement.into(), pass }
    }
}

/// Result of a subcommand.
pub struct Outcome {
    pub table: koranyi::report::Table,
    pub checks: Vec<Check>,
    /// Extra summary data echoed in the JSON.
    pub details: serde_json::Value,
}

fn dispatch(cli: &Cli, exec: Exec) -> Result<Outcome, String> {
    let r = match &cli.command {
        Command::VerifyLemmas(a) => commands::verify_lemmas(a),
        Command::Curvature(a) => commands::curvature(a, exec),
        Command::Scaling(a) => commands::scaling(a, exec),
        Command::Region(a) => commands::region(a),
        Command::Average(a) => average::run(&a.config, exec),
        Command::SphereMesh(a) => commands::sphere_mesh(a),
        Command::PolarCheck(a) => commands::polar_check(a, exec),
    };
    r.map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    let mut config = serde_json::to_value(&cli).expect("arguments serialize");
    if let Command::Average(a) = &cli.command {
        // Hash the experiment itself, not where it was read from.
        match average::load(&a.config) {
            Ok(c) => config["command"]["average"] = serde_json::to_value(c).expect("config serializes"),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
    }
    // Output path and execution knobs do not change the numbers.
    if let Some(obj) = config.as_object_mut() {
        for key in ["out", "threads", "sequential"] {
            obj.remove(key);
        }
    }
    let config_json = config.to_string();

    let start = Instant::now();
    let outcome = match with_threads(cli.threads, || dispatch(&cli, exec)) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let csv = outcome.table.to_csv(&config_json);
    let written = match &cli.out {
        Some(p) => std::fs::write(p, csv.as_bytes()).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(csv.as_bytes()).map_err(|e| e.to_string())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let pass = outcome.checks.iter().all(|c| c.pass);
    let summary = serde_json::json!({
        "pass": pass,
        "checks": outcome.checks,
        "details": outcome.details,
        "runtime_s": start.elapsed().as_secs_f64(),
        "config_hash": koranyi::report::config_hash(&config_json),
        "config": config,
    });
    eprintln!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
