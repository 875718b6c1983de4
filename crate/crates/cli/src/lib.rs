//! Batch driver for the conformal Poisson-kernel experiments.
//!
//! Every subcommand resolves a [`RunConfig`], runs one experiment, writes
//! `report.json` and its CSV tables into the output directory, and exits with
//! 0 when every check passes, 2 when a mathematical check fails, and 1 on
//! usage or configuration errors.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{Command, KSpec, RunConfig, SolverSection, VSpec};
pub use report::{Check, Report};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or parameter ranges (exit 1).
    Usage(String),
    /// A numerical procedure gave up (exit 2).
    Numerical(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 2,
            CliError::Usage(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<conformal_poisson::Error> for CliError {
    fn from(e: conformal_poisson::Error) -> Self {
        use conformal_poisson::Error as E;
        match e {
            E::Diverged(_)
            | E::DegenerateField(_)
            | E::ResolutionInsufficient { .. }
            | E::TruncationInsufficient { .. }
            | E::NonpositiveDeficit(..)
            | E::FitFailure { .. } => CliError::Numerical(e.to_string()),
            E::Io(io) => CliError::Io(io),
            other => CliError::Usage(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "conformal-poisson", version, about = "Experiments for the conformal Poisson-kernel integral equation")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Sphere grid resolution.
    #[arg(long, global = true)]
    resolution: Option<usize>,
    #[arg(long, global = true)]
    radial_order: Option<usize>,
    #[arg(long, global = true)]
    grading: Option<f64>,
    /// Solver exponent.
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Comma-separated concentration parameters.
    #[arg(long, global = true)]
    lambda: Option<String>,
    /// Comma-separated, strictly decreasing exponents.
    #[arg(long, global = true)]
    schedule: Option<String>,
    /// Comma-separated sphere resolutions.
    #[arg(long, global = true)]
    resolutions: Option<String>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: available cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// constant[:c] | zn_plus_2 | zn2_plus_1 | flat:K0,delta,q
    #[arg(long = "K", global = true)]
    k: Option<String>,
    /// constant[:c] | glued:lambda | random
    #[arg(long, global = true)]
    v: Option<String>,
    /// none | rows | balanced | moments
    #[arg(long, global = true)]
    normalization: Option<String>,
    /// cached | matrix_free
    #[arg(long, global = true)]
    mode: Option<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Sub {
    /// Sharp trace inequality on a random panel and on conformal images of 1.
    VerifyInequality,
    /// Carleman inequality deficits in the plane.
    Carleman,
    /// Multi-start subcritical maximization.
    Solve,
    /// Warm-started solves along a decreasing exponent schedule.
    Continuation,
    /// Kazdan-Warner pairings against the conformal vector fields.
    KazdanWarner,
    /// Energy of the glued trial function and its power-law fit.
    TrialEnergy,
    /// Blow-up rescaling and bubble fit of the concentrating family.
    BlowupDiagnostic,
    /// Extension and row-sum errors under sphere refinement.
    GridConvergence,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::VerifyInequality => Command::VerifyInequality,
            Sub::Carleman => Command::Carleman,
            Sub::Solve => Command::Solve,
            Sub::Continuation => Command::Continuation,
            Sub::KazdanWarner => Command::KazdanWarner,
            Sub::TrialEnergy => Command::TrialEnergy,
            Sub::BlowupDiagnostic => Command::BlowupDiagnostic,
            Sub::GridConvergence => Command::GridConvergence,
        }
    }
}

fn enum_flag<T: serde::de::DeserializeOwned>(s: &str, what: &str) -> Result<T, CliError> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| CliError::usage(format!("unknown {what} `{s}`")))
}

fn assemble(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if cli.n.is_some() {
        cfg.n = cli.n;
    }
    if cli.resolution.is_some() {
        cfg.resolution = cli.resolution;
    }
    if cli.radial_order.is_some() {
        cfg.radial_order = cli.radial_order;
    }
    if let Some(g) = cli.grading {
        cfg.grading = g;
    }
    if let Some(p) = cli.p {
        cfg.solver.p = p;
    }
    if let Some(l) = &cli.lambda {
        cfg.lambda = config::parse_list(l, "lambda")?;
    }
    if let Some(s) = &cli.schedule {
        cfg.schedule = config::parse_list(s, "schedule")?;
    }
    if let Some(r) = &cli.resolutions {
        cfg.resolutions = r
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| t.trim().parse().map_err(|_| CliError::usage(format!("resolutions: `{t}` is not an integer"))))
            .collect::<Result<_, _>>()?;
    }
    if cli.samples.is_some() {
        cfg.samples = cli.samples;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    if let Some(k) = &cli.k {
        cfg.k = KSpec::parse(k)?;
    }
    if let Some(v) = &cli.v {
        cfg.v = VSpec::parse(v)?;
    }
    if let Some(s) = &cli.normalization {
        cfg.normalization = Some(enum_flag(s, "normalization")?);
    }
    if let Some(s) = &cli.mode {
        cfg.operator_mode = Some(enum_flag(s, "operator mode")?);
    }
    Ok(cfg)
}

fn run_parsed(cli: Cli) -> Result<Report, CliError> {
    let cmd: Command = cli.command.into();
    let cfg = assemble(&cli)?.resolve(cmd)?;
    let threads = match cli.threads {
        Some(0) => return Err(CliError::usage("--threads must be positive")),
        Some(t) => t,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    let report = pool.install(|| commands::execute(cmd, &cfg))?;
    report.write(&cfg.output_dir)?;
    Ok(report)
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_parsed(cli) {
        Ok(report) => {
            for c in &report.checks {
                println!("{} {}: {:e} {} {:e}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.relation, c.bound);
            }
            println!("report written to {}", report.config.output_dir.join("report.json").display());
            if report.passed {
                0
            } else {
                for c in report.checks.iter().filter(|c| !c.passed) {
                    eprintln!("check failed: {} ({:e} {} {:e} violated)", c.name, c.value, c.relation, c.bound);
                }
                2
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
