//! Command-line orchestration: configuration, experiment execution, and
//! report emission.
//!
//! Subcommands: `simulate` (Monte Carlo ensembles), `exact` (moment tables
//! and limit constants), `oracle` (exact finite-n laws), `verify` (the
//! verification suites). Flags can also be supplied through a flat JSON
//! config file (`--config`); explicit flags win. Exit codes: 0 success,
//! 1 verification failure, 2 usage, 3 runtime, 10 unknown kernel,
//! 11 invalid probabilities, 12 missing seed in verify mode, 13 i/o.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use thiserror::Error;

use crate::analytics;
use crate::montecarlo::{run_ensemble, EnsembleSpec};
use crate::oracle;
use crate::report;
use crate::verify::{self, Suite};
use crate::walk::{Checkpoints, MemoryKernel, ProbTriple, WalkError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_UNKNOWN_KERNEL: i32 = 10;
pub const EXIT_BAD_PROBABILITIES: i32 = 11;
pub const EXIT_MISSING_SEED: i32 = 12;
pub const EXIT_IO: i32 = 13;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown kernel `{0}`; expected full, first, last, first-last or window:<m>")]
    UnknownKernel(String),
    #[error("{0}")]
    InvalidProbabilities(WalkError),
    #[error("verify runs need an explicit --seed; wall-clock seeding is not allowed")]
    MissingSeed,
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::UnknownKernel(_) => EXIT_UNKNOWN_KERNEL,
            CliError::InvalidProbabilities(_) => EXIT_BAD_PROBABILITIES,
            CliError::MissingSeed => EXIT_MISSING_SEED,
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "erw",
    version,
    about = "Elephant random walks with delays: simulation, exact laws and verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run a Monte Carlo ensemble and emit checkpoint summaries.
    Simulate(CommonArgs),
    /// Emit exact moment tables and limit constants.
    Exact(CommonArgs),
    /// Emit exact finite-n laws from the dynamic-programming oracle.
    Oracle(CommonArgs),
    /// Run a verification suite; exits nonzero when a gating check fails.
    Verify(CommonArgs),
}

#[derive(Debug, Args, Default)]
struct CommonArgs {
    /// Flat JSON config file mirroring the flags; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Memory kernel: full, first, last, first-last or window:<m>.
    #[arg(long)]
    kernel: Option<String>,
    /// Probability of repeating the remembered step.
    #[arg(long)]
    p: Option<f64>,
    /// Probability of flipping the remembered step.
    #[arg(long)]
    q: Option<f64>,
    /// Probability of a zero step (the delay rate).
    #[arg(long)]
    r: Option<f64>,
    /// Horizon: number of steps per path.
    #[arg(long)]
    n: Option<u64>,
    /// Number of replicates in an ensemble.
    #[arg(long)]
    reps: Option<u64>,
    /// Master seed; replicate k derives its own stream from (seed, k).
    #[arg(long)]
    seed: Option<u64>,
    /// Checkpoint grid: pow2 (default), dense, or a comma-separated list.
    #[arg(long)]
    checkpoints: Option<String>,
    /// Output file; stdout when omitted (verify defaults to verify_report.json).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv (default) or json. Verify always writes JSON.
    #[arg(long)]
    format: Option<String>,
    /// Verification suite: 3.1, 4.1, 5.1, 6.1, 7 or all (default all).
    #[arg(long)]
    theorem: Option<String>,
    /// Condition oracle laws on a nonzero first step.
    #[arg(long)]
    first_nonzero: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    kernel: Option<String>,
    p: Option<f64>,
    q: Option<f64>,
    r: Option<f64>,
    n: Option<u64>,
    reps: Option<u64>,
    seed: Option<u64>,
    checkpoints: Option<String>,
    out: Option<PathBuf>,
    format: Option<String>,
    theorem: Option<String>,
    first_nonzero: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Simulate,
    Exact,
    Oracle,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckpointSpec {
    PowersOfTwo,
    Dense,
    List(Vec<u64>),
}

impl CheckpointSpec {
    fn build(&self, horizon: u64) -> Result<Checkpoints, CliError> {
        match self {
            CheckpointSpec::PowersOfTwo => Ok(Checkpoints::powers_of_two(horizon)),
            CheckpointSpec::Dense => Ok(Checkpoints::dense(horizon)),
            CheckpointSpec::List(points) => Checkpoints::explicit(points.clone(), horizon)
                .map_err(|e| CliError::Usage(e.to_string())),
        }
    }
}

/// Fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub kernel: Option<MemoryKernel>,
    pub params: Option<ProbTriple>,
    pub horizon: Option<u64>,
    pub replicates: Option<u64>,
    pub seed: Option<u64>,
    pub checkpoints: CheckpointSpec,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub suite: Suite,
    pub r_override: Option<f64>,
    pub first_nonzero: bool,
}

fn load_config_file(path: &PathBuf) -> Result<ConfigFile, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))
}

fn resolve(command: CommandKind, mut args: CommonArgs) -> Result<RunConfig, CliError> {
    let file = match &args.config {
        Some(path) => load_config_file(path)?,
        None => ConfigFile::default(),
    };
    // flags win over file values
    args.kernel = args.kernel.or(file.kernel);
    args.p = args.p.or(file.p);
    args.q = args.q.or(file.q);
    args.r = args.r.or(file.r);
    args.n = args.n.or(file.n);
    args.reps = args.reps.or(file.reps);
    args.seed = args.seed.or(file.seed);
    args.checkpoints = args.checkpoints.or(file.checkpoints);
    args.out = args.out.or(file.out);
    args.format = args.format.or(file.format);
    args.theorem = args.theorem.or(file.theorem);
    args.first_nonzero = args.first_nonzero || file.first_nonzero.unwrap_or(false);

    let kernel = match &args.kernel {
        Some(text) => {
            Some(MemoryKernel::parse(text).ok_or_else(|| CliError::UnknownKernel(text.clone()))?)
        }
        None => None,
    };
    let params = match args.r {
        Some(r) => {
            let triple = match (args.p, args.q) {
                (Some(p), Some(q)) => ProbTriple::new(p, q, r),
                (None, None) => ProbTriple::symmetric(r),
                (Some(p), None) => ProbTriple::new(p, 1.0 - p - r, r),
                (None, Some(q)) => ProbTriple::new(1.0 - q - r, q, r),
            };
            Some(triple.map_err(CliError::InvalidProbabilities)?)
        }
        None => {
            if args.p.is_some() || args.q.is_some() {
                return Err(CliError::Usage("--p/--q need --r as well".into()));
            }
            None
        }
    };
    let checkpoints = match args.checkpoints.as_deref() {
        None | Some("pow2") => CheckpointSpec::PowersOfTwo,
        Some("dense") => CheckpointSpec::Dense,
        Some(list) => {
            let points: Result<Vec<u64>, _> =
                list.split(',').map(|s| s.trim().parse::<u64>()).collect();
            CheckpointSpec::List(points.map_err(|e| {
                CliError::Usage(format!("bad --checkpoints list `{list}`: {e}"))
            })?)
        }
    };
    let format = match args.format.as_deref() {
        None | Some("csv") => OutputFormat::Csv,
        Some("json") => OutputFormat::Json,
        Some(other) => {
            return Err(CliError::Usage(format!("unknown format `{other}` (csv or json)")))
        }
    };
    let suite = match args.theorem.as_deref() {
        None => Suite::All,
        Some(text) => Suite::parse(text).ok_or_else(|| {
            CliError::Usage(format!("unknown suite `{text}` (3.1, 4.1, 5.1, 6.1, 7 or all)"))
        })?,
    };

    // subcommand-specific required fields
    match command {
        CommandKind::Simulate => {
            if kernel.is_none() {
                return Err(CliError::Usage("simulate needs --kernel".into()));
            }
            if params.is_none() {
                return Err(CliError::Usage("simulate needs --r".into()));
            }
            if args.n.is_none() {
                return Err(CliError::Usage("simulate needs --n".into()));
            }
            if args.reps.is_none() {
                return Err(CliError::Usage("simulate needs --reps".into()));
            }
        }
        CommandKind::Exact | CommandKind::Oracle => {
            if kernel.is_none() {
                return Err(CliError::Usage("this command needs --kernel".into()));
            }
            if params.is_none() {
                return Err(CliError::Usage("this command needs --r".into()));
            }
            if args.n.is_none() {
                return Err(CliError::Usage("this command needs --n".into()));
            }
        }
        CommandKind::Verify => {
            if args.seed.is_none() {
                return Err(CliError::MissingSeed);
            }
        }
    }

    Ok(RunConfig {
        command,
        kernel,
        params,
        horizon: args.n,
        replicates: args.reps,
        seed: args.seed,
        checkpoints,
        out: args.out,
        format,
        suite,
        r_override: args.r,
        first_nonzero: args.first_nonzero,
    })
}

/// Parses an argument vector (including the binary name) into a resolved
/// configuration.
pub fn parse_config(argv: Vec<OsString>) -> Result<RunConfig, CliError> {
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(e.to_string()))?;
    match cli.command {
        Cmd::Simulate(args) => resolve(CommandKind::Simulate, args),
        Cmd::Exact(args) => resolve(CommandKind::Exact, args),
        Cmd::Oracle(args) => resolve(CommandKind::Oracle, args),
        Cmd::Verify(args) => resolve(CommandKind::Verify, args),
    }
}

fn write_output(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(|source| {
                CliError::Io { path: "<stdout>".into(), source }
            })
        }
    }
}

fn csv_bytes(rows: &[report::CsvRow]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    report::write_csv(&mut buf, rows)
        .map_err(|e| CliError::Runtime(format!("csv serialization: {e}")))?;
    Ok(buf)
}

fn json_bytes(doc: &serde_json::Value) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(doc).expect("serializable document");
    bytes.push(b'\n');
    bytes
}

fn run_simulate(config: &RunConfig) -> Result<i32, CliError> {
    let kernel = config.kernel.expect("validated");
    let params = config.params.expect("validated");
    let horizon = config.horizon.expect("validated");
    let mut spec = EnsembleSpec::new(
        kernel,
        params,
        horizon,
        config.replicates.expect("validated"),
        config.seed.unwrap_or(0),
    );
    spec.checkpoints = config.checkpoints.build(horizon)?;
    let result = run_ensemble(&spec).map_err(|e| CliError::Runtime(e.to_string()))?;
    if result.summary.partial {
        eprintln!(
            "warning: partial results ({} of {} replicates within budget)",
            result.summary.completed_replicates, result.summary.requested_replicates
        );
    }
    let bytes = match config.format {
        OutputFormat::Csv => csv_bytes(&report::summary_rows(&result.summary))?,
        OutputFormat::Json => json_bytes(&report::summary_json(&result.summary)),
    };
    write_output(&config.out, &bytes)?;
    Ok(EXIT_OK)
}

fn run_exact(config: &RunConfig) -> Result<i32, CliError> {
    let kernel = config.kernel.expect("validated");
    let params = config.params.expect("validated");
    let horizon = config.horizon.expect("validated");
    let r = params.r();
    let constants = analytics::limit_constants(r);
    let (branch, table) = match kernel {
        MemoryKernel::Full => ("all", analytics::full_moment_table(horizon, r)),
        MemoryKernel::FirstAndLast => ("first=1", analytics::mixed_moment_table(horizon, r)),
        other => {
            return Err(CliError::Runtime(format!(
                "exact moment tables cover the full and first-last kernels, not {other}"
            )))
        }
    };
    let label = kernel.label();
    let bytes = match config.format {
        OutputFormat::Csv => {
            let mut rows = report::moment_rows(&label, r, branch, &table);
            rows.extend(report::constant_rows(&label, &constants));
            csv_bytes(&rows)?
        }
        OutputFormat::Json => {
            let doc = serde_json::json!({
                "schema": report::MOMENTS_SCHEMA,
                "moments": report::moments_json(&label, r, branch, &table),
                "constants": report::constants_json(&constants),
            });
            json_bytes(&doc)
        }
    };
    write_output(&config.out, &bytes)?;
    Ok(EXIT_OK)
}

fn run_oracle(config: &RunConfig) -> Result<i32, CliError> {
    let kernel = config.kernel.expect("validated");
    let params = config.params.expect("validated");
    let horizon = config.horizon.expect("validated");
    let r = params.r();
    let (branch, pmf) = if config.first_nonzero {
        let pmf = oracle::exact_conditional_distribution(kernel, horizon, r, true)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        ("first=1", pmf)
    } else {
        let pmf = oracle::exact_distribution(kernel, horizon, r)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        ("all", pmf)
    };
    let label = kernel.label();
    let bytes = match config.format {
        OutputFormat::Csv => csv_bytes(&report::pmf_rows(&label, r, horizon, branch, &pmf))?,
        OutputFormat::Json => json_bytes(&report::pmf_json(&label, r, horizon, branch, &pmf)),
    };
    write_output(&config.out, &bytes)?;
    Ok(EXIT_OK)
}

fn run_verify(config: &RunConfig) -> Result<i32, CliError> {
    let seed = config.seed.expect("validated");
    let reports = verify::run_suite(config.suite, seed, config.r_override);
    let doc = report::reports_json(config.suite.label(), seed, &reports);
    let out = config
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("verify_report.json"));
    write_output(&Some(out.clone()), &json_bytes(&doc))?;
    print!("{}", report::render_table(&reports));
    println!("report written to {}", out.display());
    if verify::gating_pass(&reports) {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_VERIFY_FAILED)
    }
}

/// Executes a resolved configuration, returning the process exit code.
pub fn run(config: &RunConfig) -> Result<i32, CliError> {
    let work = || match config.command {
        CommandKind::Simulate => run_simulate(config),
        CommandKind::Exact => run_exact(config),
        CommandKind::Oracle => run_oracle(config),
        CommandKind::Verify => run_verify(config),
    };
    match thread_cap() {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

/// Worker cap from `ERW_THREADS`, when set to a positive integer.
fn thread_cap() -> Option<usize> {
    std::env::var("ERW_THREADS").ok()?.parse::<usize>().ok().filter(|&t| t >= 1)
}

/// Full CLI entry point: parse, run, map errors to exit codes.
pub fn main_entry(argv: Vec<OsString>) -> i32 {
    // let clap print its own help/version/usage output
    let cli = match Cli::try_parse_from(argv.clone()) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.exit_code() == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    let resolved = match cli.command {
        Cmd::Simulate(args) => resolve(CommandKind::Simulate, args),
        Cmd::Exact(args) => resolve(CommandKind::Exact, args),
        Cmd::Oracle(args) => resolve(CommandKind::Oracle, args),
        Cmd::Verify(args) => resolve(CommandKind::Verify, args),
    };
    let config = match resolved {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    match run(&config) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(parts: &[&str]) -> Vec<OsString> {
        parts.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_the_canonical_simulate_line() {
        let config = parse_config(argv(&[
            "erw", "simulate", "--kernel", "full", "--r", "0.5", "--p", "0.25", "--q", "0.25",
            "--n", "4096", "--reps", "100000", "--seed", "7",
        ]))
        .unwrap();
        assert_eq!(config.command, CommandKind::Simulate);
        assert_eq!(config.kernel, Some(MemoryKernel::Full));
        assert_eq!(config.horizon, Some(4096));
        assert_eq!(config.replicates, Some(100000));
        assert_eq!(config.seed, Some(7));
        assert_eq!(config.format, OutputFormat::Csv);
        assert_eq!(config.checkpoints, CheckpointSpec::PowersOfTwo);
    }

    #[test]
    fn rejects_probabilities_off_the_simplex() {
        let err = parse_config(argv(&[
            "erw", "simulate", "--kernel", "full", "--r", "0.49", "--p", "0.25", "--q", "0.25",
            "--n", "16", "--reps", "1",
        ]))
        .unwrap_err();
        assert_eq!(err.exit_code(), EXIT_BAD_PROBABILITIES);
        assert!(err.to_string().contains("probabilities must sum to 1"), "{err}");
    }

    #[test]
    fn rejects_unknown_kernels_distinctly() {
        let err = parse_config(argv(&[
            "erw", "oracle", "--kernel", "banana", "--r", "0.5", "--n", "3",
        ]))
        .unwrap_err();
        assert_eq!(err.exit_code(), EXIT_UNKNOWN_KERNEL);
    }

    #[test]
    fn verify_requires_a_seed() {
        let err = parse_config(argv(&["erw", "verify", "--theorem", "5.1"])).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_MISSING_SEED);
        let ok = parse_config(argv(&["erw", "verify", "--theorem", "5.1", "--r", "0.3", "--seed", "11"]))
            .unwrap();
        assert_eq!(ok.suite, Suite::Theorem51);
        assert_eq!(ok.r_override, Some(0.3));
    }

    #[test]
    fn config_file_fills_gaps_and_flags_win() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(&path, r#"{"kernel": "last", "r": 0.3, "n": 12, "reps": 5, "seed": 1}"#)
            .unwrap();
        let config = parse_config(argv(&[
            "erw",
            "simulate",
            "--config",
            path.to_str().unwrap(),
            "--r",
            "0.5",
        ]))
        .unwrap();
        assert_eq!(config.kernel, Some(MemoryKernel::LastOnly));
        assert_eq!(config.params.unwrap().r(), 0.5); // flag beat the file
        assert_eq!(config.horizon, Some(12));
        let err = parse_config(argv(&["erw", "simulate", "--config", "/nonexistent.json"]))
            .unwrap_err();
        assert_eq!(err.exit_code(), EXIT_IO);
    }

    #[test]
    fn checkpoint_specs_parse() {
        let config = parse_config(argv(&[
            "erw", "simulate", "--kernel", "full", "--r", "0.5", "--n", "16", "--reps", "2",
            "--checkpoints", "1,8,16",
        ]))
        .unwrap();
        assert_eq!(config.checkpoints, CheckpointSpec::List(vec![1, 8, 16]));
        let err = parse_config(argv(&[
            "erw", "simulate", "--kernel", "full", "--r", "0.5", "--n", "16", "--reps", "2",
            "--checkpoints", "a,b",
        ]))
        .unwrap_err();
        assert_eq!(err.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn partial_probability_specs_are_completed() {
        let config = parse_config(argv(&[
            "erw", "oracle", "--kernel", "last", "--r", "0.5", "--n", "3", "--p", "0.3",
        ]))
        .unwrap();
        let params = config.params.unwrap();
        assert!((params.q() - 0.2).abs() < 1e-15);
    }
}
