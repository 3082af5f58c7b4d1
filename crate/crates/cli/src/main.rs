#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod figures;
mod modes;
mod table;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use config::ExperimentConfig;
use table::{Format, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Mmse,
    Drf,
    DrfOptimal,
    DDagger,
    AfSets,
    Bounds,
    OracleCheck,
    Figure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Ndjson,
}

/// Distortion-rate sweeps for sampled Gaussian sources.
#[derive(Debug, Parser)]
#[command(name = "subnyq", version)]
struct Args {
    mode: Mode,

    /// Experiment configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output file; defaults to the config's `output`, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Frequency cells for filter-bank eigenvalue curves.
    #[arg(long)]
    grid: Option<usize>,

    /// Figure name for `figure` mode.
    #[arg(long)]
    figure: Option<String>,

    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input; exit code 2.
    Config(String),
    /// Numerical failure; exit code 3.
    Numerical(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<subnyq_core::Error> for CliError {
    fn from(e: subnyq_core::Error) -> Self {
        match e {
            subnyq_core::Error::InvalidArgument(_) => CliError::Config(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("SUBNYQ_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("SUBNYQ_THREADS: expected a positive integer, got '{v}'")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Numerical(format!("cannot start worker pool: {e}")))
}

fn execute(args: &Args) -> Result<(Table, Option<PathBuf>), CliError> {
    if args.mode == Mode::Figure {
        let name = args
            .figure
            .as_deref()
            .ok_or_else(|| CliError::Config("--figure is required in figure mode".into()))?;
        return Ok((figures::figure(name)?, args.out.clone()));
    }
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(g) = args.grid {
        if g < 16 {
            return Err(CliError::Config(format!("--grid: must be at least 16, got {g}")));
        }
        cfg.grid = g;
    }
    let out = args.out.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from));
    Ok((modes::run(args.mode, &cfg)?, out))
}

fn main_inner(args: &Args) -> Result<(), CliError> {
    let pool = thread_pool()?;
    let (table, out) = pool.install(|| execute(args))?;
    if table.has_nan() {
        return Err(CliError::Numerical("result contains NaN".into()));
    }
    let format = match args.format {
        OutputFormat::Csv => Format::Csv,
        OutputFormat::Ndjson => Format::Ndjson,
    };
    let text = table.render(format);
    match out {
        Some(p) => {
            std::fs::write(&p, text).map_err(|e| CliError::Config(format!("--out: cannot write {}: {e}", p.display())))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Numerical(format!("cannot write output: {e}"))),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match main_inner(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("subnyq: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
