//! Command-line driver: reads one JSON run configuration, evaluates the
//! requested table or record, and writes CSV or JSON. Exit codes: 0 on
//! success, 1 on I/O failure, 2 on config errors, 3 on numerical
//! failures (indefinite matrices, truncation leakage).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

mod config;
mod output;
mod run;

use config::{Command, Format};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "estbounds", version, about = "Variance lower bounds for discrete estimation models")]
struct Args {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output destination; overrides the config, defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; overrides the config.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Generator seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Qubit visibility for the figure sweeps; overrides the config.
    #[arg(long)]
    r: Option<f64>,
    /// Suppress the summary line on stderr.
    #[arg(long)]
    quiet: bool,
}

fn execute(args: &Args) -> Result<(usize, usize, String), CliError> {
    let cfg = config::load(&args.config).map_err(CliError::Config)?;
    let format = args.format.or(cfg.format).unwrap_or(Format::Csv);
    let out = args.out.clone().or_else(|| cfg.output.clone());
    let dest = out
        .as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "stdout".into());
    let out = out.as_deref();
    let (rows, bytes) = match cfg.command {
        Command::Fig1 => {
            let rows = run::fig1(&cfg, args.r)?;
            Ok((rows.len(), output::write_table(&rows, format, out)?))
        }
        Command::Fig2 => {
            let rows = run::fig2(&cfg, args.r)?;
            Ok((rows.len(), output::write_table(&rows, format, out)?))
        }
        Command::Fig3 => {
            let rows = run::fig3(&cfg, args.seed)?;
            Ok((rows.len(), output::write_table(&rows, format, out)?))
        }
        Command::Bound => {
            let record = run::bound(&cfg)?;
            Ok((1, output::write_record(&record, format, out)?))
        }
        Command::QuantumCheck => {
            let rows = run::quantum_check(&cfg)?;
            Ok((rows.len(), output::write_table(&rows, format, out)?))
        }
    }?;
    Ok((rows, bytes, dest))
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok((rows, bytes, dest)) => {
            if !args.quiet {
                eprintln!("{rows} rows, {bytes} bytes -> {dest}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
