//! `breathgest`: generate synthetic sessions, augment, train, cross-validate
//! and replay recordings through the streaming optimizer.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "breathgest", version, about = "Breathing-gesture recognition pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize one series per subject and scenario.
    Gen {
        #[command(flatten)]
        common: Common,
    },
    /// Write the fivefold augmented copy of a series set.
    Augment {
        #[command(flatten)]
        common: Common,
        /// Directory holding the generated series and manifest.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Train a network on every series of a set.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Continue from the weights already in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Leave-one-person-out or leave-one-scenario-out cross-validation.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
        /// `lopo` or `loso`.
        #[arg(long)]
        mode: Option<String>,
        /// `s1,s2,s3`, any subset, or `none`.
        #[arg(long)]
        strategies: Option<String>,
    },
    /// Replay a series through a trained network and the streaming optimizer.
    Stream {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        strategies: Option<String>,
    },
    /// Summarize an evaluation report and re-emit its CSV files.
    Report {
        #[command(flatten)]
        common: Common,
        /// `report.json` or the directory containing it.
        #[arg(long)]
        report: PathBuf,
    },
}

/// Process exit status: usage errors, bad input data and everything else
/// are told apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Exit {
    Usage = 1,
    Data = 2,
    Runtime = 3,
}

fn classify(err: &anyhow::Error) -> Exit {
    use breathgest::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::InvalidConfig(_) | E::UnknownKey(_) => Exit::Usage,
                E::Io(io) => io_exit(io),
                _ => Exit::Data,
            };
        }
        if cause.downcast_ref::<toml::de::Error>().is_some() || cause.downcast_ref::<commands::UsageError>().is_some() {
            return Exit::Usage;
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return Exit::Data;
        }
        if let Some(io) = cause.downcast_ref::<std::io::Error>() {
            return io_exit(io);
        }
    }
    Exit::Runtime
}

fn io_exit(e: &std::io::Error) -> Exit {
    use std::io::ErrorKind::*;
    match e.kind() {
        NotFound | InvalidData | UnexpectedEof => Exit::Data,
        _ => Exit::Runtime,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { Exit::Usage as u8 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err) as u8)
        }
    }
}
