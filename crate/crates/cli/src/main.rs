use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

mod commands;
mod config;

/// Exit status for argument errors, as in sysexits.
const EXIT_USAGE: u8 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
            CliError::Usage(_) => EXIT_USAGE,
        }
    }
}

#[derive(Parser)]
#[command(name = "galelab", version, about = "Multihead finite-state gambler experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Where the sequence comes from: a `.seq` file, or a seeded generator.
#[derive(Args, Debug, Clone, Default)]
pub struct SeqArgs {
    /// Packed sequence file written by `gen-seq`.
    #[arg(long)]
    pub seq: Option<PathBuf>,
    /// raw, F, Fprime or Fdoubleprime (ignored with --seq).
    #[arg(long)]
    pub variant: Option<String>,
    /// Family parameter h (ignored with --seq).
    #[arg(long)]
    pub h: Option<usize>,
    /// Seed of the underlying pseudorandom source (ignored with --seq).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// JSON config, or a previous artifact to re-run. Flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a sequence prefix to a packed `.seq` file.
    GenSeq {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build one of the explicit gamblers and save it as JSON.
    BuildGambler {
        #[command(flatten)]
        common: Common,
        /// parity, Fprime, Fdoubleprime or uniform.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        h: Option<usize>,
        /// Alphabet size, uniform only.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Average two gamblers into one with h1 + h2 - 1 heads.
    Combine {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        g1: Option<String>,
        #[arg(long)]
        g2: Option<String>,
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a gambler over a sequence and write its capital trajectory.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Gambler file, or shorthand such as `parity:h=2`.
        #[arg(long)]
        gambler: Option<String>,
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long)]
        n: Option<u64>,
        /// exact or log2.
        #[arg(long)]
        mode: Option<String>,
        /// Comma-separated s values for s-gale columns, e.g. `1/2,17/20`.
        #[arg(long)]
        s: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Structural checks: validate, martingale, speeds, family, averaging, modes.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        check: Option<String>,
        #[arg(long)]
        gambler: Option<String>,
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long)]
        n: Option<u64>,
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long)]
        g1: Option<String>,
        #[arg(long)]
        g2: Option<String>,
        #[arg(long)]
        epsilon: Option<String>,
    },
    /// Run sampled gamblers against a sequence and report the best exponent.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Head count of the sampled gamblers.
        #[arg(long = "heads")]
        heads: Option<usize>,
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        max_t: Option<usize>,
        #[arg(long)]
        max_q: Option<usize>,
        #[arg(long)]
        bet_den: Option<u32>,
        #[arg(long)]
        rng_seed: Option<u64>,
        /// Skip block-parity schedules.
        #[arg(long)]
        no_structured: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-variant exponent matrix plus the averaged gambler.
    Instability {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        h: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predimension upper bounds witnessed by the given gamblers.
    EstimateDim {
        #[command(flatten)]
        common: Common,
        /// Repeatable.
        #[arg(long)]
        gambler: Vec<String>,
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarise an artifact written by another subcommand.
    Report {
        #[arg(long)]
        input: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    use commands::*;
    match cli.command {
        Command::GenSeq { common, seq, n, out } => gen_seq(&common, seq, n, out),
        Command::BuildGambler { common, kind, h, k, out } => build_gambler(&common, kind, h, k, out),
        Command::Combine { common, g1, g2, epsilon, out } => combine(&common, g1, g2, epsilon, out),
        Command::Simulate { common, gambler, seq, n, mode, s, out } => {
            simulate(&common, gambler, seq, n, mode, s, out)
        }
        Command::Verify { common, check, gambler, depth, n, seq, g1, g2, epsilon } => verify(
            &common,
            VerifyArgs { check, gambler, depth, n, seq, g1, g2, epsilon },
        ),
        Command::Sweep {
            common,
            heads,
            seq,
            n,
            samples,
            max_t,
            max_q,
            bet_den,
            rng_seed,
            no_structured,
            out,
        } => sweep(
            &common,
            SweepArgs {
                heads,
                seq,
                n,
                samples,
                max_t,
                max_q,
                bet_den,
                rng_seed,
                structured: if no_structured { Some(false) } else { None },
                out,
            },
        ),
        Command::Instability { common, h, seed, n, epsilon, out } => {
            instability(&common, h, seed, n, epsilon, out)
        }
        Command::EstimateDim { common, gambler, seq, n, out } => {
            estimate_dim(&common, gambler, seq, n, out)
        }
        Command::Report { input } => report(&input),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
