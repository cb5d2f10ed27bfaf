//! `elo-rcc`: generate match datasets, train and evaluate rating models,
//! reproduce the benchmark tables and inspect saved states.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{GeneratorKind, RunConfig};

#[derive(Parser)]
#[command(name = "elo-rcc", version, about = "Elo residual counter category rating toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic match CSV plus its player map and metadata.
    Generate {
        #[arg(value_enum)]
        dataset: GeneratorKind,
        #[arg(long, default_value_t = config::DEFAULT_N)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validated strength-relation accuracy of one model.
    Evaluate {
        /// TOML file with run configuration; flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        run: RunConfig,
        /// JSON report destination (also printed to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// One-row CSV report destination.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Also write the fold assignment that was used.
        #[arg(long)]
        save_folds: Option<PathBuf>,
    },
    /// Train one model on a whole dataset and save its state.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        run: RunConfig,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regenerate the accuracy tables for the synthetic games (and for
    /// external datasets when supplied).
    Reproduce {
        #[arg(value_enum)]
        table: commands::Table,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = config::DEFAULT_N)]
        n: usize,
        #[arg(long, default_value_t = config::DEFAULT_EPOCHS)]
        epochs: usize,
        #[arg(long, default_value_t = config::DEFAULT_FOLDS)]
        n_folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Restrict to these datasets (rps, acg, aoe2, hearthstone).
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        #[arg(long)]
        aoe2: Option<PathBuf>,
        #[arg(long)]
        aoe2_folds: Option<PathBuf>,
        #[arg(long)]
        hearthstone: Option<PathBuf>,
        #[arg(long)]
        hearthstone_folds: Option<PathBuf>,
    },
    /// Print a saved model state.
    Inspect {
        state: PathBuf,
        /// Only show counter-table rows and columns that are some player's
        /// best category.
        #[arg(long)]
        used_only: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Rewrite a third-party match export into the match CSV schema.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value = "player_i")]
        col_i: String,
        #[arg(long, default_value = "player_j")]
        col_j: String,
        #[arg(long, default_value = "outcome")]
        col_outcome: String,
        /// Single-byte field delimiter; `tab` for tab-separated input.
        #[arg(long, default_value = ",")]
        delimiter: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<elo_rcc::Error>() {
            return if e.is_io() { 2 } else { 1 };
        }
        if cause.downcast_ref::<config::ConfigError>().is_some() {
            return 1;
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate { dataset, n, seed, out } => commands::generate(dataset, n, seed, &out),
        Command::Evaluate {
            config,
            run,
            out,
            csv,
            save_folds,
        } => commands::evaluate(config.as_deref(), run, out.as_deref(), csv.as_deref(), save_folds.as_deref()),
        Command::Train { config, run, out } => commands::train(config.as_deref(), run, &out),
        Command::Reproduce {
            table,
            out_dir,
            n,
            epochs,
            n_folds,
            seed,
            only,
            aoe2,
            aoe2_folds,
            hearthstone,
            hearthstone_folds,
        } => commands::reproduce(commands::ReproduceArgs {
            table,
            out_dir,
            n,
            epochs,
            n_folds,
            seed,
            only,
            external: vec![
                ("aoe2", aoe2, aoe2_folds),
                ("hearthstone", hearthstone, hearthstone_folds),
            ],
        }),
        Command::Inspect { state, used_only, .. } => commands::inspect(&state, used_only),
        Command::Convert {
            input,
            output,
            col_i,
            col_j,
            col_outcome,
            delimiter,
            ..
        } => commands::convert(&input, &output, col_i, col_j, col_outcome, &delimiter),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
