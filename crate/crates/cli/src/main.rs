//! `cursor-hmm`: vectorize cursor traces, train per-task HMMs, classify.
//!
//! Exit status: 0 on success, 1 on domain errors, 2 on usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;

/// Environment variable pointing at a directory that replaces the bundled fixtures.
pub const FIXTURES_ENV: &str = "CURSOR_HMM_FIXTURES";

#[derive(Debug, Parser)]
#[command(name = "cursor-hmm", version, about = "Infer user tasks from mouse-cursor traces with per-task HMMs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Resample a cursor trace every DS ms and map it onto areas of interest.
    Vectorize {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        layout: PathBuf,
        /// Sampling interval in milliseconds.
        #[arg(long, default_value_t = cursor_hmm::aoi::DEFAULT_DS_MS, allow_hyphen_values = true)]
        ds: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-estimate a model with Baum-Welch on every sequence file in a directory.
    Train {
        #[arg(long)]
        init: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Keep the starting model's initial distribution.
        #[arg(long)]
        freeze_pi: bool,
        #[arg(long, default_value_t = 100)]
        max_iters: usize,
        /// Relative log-likelihood improvement below which training stops.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Smallest probability any re-estimated entry may take.
        #[arg(long, default_value_t = 1e-6)]
        floor: f64,
    },
    /// Score a sequence under every model in a directory and pick the best task.
    Classify {
        /// Directory of model files; each file stem is a task name.
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        seq: PathBuf,
        #[arg(long)]
        json: bool,
        /// Flag results whose margin is below this value.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Draw a state path and symbol sequence from a model.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        length: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fixation percentage per AOI for one sequence, or per-task means over a directory.
    Report {
        #[arg(long, required_unless_present = "aggregate", conflicts_with = "aggregate")]
        seq: Option<PathBuf>,
        /// Directory whose sub-directories (or the directory itself) hold one task's sequences.
        #[arg(long)]
        aggregate: Option<PathBuf>,
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Re-derive the decision column of the published results table.
    #[command(name = "verify-table2")]
    VerifyTable2,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Vectorize {
            trace,
            layout,
            ds,
            out,
        } => commands::vectorize(&trace, &layout, ds, &out),
        Command::Train {
            init,
            data,
            out,
            freeze_pi,
            max_iters,
            tol,
            floor,
        } => commands::train(
            &init,
            &data,
            &out,
            cursor_hmm::training::TrainingConfig {
                max_iters,
                ll_tolerance: tol,
                prob_floor: floor,
                freeze_pi,
            },
        ),
        Command::Classify {
            models,
            seq,
            json,
            threshold,
        } => commands::classify(&models, &seq, json, threshold),
        Command::Sample {
            model,
            length,
            seed,
            out,
        } => commands::sample(&model, length, seed, &out),
        Command::Report {
            seq,
            aggregate,
            layout,
            json,
        } => match (seq, aggregate) {
            (Some(seq), _) => commands::report(&seq, &layout, json),
            (None, Some(dir)) => commands::report_aggregate(&dir, &layout, json),
            (None, None) => Err(commands::CliError::Usage(
                "either --seq or --aggregate is required".into(),
            )),
        },
        Command::VerifyTable2 => commands::verify_table2(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
