//! `td2ip` command-line driver.
//!
//! Every subcommand is also callable as a function so tests can drive the
//! same code path without spawning a process.

mod commands;
mod error;
mod rundir;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_ablate, cmd_eval, cmd_fid, cmd_gen, cmd_project, cmd_train, load_sequences, weights_file,
    AblationOutput, GenManifest, NORM_MEAN, NORM_STD,
};
pub use error::{CliError, EXIT_RUNTIME, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "td2ip", version, about = "Train, evaluate and ablate skeleton motion forecasters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic motion dataset as MSQ files.
    Gen(GenArgs),
    /// Train one model and write a run directory.
    Train(TrainArgs),
    /// Evaluate saved weights on the validation split.
    Eval(EvalArgs),
    /// Train the five loss/decoder variants over several seeds.
    Ablate(AblateArgs),
    /// Fréchet distance between two feature CSV files.
    Fid(FidArgs),
    /// Project a feature CSV onto its two leading principal axes.
    Project(ProjectArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// Output directory for `seq_NNNN.msq` files and `manifest.json`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub sequences: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub frames: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub joints: u64,
    #[arg(long, default_value_t = 25.0)]
    pub fps: f64,
    #[arg(long, default_value = "mixed", value_parser = ["wave", "walk", "mixed"])]
    pub pattern: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write into an existing non-empty directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Run config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Directory of `.msq` sequences.
    #[arg(long)]
    pub data: PathBuf,
    /// Run directory to create.
    #[arg(long)]
    pub out: PathBuf,
    /// Write into an existing non-empty run directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Weights file written by `train`.
    #[arg(long)]
    pub weights: PathBuf,
    /// Directory of `.msq` sequences; the validation split is scored.
    #[arg(long)]
    pub data: PathBuf,
    /// Output path of the JSON report.
    #[arg(long)]
    pub report: PathBuf,
    /// Run config; defaults to `config.used.json` next to the weights.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for `pred_features.csv` and `gt_features.csv`.
    #[arg(long)]
    pub features_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AblateArgs {
    /// Base run config; loss terms and decoder mode are set per variant.
    #[arg(long)]
    pub config: PathBuf,
    /// Directory of `.msq` sequences.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for the table, JSON rows and per-run files.
    #[arg(long)]
    pub out: PathBuf,
    /// Write into an existing non-empty directory.
    #[arg(long)]
    pub force: bool,
    /// Train variants concurrently.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FidArgs {
    /// Feature CSV with header `f0,f1,...`.
    #[arg(long)]
    pub features_a: PathBuf,
    #[arg(long)]
    pub features_b: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ProjectArgs {
    /// Feature CSV with header `f0,f1,...`, at least 3 rows.
    #[arg(long)]
    pub features: PathBuf,
    /// Output CSV with header `x,y`.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a).map(|_| ()),
        Command::Train(a) => cmd_train(a).map(|_| ()),
        Command::Eval(a) => cmd_eval(a).map(|r| println!("{}", r.to_json())),
        Command::Ablate(a) => cmd_ablate(a).map(|o| print!("{}", o.table)),
        Command::Fid(a) => cmd_fid(a).map(|d| println!("{d:.6}")),
        Command::Project(a) => cmd_project(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
