mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cryptopred::models::ModelKind;

use config::{ProviderKind, RunConfig};
use error::Result;

/// Predictive-statement classification for cryptocurrency tweets.
///
/// Exit codes: 0 success, 1 usage error, 2 data error, 3 provider error.
#[derive(Parser)]
#[command(name = "cryptopred", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
pub struct GlobalArgs {
    /// TOML run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dataset file (.jsonl or .csv)
    #[arg(long, global = true)]
    pub dataset: Option<PathBuf>,
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub task: Option<u8>,
    /// Model to run; repeat for several
    #[arg(long = "model", global = true, value_parser = parse_model)]
    pub models: Vec<ModelKind>,
    /// Number of cross-validation folds
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output root directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub provider: Option<ProviderKind>,
    /// Run directory name; defaults to one derived from seed and config
    #[arg(long, global = true)]
    pub tag: Option<String>,
}

fn parse_model(s: &str) -> std::result::Result<ModelKind, String> {
    s.parse()
        .map_err(|e: cryptopred::models::ModelError| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Label distribution for both tasks
    Stats,
    /// Clean and tokenize every document
    Preprocess,
    /// Upsample minority classes with paraphrases
    Balance,
    /// Fit TF-IDF and the selected models on the whole dataset
    Train,
    /// Stratified k-fold cross-validation of the selected models
    Cv,
    /// Classification reports and confusion matrices from cv output
    Report {
        /// A cv-*.json file or a cv run directory; defaults to the latest cv run
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Emotion category shares per coin and direction
    Emotion {
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Minimum weight a match must exceed
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Cohen's kappa between two annotation sources
    Kappa {
        /// First labeled dataset
        #[arg(long)]
        a: Option<PathBuf>,
        /// Second labeled dataset, joined to the first by id
        #[arg(long)]
        b: Option<PathBuf>,
        /// Two annotator names within --dataset
        #[arg(long, value_delimiter = ',', num_args = 2)]
        annotators: Vec<String>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let cfg = RunConfig::from_args(&cli.global)?;
    match &cli.command {
        Command::Stats => commands::stats(&cfg),
        Command::Preprocess => commands::preprocess_cmd(&cfg),
        Command::Balance => commands::balance_cmd(&cfg),
        Command::Train => commands::train_cmd(&cfg),
        Command::Cv => commands::cv_cmd(&cfg),
        Command::Report { input } => commands::report_cmd(&cfg, input.as_deref()),
        Command::Emotion { lexicon, threshold } => {
            commands::emotion_cmd(&cfg, lexicon.as_deref(), *threshold)
        }
        Command::Kappa { a, b, annotators } => {
            commands::kappa_cmd(&cfg, a.as_deref(), b.as_deref(), annotators)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
