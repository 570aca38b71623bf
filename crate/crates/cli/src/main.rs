use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use boostcnn_cli::commands;
use boostcnn_cli::config::RunConfig;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "boostcnn",
    version,
    about = "Big-Five trait classification with boosted CNNs"
)]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Parallel grid jobs (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Override a config key, e.g. `--set epochs=20`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize the dataset and write the corpus cache and vocabulary.
    Preprocess,
    /// Train Skip-Gram vectors on the cached sentences.
    TrainEmbed,
    /// Train the ensemble for every variant, trait and fold.
    Train,
    /// Score checkpoints on their test chunks and write results.
    Evaluate,
    /// Print the table for one or more results files.
    Report {
        paths: Vec<PathBuf>,
        /// Write the merged results here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut overrides = cli.set;
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(jobs) = cli.jobs {
        overrides.push(format!("jobs={jobs}"));
    }
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    let stdout = std::io::stdout();
    let out = &mut stdout.lock();
    match cli.command {
        Command::Preprocess => commands::preprocess(&cfg, out).map(drop),
        Command::TrainEmbed => commands::train_embed(&cfg, out).map(drop),
        Command::Train => commands::train(&cfg, out).map(drop),
        Command::Evaluate => commands::evaluate(&cfg, out).map(drop),
        Command::Report {
            paths,
            out: save_to,
        } => commands::report(&cfg, &paths, save_to.as_deref(), out).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.to_string();
            let line = text
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("error[usage]: {line}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "error[{}]: {}",
                boostcnn_cli::error_class(&e),
                boostcnn_cli::error_message(&e)
            );
            ExitCode::FAILURE
        }
    }
}
