//! `biqq` — train, evaluate, augment, attack-probe and benchmark a
//! bidirectional quaternion quasi-LSTM hate-speech classifier.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "biqq",
    version,
    about = "Bidirectional quaternion quasi-LSTM hate-speech classifier"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a classifier and write checkpoint, history and metrics.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a labeled corpus.
    Eval(EvalArgs),
    /// Generate label-preserving augmented copies of a corpus.
    Augment(AugmentArgs),
    /// Probe a checkpoint with perturbed hate texts and report precision.
    Attack(AttackArgs),
    /// Time the four cell variants on a fixed synthetic workload.
    Bench(BenchArgs),
}

/// Configuration flags shared by every subcommand.
#[derive(Args)]
struct CommonArgs {
    /// Plain-text config file (`key = value` lines, dotted sections).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key (repeatable), e.g. --set loss.gamma=0.25
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Global seed; shorthand for --set seed=N. Overrides config and the
    /// BIQQ_SEED environment variable.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Labeled corpus: one `label<TAB>text` line per example.
    #[arg(long)]
    corpus: PathBuf,
    /// Run directory for checkpoint, history and metrics.
    #[arg(long)]
    out: PathBuf,
    /// Lexicon directory (shipped word lists fill any missing file).
    #[arg(long)]
    lexicons: Option<PathBuf>,
    /// Identity-group file for counterfactual pairs (one comma-separated
    /// group per line); defaults to the shipped table.
    #[arg(long)]
    identity: Option<PathBuf>,
    /// Augmentation rule METHOD:RATE:RATIO applied to the training split
    /// (repeatable).
    #[arg(long = "augment", value_name = "METHOD:RATE:RATIO")]
    augment: Vec<String>,
    /// Subsample the training split to this hate fraction (0, 1).
    #[arg(long = "hate-ratio")]
    hate_ratio: Option<f64>,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint written by `biqq train`.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Labeled corpus to evaluate on.
    #[arg(long)]
    corpus: PathBuf,
    /// Optional directory for metrics.kv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Token truncation length.
    #[arg(long, default_value_t = 128)]
    max_len: usize,
}

#[derive(Args)]
struct AugmentArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Source corpus.
    #[arg(long)]
    corpus: PathBuf,
    /// Output directory for augmented.tsv.
    #[arg(long)]
    out: PathBuf,
    /// Perturbation method: charswap, wordnet, embedding, checklist or
    /// easydata.
    #[arg(long)]
    method: String,
    /// Fraction of eligible tokens each output perturbs.
    #[arg(long, default_value_t = 0.1)]
    rate: f64,
    /// Generated examples per source example.
    #[arg(long, default_value_t = 1.0)]
    ratio: f64,
    /// Lexicon directory (shipped word lists fill any missing file).
    #[arg(long)]
    lexicons: Option<PathBuf>,
}

#[derive(Args)]
struct AttackArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Checkpoint under attack.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Source corpus; hate-labeled examples seed the attack texts.
    #[arg(long)]
    corpus: PathBuf,
    /// Perturbation method: charswap, wordnet, embedding, checklist or
    /// easydata.
    #[arg(long)]
    method: String,
    /// Number of attack texts to generate.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Fraction of eligible tokens each attack text perturbs.
    #[arg(long, default_value_t = 0.25)]
    rate: f64,
    /// Optional directory for attacks.tsv and attack_report.kv; without
    /// it the labeled texts go to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Token truncation length.
    #[arg(long, default_value_t = 128)]
    max_len: usize,
    /// Lexicon directory (shipped word lists fill any missing file).
    #[arg(long)]
    lexicons: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Sequence length of the synthetic workload.
    #[arg(long, default_value_t = 64)]
    steps: usize,
    /// Sequences per repeat.
    #[arg(long, default_value_t = 8)]
    batch: usize,
    /// Timed passes over the batch.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Optional directory for bench.txt.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Train(args) => commands::cmd_train(args),
        Cmd::Eval(args) => commands::cmd_eval(args),
        Cmd::Augment(args) => commands::cmd_augment(args),
        Cmd::Attack(args) => commands::cmd_attack(args),
        Cmd::Bench(args) => commands::cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
