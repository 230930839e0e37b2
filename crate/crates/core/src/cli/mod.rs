//! `sarcasm` command-line front end. Each subcommand runs one pipeline stage
//! from a [`RunConfig`] with flag overrides.

mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::corpus::{Label, Split, SplitRatios};
use crate::error::Error;
use crate::eval::ReportFormat;

pub use commands::Outcome;

#[derive(Debug, Parser)]
#[command(name = "sarcasm", version, about = "Translate-train sarcasm detection pipeline")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load the official splits, balance classes and assign train/val/test.
    BuildDataset(BuildDatasetArgs),
    /// Translate every example through the chat endpoint.
    Translate(TranslateArgs),
    /// Few-shot classify every example and write prediction JSONL.
    Classify(ClassifyArgs),
    /// Fit the stacking meta-learner and rank base models by weight.
    TrainMeta(TrainMetaArgs),
    /// Evaluate a voting or stacking ensemble on the test split.
    Ensemble(EnsembleArgs),
    /// Summarize base models and ensembles in one table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct BuildDatasetArgs {
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Train/val/test fractions, e.g. `0.8,0.1,0.1`.
    #[arg(long, value_parser = parse_ratios)]
    pub ratios: Option<SplitRatios>,
    /// Output corpus path (default `<out>/corpus.jsonl`).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LlmArgs {
    #[arg(long)]
    pub base_url: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub concurrency: Option<usize>,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Prompt template JSON (defaults to the bundled one).
    #[arg(long)]
    pub prompt: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TranslateArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[command(flatten)]
    pub llm: LlmArgs,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Identifier written into every prediction record.
    #[arg(long)]
    pub model_id: String,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Restrict to one split.
    #[arg(long)]
    pub split: Option<Split>,
    #[arg(long)]
    pub predictions_dir: Option<PathBuf>,
    #[command(flatten)]
    pub llm: LlmArgs,
}

#[derive(Debug, Args)]
pub struct SelectionArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub predictions_dir: Option<PathBuf>,
    /// Comma-separated model ids to use (default: every model found).
    #[arg(long, value_delimiter = ',')]
    pub members: Option<Vec<String>>,
    /// Comma-separated model ids to leave out.
    #[arg(long, value_delimiter = ',')]
    pub exclude: Option<Vec<String>>,
    /// Keep models covering less than the minimum share of a split.
    #[arg(long)]
    pub allow_low_coverage: bool,
}

#[derive(Debug, Args)]
pub struct TrainMetaArgs {
    #[command(flatten)]
    pub selection: SelectionArgs,
    #[arg(long, value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EnsembleScheme {
    Hard,
    Soft,
    Mixed,
    Stacking,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[command(flatten)]
    pub selection: SelectionArgs,
    #[arg(long, value_enum)]
    pub scheme: Option<EnsembleScheme>,
    /// Mixed-voting cutoff; tuned on the validation split when omitted.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_parser = parse_label)]
    pub tie_label: Option<Label>,
    /// Use the top-k models of a trained meta-model as members.
    #[arg(long)]
    pub top_k_from: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Meta-model JSON for `--scheme stacking` (default `<out>/meta_model.json`).
    #[arg(long)]
    pub meta_model: Option<PathBuf>,
    /// Report name (default derived from scheme and members).
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub predictions_dir: Option<PathBuf>,
    /// Ensemble report JSON files (default: every `ensemble.*.json` and the
    /// stacking report in the output directory).
    #[arg(long, value_delimiter = ',')]
    pub reports: Option<Vec<PathBuf>>,
    #[arg(long, default_value = "text")]
    pub format: ReportFormat,
    #[arg(long, default_value = "test")]
    pub split: Split,
}

fn parse_ratios(raw: &str) -> Result<SplitRatios, String> {
    let parts: Vec<f64> = raw
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [train, val, test] => SplitRatios::new(*train, *val, *test).map_err(|e| e.to_string()),
        _ => Err("expected three comma-separated fractions".into()),
    }
}

fn parse_label(raw: &str) -> Result<Label, String> {
    match raw {
        "0" => Ok(Label::NotSarcastic),
        "1" => Ok(Label::Sarcastic),
        other => Err(format!("expected 0 or 1, got `{other}`")),
    }
}

/// Loads the config file (or defaults) and applies the common flags.
pub fn base_config(common: &CommonArgs) -> Result<RunConfig, Error> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.paths.output_dir = out.clone();
    }
    Ok(config)
}

pub fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let config = base_config(&cli.common)?;
    commands::dispatch(config, cli.command)
}
