//! Run configuration, read from a TOML file. Every section is optional;
//! command-line flags override file values and the effective configuration
//! is written next to each command's outputs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{Label, SplitRatios};
use crate::error::{Error, Result};
use crate::llm::LlmConfig;
use crate::meta_learner::{DEFAULT_LAMBDA_GRID, DEFAULT_TOP_K};
use crate::voting::Scheme;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// Defaults to `<output_dir>/corpus.jsonl`.
    pub corpus: Option<PathBuf>,
    pub cache: PathBuf,
    pub predictions_dir: PathBuf,
    pub output_dir: PathBuf,
    pub translate_prompt: Option<PathBuf>,
    pub classify_prompt: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            train: None,
            test: None,
            corpus: None,
            cache: PathBuf::from("cache/llm_responses.jsonl"),
            predictions_dir: PathBuf::from("predictions"),
            output_dir: PathBuf::from("out"),
            translate_prompt: None,
            classify_prompt: None,
        }
    }
}

impl PathsConfig {
    pub fn corpus_path(&self) -> PathBuf {
        self.corpus
            .clone()
            .unwrap_or_else(|| self.output_dir.join("corpus.jsonl"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub lambda_grid: Vec<f64>,
    pub tolerance: f64,
    pub max_iters: usize,
    pub top_k: usize,
    pub scheme: Scheme,
    /// Mixed-voting cutoff; tuned on the validation split when absent.
    pub cutoff_n: Option<usize>,
    pub threshold: f64,
    pub tie_label: Label,
    pub min_coverage: f64,
    pub allow_low_coverage: bool,
    /// Models left out of every ensemble (e.g. a dummy classifier).
    pub exclude: Vec<String>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            lambda_grid: DEFAULT_LAMBDA_GRID.to_vec(),
            tolerance: 1e-8,
            max_iters: 10_000,
            top_k: DEFAULT_TOP_K,
            scheme: Scheme::Hard,
            cutoff_n: None,
            threshold: 0.5,
            tie_label: Label::NotSarcastic,
            min_coverage: 0.5,
            allow_low_coverage: false,
            exclude: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: PathsConfig,
    pub split: SplitRatios,
    pub llm: LlmConfig,
    pub ensemble: EnsembleConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            paths: PathsConfig::default(),
            split: SplitRatios::default(),
            llm: LlmConfig::default(),
            ensemble: EnsembleConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e
                .message()
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "<file>".to_string());
            Error::config(field, e.to_string().trim().replace('\n', " "))
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Value checks that do not touch the filesystem.
    pub fn validate(&self) -> Result<()> {
        self.split
            .validate()
            .map_err(|e| Error::config("split", e.to_string()))?;
        self.llm
            .validate()
            .map_err(|e| Error::config("llm", e.to_string()))?;
        let ens = &self.ensemble;
        if ens.lambda_grid.is_empty() {
            return Err(Error::config("ensemble.lambda_grid", "must not be empty"));
        }
        if let Some(l) = ens.lambda_grid.iter().find(|l| !l.is_finite() || **l < 0.0) {
            return Err(Error::config("ensemble.lambda_grid", format!("values must be >= 0, got {l}")));
        }
        if !(ens.tolerance > 0.0) {
            return Err(Error::config("ensemble.tolerance", "must be positive"));
        }
        if ens.top_k == 0 {
            return Err(Error::config("ensemble.top_k", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&ens.threshold) {
            return Err(Error::config("ensemble.threshold", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&ens.min_coverage) {
            return Err(Error::config("ensemble.min_coverage", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Fails with the field name when a required input path is missing.
    pub fn require_file(field: &str, path: Option<&Path>) -> Result<PathBuf> {
        let path = path.ok_or_else(|| Error::config(field, "not set"))?;
        if !path.is_file() {
            return Err(Error::config(field, format!("file not found: {}", path.display())));
        }
        Ok(path.to_path_buf())
    }

    pub fn require_dir(field: &str, path: &Path) -> Result<PathBuf> {
        if !path.is_dir() {
            return Err(Error::config(field, format!("directory not found: {}", path.display())));
        }
        Ok(path.to_path_buf())
    }
}
