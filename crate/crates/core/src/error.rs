use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    MalformedRow {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("unsupported input format for {0} (expected .csv, .jsonl or .ndjson)")]
    UnsupportedFormat(PathBuf),

    #[error("invalid example: {0}")]
    InvalidExample(String),

    #[error("cannot balance corpus: {sarcastic} sarcastic vs {not_sarcastic} non-sarcastic examples")]
    CannotBalance { sarcastic: usize, not_sarcastic: usize },

    #[error("stratified split needs a balanced corpus, got {sarcastic} sarcastic vs {not_sarcastic} non-sarcastic")]
    Unbalanced { sarcastic: usize, not_sarcastic: usize },

    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),

    #[error("split `{0}` would receive no examples")]
    EmptySplit(&'static str),

    #[error("invalid prompt template: {0}")]
    InvalidTemplate(String),

    #[error("invalid llm configuration: {0}")]
    InvalidLlmConfig(String),

    #[error("transport error after {attempts} attempt(s) (last status: {}): {message}", .last_status.map_or("none".to_string(), |s| s.to_string()))]
    Transport {
        attempts: u32,
        last_status: Option<u16>,
        message: String,
    },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("invalid prediction record {record}: {message}")]
    InvalidPrediction { record: String, message: String },

    #[error("duplicate prediction for model `{model_id}`, example `{example_id}`")]
    DuplicatePrediction { model_id: String, example_id: String },

    #[error("model `{model_id}` covers only {covered} of {total} examples in the selected split")]
    LowCoverage {
        model_id: String,
        covered: usize,
        total: usize,
    },

    #[error("invalid prediction matrix: {0}")]
    InvalidMatrix(String),

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("regularization strength must be non-negative and finite, got {0}")]
    InvalidLambda(f64),

    #[error("optimizer did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NotConverged { iterations: usize, gradient_norm: f64 },

    #[error("matrix columns {found:?} do not match model columns {expected:?}")]
    ColumnMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("k = {k} out of range 1..={m}")]
    InvalidK { k: usize, m: usize },

    #[error("empty lambda grid")]
    EmptyGrid,

    #[error("empty prediction row")]
    EmptyRow,

    #[error("cutoff n = {n} out of range 0..={m}")]
    InvalidCutoff { n: usize, m: usize },

    #[error("length mismatch: {pred} predictions vs {gold} gold labels")]
    LengthMismatch { pred: usize, gold: usize },

    #[error("nothing to evaluate")]
    EmptyEvaluation,

    #[error("invalid configuration: {field}: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
