//! Per-model prediction records and their alignment into a labeled
//! examples × models probability matrix.
//!
//! Rows are kept only where every selected model produced an `ok`
//! prediction; any refusal or gap drops the example for the whole ensemble.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{write_atomic, Corpus, Label, Split};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Refused,
}

/// One model's sarcastic-class probability for one example. Hard-label
/// predictors use `0.0` / `1.0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub model_id: String,
    pub example_id: String,
    pub p_sarcastic: Option<f64>,
    pub status: Status,
}

impl Prediction {
    pub fn ok(model_id: impl Into<String>, example_id: impl Into<String>, p: f64) -> Self {
        Prediction {
            model_id: model_id.into(),
            example_id: example_id.into(),
            p_sarcastic: Some(p),
            status: Status::Ok,
        }
    }

    pub fn refused(model_id: impl Into<String>, example_id: impl Into<String>) -> Self {
        Prediction {
            model_id: model_id.into(),
            example_id: example_id.into(),
            p_sarcastic: None,
            status: Status::Refused,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.model_id.is_empty() {
            return Err("empty model_id".into());
        }
        if self.example_id.is_empty() {
            return Err("empty example_id".into());
        }
        match (self.status, self.p_sarcastic) {
            (Status::Ok, None) => Err("status ok requires p_sarcastic".into()),
            (_, Some(p)) if !(0.0..=1.0).contains(&p) => Err(format!("p_sarcastic {p} outside [0, 1]")),
            _ => Ok(()),
        }
    }

    /// The probability when usable.
    pub fn usable(&self) -> Option<f64> {
        match self.status {
            Status::Ok => self.p_sarcastic,
            Status::Refused => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub predictions: Vec<Prediction>,
    pub ok: usize,
    pub refused: usize,
}

/// Parses prediction JSONL. `origin` names the source in error messages.
pub fn parse_predictions(text: &str, origin: &str) -> Result<Ingested> {
    let mut predictions = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = format!("{origin}:{}", idx + 1);
        let prediction: Prediction = serde_json::from_str(line).map_err(|e| Error::InvalidPrediction {
            record: record.clone(),
            message: e.to_string(),
        })?;
        prediction
            .validate()
            .map_err(|message| Error::InvalidPrediction {
                record: format!("{record} ({}/{})", prediction.model_id, prediction.example_id),
                message,
            })?;
        if !seen.insert((prediction.model_id.clone(), prediction.example_id.clone())) {
            return Err(Error::DuplicatePrediction {
                model_id: prediction.model_id,
                example_id: prediction.example_id,
            });
        }
        predictions.push(prediction);
    }
    let ok = predictions.iter().filter(|p| p.status == Status::Ok).count();
    let refused = predictions.len() - ok;
    Ok(Ingested {
        predictions,
        ok,
        refused,
    })
}

pub fn ingest(path: &Path) -> Result<Ingested> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ingested = parse_predictions(&text, &path.display().to_string())?;
    log::info!(
        "{}: {} ok, {} refused",
        path.display(),
        ingested.ok,
        ingested.refused
    );
    Ok(ingested)
}

pub fn to_jsonl(predictions: &[Prediction]) -> String {
    let mut out = String::new();
    for p in predictions {
        out.push_str(&serde_json::to_string(p).expect("prediction serializes"));
        out.push('\n');
    }
    out
}

pub fn write_predictions(path: &Path, predictions: &[Prediction]) -> Result<()> {
    write_atomic(path, to_jsonl(predictions).as_bytes())
}

/// Examples × models matrix of sarcastic-class probabilities with gold labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct PredictionMatrix {
    model_ids: Vec<String>,
    example_ids: Vec<String>,
    probs: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

#[derive(Deserialize)]
struct RawMatrix {
    model_ids: Vec<String>,
    example_ids: Vec<String>,
    probs: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

impl TryFrom<RawMatrix> for PredictionMatrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        PredictionMatrix::new(raw.model_ids, raw.example_ids, raw.probs, raw.labels)
    }
}

impl PredictionMatrix {
    pub fn new(
        model_ids: Vec<String>,
        example_ids: Vec<String>,
        probs: Vec<Vec<f64>>,
        labels: Vec<Label>,
    ) -> Result<Self> {
        if model_ids.is_empty() {
            return Err(Error::InvalidMatrix("no model columns".into()));
        }
        if model_ids.iter().collect::<HashSet<_>>().len() != model_ids.len() {
            return Err(Error::InvalidMatrix("duplicate model ids".into()));
        }
        if example_ids.iter().collect::<HashSet<_>>().len() != example_ids.len() {
            return Err(Error::InvalidMatrix("duplicate example ids".into()));
        }
        if probs.len() != example_ids.len() || labels.len() != example_ids.len() {
            return Err(Error::InvalidMatrix(format!(
                "{} example ids, {} rows, {} labels",
                example_ids.len(),
                probs.len(),
                labels.len()
            )));
        }
        for (row, id) in probs.iter().zip(&example_ids) {
            if row.len() != model_ids.len() {
                return Err(Error::InvalidMatrix(format!(
                    "row `{id}` has {} cells, expected {}",
                    row.len(),
                    model_ids.len()
                )));
            }
            if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvalidMatrix(format!("row `{id}` has probability {p} outside [0, 1]")));
            }
        }
        Ok(PredictionMatrix {
            model_ids,
            example_ids,
            probs,
            labels,
        })
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn example_ids(&self) -> &[String] {
        &self.example_ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn n_examples(&self) -> usize {
        self.example_ids.len()
    }

    pub fn n_models(&self) -> usize {
        self.model_ids.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.probs.iter().map(|row| row[j]).collect()
    }

    /// Sub-matrix with the given columns, in the given order.
    pub fn select_models(&self, model_ids: &[String]) -> Result<PredictionMatrix> {
        let index: HashMap<&str, usize> = self
            .model_ids
            .iter()
            .enumerate()
            .map(|(j, m)| (m.as_str(), j))
            .collect();
        let columns = model_ids
            .iter()
            .map(|m| {
                index.get(m.as_str()).copied().ok_or_else(|| Error::ColumnMismatch {
                    expected: model_ids.to_vec(),
                    found: self.model_ids.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let probs = self
            .probs
            .iter()
            .map(|row| columns.iter().map(|&j| row[j]).collect())
            .collect();
        PredictionMatrix::new(model_ids.to_vec(), self.example_ids.clone(), probs, self.labels.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("matrix serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignOptions {
    /// Minimum fraction of the split each model must cover with `ok` rows.
    pub min_coverage: f64,
    /// Downgrade a coverage failure to a warning.
    pub allow_low_coverage: bool,
}

impl Default for AlignOptions {
    fn default() -> Self {
        AlignOptions {
            min_coverage: 0.5,
            allow_low_coverage: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub matrix: PredictionMatrix,
    /// Per model: split examples it refused or did not cover.
    pub dropped_per_model: BTreeMap<String, usize>,
    pub split_size: usize,
    /// Rows excluded from the matrix.
    pub dropped_rows: usize,
}

/// Aligns predictions from any number of models against the examples of
/// `split` (the whole corpus when `None`). Columns are sorted by model id and
/// rows by example id. Predictions for ids outside the split are ignored.
pub fn align(
    predictions: &[Prediction],
    corpus: &Corpus,
    split: Option<Split>,
    options: AlignOptions,
) -> Result<Alignment> {
    let examples: BTreeMap<&str, Label> = corpus
        .examples()
        .iter()
        .filter(|e| split.is_none() || e.split == split)
        .map(|e| (e.id.as_str(), e.label))
        .collect();
    if examples.is_empty() {
        return Err(Error::InvalidMatrix(format!(
            "no examples in split {}",
            split.map_or("<all>", Split::as_str)
        )));
    }

    let mut by_model: BTreeMap<&str, HashMap<&str, f64>> = BTreeMap::new();
    let mut seen = HashSet::new();
    for p in predictions {
        if let Err(message) = p.validate() {
            return Err(Error::InvalidPrediction {
                record: format!("{}/{}", p.model_id, p.example_id),
                message,
            });
        }
        if !seen.insert((p.model_id.as_str(), p.example_id.as_str())) {
            return Err(Error::DuplicatePrediction {
                model_id: p.model_id.clone(),
                example_id: p.example_id.clone(),
            });
        }
        let cells = by_model.entry(p.model_id.as_str()).or_default();
        if let (Some(prob), true) = (p.usable(), examples.contains_key(p.example_id.as_str())) {
            cells.insert(p.example_id.as_str(), prob);
        }
    }
    if by_model.is_empty() {
        return Err(Error::InvalidMatrix("no predictions given".into()));
    }

    let split_size = examples.len();
    let mut dropped_per_model = BTreeMap::new();
    for (model, cells) in &by_model {
        let covered = cells.len();
        if (covered as f64) < options.min_coverage * split_size as f64 {
            if options.allow_low_coverage {
                log::warn!("model `{model}` covers only {covered} of {split_size} examples");
            } else {
                return Err(Error::LowCoverage {
                    model_id: model.to_string(),
                    covered,
                    total: split_size,
                });
            }
        }
        dropped_per_model.insert(model.to_string(), split_size - covered);
    }

    let model_ids: Vec<String> = by_model.keys().map(|m| m.to_string()).collect();
    let mut example_ids = Vec::new();
    let mut probs = Vec::new();
    let mut labels = Vec::new();
    for (&id, &label) in &examples {
        let row: Option<Vec<f64>> = by_model.values().map(|cells| cells.get(id).copied()).collect();
        if let Some(row) = row {
            example_ids.push(id.to_string());
            probs.push(row);
            labels.push(label);
        }
    }
    let dropped_rows = split_size - example_ids.len();
    Ok(Alignment {
        matrix: PredictionMatrix::new(model_ids, example_ids, probs, labels)?,
        dropped_per_model,
        split_size,
        dropped_rows,
    })
}

/// Distinct model ids in first-seen order.
pub fn model_ids(predictions: &[Prediction]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    predictions
        .iter()
        .filter(|p| seen.insert(p.model_id.as_str()))
        .map(|p| p.model_id.clone())
        .collect()
}
