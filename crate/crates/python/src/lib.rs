//! Python bindings for the sarcasm ensemble pipeline.
//!
//! Labels cross the boundary as `0` / `1`, predictions as
//! `(model_id, example_id, p_sarcastic | None)` tuples.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use sarcasm_core::corpus::{self, Label, Split, SplitRatios};
use sarcasm_core::eval::{self, ConfusionMatrix, ReportFormat};
use sarcasm_core::llm::{self, PromptTemplate};
use sarcasm_core::meta_learner::{self, TrainOptions, DEFAULT_LAMBDA_GRID};
use sarcasm_core::predictions::{self, AlignOptions, Prediction};
use sarcasm_core::voting::{self, Scheme, VotingConfig};
use sarcasm_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn label(value: u8) -> PyResult<Label> {
    Label::from_u8(value).ok_or_else(|| PyValueError::new_err(format!("label must be 0 or 1, got {value}")))
}

fn labels(values: &[u8]) -> PyResult<Vec<Label>> {
    values.iter().map(|&v| label(v)).collect()
}

fn ints(labels: &[Label]) -> Vec<u8> {
    labels.iter().map(|l| l.as_u8()).collect()
}

fn parse_split(name: Option<&str>) -> PyResult<Option<Split>> {
    name.map(|s| s.parse::<Split>().map_err(|e| PyValueError::new_err(e.to_string())))
        .transpose()
}

#[pyclass(name = "Corpus", module = "sarcasm_ensemble")]
struct PyCorpus {
    inner: corpus::Corpus,
}

#[pymethods]
impl PyCorpus {
    /// Loads the official train and test files (CSV or JSONL).
    #[staticmethod]
    fn from_official(train: PathBuf, test: PathBuf) -> PyResult<Self> {
        Ok(PyCorpus {
            inner: corpus::load_isarcasm(&train, &test).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyCorpus {
            inner: corpus::Corpus::load(&path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py)
    }

    fn balance(&self, seed: u64) -> PyResult<Self> {
        Ok(PyCorpus {
            inner: corpus::merge_and_balance(&self.inner, seed).map_err(to_py)?,
        })
    }

    #[pyo3(signature = (seed, train=0.8, val=0.1, test=0.1))]
    fn split(&self, seed: u64, train: f64, val: f64, test: f64) -> PyResult<Self> {
        let ratios = SplitRatios::new(train, val, test).map_err(to_py)?;
        Ok(PyCorpus {
            inner: corpus::stratified_split(&self.inner, ratios, seed).map_err(to_py)?,
        })
    }

    /// `(sarcastic, not_sarcastic)`.
    fn counts(&self) -> (usize, usize) {
        let c = self.inner.counts();
        (c.sarcastic, c.not_sarcastic)
    }

    /// Example ids in `split` (all when `None`).
    #[pyo3(signature = (split=None))]
    fn ids(&self, split: Option<&str>) -> PyResult<Vec<String>> {
        Ok(match parse_split(split)? {
            Some(s) => self.inner.in_split(s).map(|e| e.id.clone()).collect(),
            None => self.inner.examples().iter().map(|e| e.id.clone()).collect(),
        })
    }

    /// `(text, label)` as used for classification.
    fn example(&self, id: &str) -> PyResult<(String, u8)> {
        let e = self
            .inner
            .get(id)
            .ok_or_else(|| PyValueError::new_err(format!("unknown example id `{id}`")))?;
        Ok((e.classification_text().to_string(), e.label.as_u8()))
    }

    fn to_jsonl(&self) -> String {
        self.inner.to_jsonl()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        let c = self.inner.counts();
        format!("Corpus({} examples, {}/{})", self.inner.len(), c.sarcastic, c.not_sarcastic)
    }
}

/// `1`, `0` or `None` (refused) from a raw model answer.
#[pyfunction]
fn parse_label(raw: &str) -> Option<u8> {
    llm::parse_label(raw).value.map(Label::as_u8)
}

fn template(path: Option<PathBuf>, fallback: fn() -> PromptTemplate) -> PyResult<PromptTemplate> {
    match path {
        Some(p) => PromptTemplate::from_file(&p).map_err(to_py),
        None => Ok(fallback()),
    }
}

/// `(system, user)` chat messages for a classification query.
#[pyfunction]
#[pyo3(signature = (text, template_path=None))]
fn render_classification_prompt(text: &str, template_path: Option<PathBuf>) -> PyResult<(String, String)> {
    let tpl = template(template_path, PromptTemplate::default_classification)?;
    let p = llm::render_classification_prompt(text, &tpl).map_err(to_py)?;
    Ok((p.system, p.user))
}

/// `(system, user)` chat messages for a translation query.
#[pyfunction]
#[pyo3(signature = (text, template_path=None))]
fn render_translation_prompt(text: &str, template_path: Option<PathBuf>) -> PyResult<(String, String)> {
    let tpl = template(template_path, PromptTemplate::default_translation)?;
    let p = tpl.render(text).map_err(to_py)?;
    Ok((p.system, p.user))
}

type PredictionTuple = (String, String, Option<f64>);

fn to_predictions(records: Vec<PredictionTuple>) -> PyResult<Vec<Prediction>> {
    records
        .into_iter()
        .map(|(model, id, p)| {
            let record = match p {
                Some(p) => Prediction::ok(model, id, p),
                None => Prediction::refused(model, id),
            };
            record.validate().map_err(PyValueError::new_err)?;
            Ok(record)
        })
        .collect()
}

/// Reads a prediction JSONL file.
#[pyfunction]
fn ingest(path: PathBuf) -> PyResult<Vec<PredictionTuple>> {
    Ok(predictions::ingest(&path)
        .map_err(to_py)?
        .predictions
        .into_iter()
        .map(|p| (p.model_id, p.example_id, p.p_sarcastic))
        .collect())
}

#[pyclass(name = "PredictionMatrix", module = "sarcasm_ensemble")]
struct PyMatrix {
    inner: predictions::PredictionMatrix,
}

#[pymethods]
impl PyMatrix {
    #[new]
    fn new(model_ids: Vec<String>, example_ids: Vec<String>, probs: Vec<Vec<f64>>, labels: Vec<u8>) -> PyResult<Self> {
        let labels = self::labels(&labels)?;
        Ok(PyMatrix {
            inner: predictions::PredictionMatrix::new(model_ids, example_ids, probs, labels).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyMatrix {
            inner: predictions::PredictionMatrix::from_json(text).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn model_ids(&self) -> Vec<String> {
        self.inner.model_ids().to_vec()
    }

    #[getter]
    fn example_ids(&self) -> Vec<String> {
        self.inner.example_ids().to_vec()
    }

    #[getter]
    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows().to_vec()
    }

    #[getter]
    fn labels(&self) -> Vec<u8> {
        ints(self.inner.labels())
    }

    fn select_models(&self, model_ids: Vec<String>) -> PyResult<Self> {
        Ok(PyMatrix {
            inner: self.inner.select_models(&model_ids).map_err(to_py)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.n_examples()
    }

    fn __repr__(&self) -> String {
        format!("PredictionMatrix({} x {})", self.inner.n_examples(), self.inner.n_models())
    }
}

/// Aligns predictions against a corpus split, keeping only rows every model
/// answered. Returns `(matrix, dropped_rows)`.
#[pyfunction]
#[pyo3(signature = (predictions, corpus, split=None, min_coverage=0.5, allow_low_coverage=false))]
fn align(
    predictions: Vec<PredictionTuple>,
    corpus: &PyCorpus,
    split: Option<&str>,
    min_coverage: f64,
    allow_low_coverage: bool,
) -> PyResult<(PyMatrix, usize)> {
    let records = to_predictions(predictions)?;
    let options = AlignOptions {
        min_coverage,
        allow_low_coverage,
    };
    let aligned = predictions::align(&records, &corpus.inner, parse_split(split)?, options).map_err(to_py)?;
    Ok((PyMatrix { inner: aligned.matrix }, aligned.dropped_rows))
}

#[pyclass(name = "MetaModel", module = "sarcasm_ensemble")]
struct PyMetaModel {
    inner: meta_learner::MetaModel,
}

#[pymethods]
impl PyMetaModel {
    /// Fits L2-regularized logistic regression on the matrix columns.
    #[staticmethod]
    #[pyo3(signature = (matrix, lam=0.1, tolerance=1e-8, max_iters=10_000))]
    fn train(matrix: &PyMatrix, lam: f64, tolerance: f64, max_iters: usize) -> PyResult<Self> {
        let options = TrainOptions {
            lambda: lam,
            tolerance,
            max_iters,
        };
        Ok(PyMetaModel {
            inner: meta_learner::train(&matrix.inner, options).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyMetaModel { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.inner).expect("model serializes")
    }

    fn predict(&self, matrix: &PyMatrix) -> PyResult<Vec<f64>> {
        meta_learner::predict(&self.inner, &matrix.inner).map_err(to_py)
    }

    fn predict_labels(&self, matrix: &PyMatrix) -> PyResult<Vec<u8>> {
        Ok(ints(&meta_learner::predict_labels(&self.inner, &matrix.inner).map_err(to_py)?))
    }

    fn select_top_k(&self, k: usize) -> PyResult<Vec<String>> {
        meta_learner::select_top_k(&self.inner, k).map_err(to_py)
    }

    #[getter]
    fn model_ids(&self) -> Vec<String> {
        self.inner.model_ids.clone()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights.clone()
    }

    #[getter]
    fn intercept(&self) -> f64 {
        self.inner.intercept
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.optimizer_report.iterations
    }

    fn __repr__(&self) -> String {
        format!("MetaModel({} weights, lambda={})", self.inner.weights.len(), self.inner.lambda)
    }
}

/// Picks λ by validation accuracy. Returns `(lambda, model, [(lambda, accuracy)])`.
#[pyfunction]
#[pyo3(signature = (train, val, grid=None))]
fn tune_lambda(train: &PyMatrix, val: &PyMatrix, grid: Option<Vec<f64>>) -> PyResult<(f64, PyMetaModel, Vec<(f64, f64)>)> {
    let grid = grid.unwrap_or_else(|| DEFAULT_LAMBDA_GRID.to_vec());
    let search =
        meta_learner::tune_lambda(&train.inner, &val.inner, &grid, TrainOptions::default()).map_err(to_py)?;
    Ok((search.lambda, PyMetaModel { inner: search.model }, search.scores))
}

fn voting_config(scheme: &str, n: usize, threshold: f64, tie_label: u8) -> PyResult<VotingConfig> {
    Ok(VotingConfig {
        scheme: scheme.parse::<Scheme>().map_err(|e| PyValueError::new_err(e.to_string()))?,
        cutoff_n: n,
        threshold,
        tie_label: label(tie_label)?,
    })
}

#[pyfunction]
#[pyo3(signature = (row, threshold=0.5, tie_label=0))]
fn hard_vote(row: Vec<f64>, threshold: f64, tie_label: u8) -> PyResult<u8> {
    let config = voting_config("hard", 0, threshold, tie_label)?;
    Ok(voting::hard_vote(&row, &config).map_err(to_py)?.as_u8())
}

#[pyfunction]
#[pyo3(signature = (row, threshold=0.5, tie_label=0))]
fn soft_vote(row: Vec<f64>, threshold: f64, tie_label: u8) -> PyResult<u8> {
    let config = voting_config("soft", 0, threshold, tie_label)?;
    Ok(voting::soft_vote(&row, &config).map_err(to_py)?.as_u8())
}

#[pyfunction]
#[pyo3(signature = (row, n, threshold=0.5, tie_label=0))]
fn mixed_vote(row: Vec<f64>, n: usize, threshold: f64, tie_label: u8) -> PyResult<u8> {
    let config = voting_config("mixed", n, threshold, tie_label)?;
    Ok(voting::mixed_vote(&row, &config).map_err(to_py)?.as_u8())
}

#[pyfunction]
#[pyo3(signature = (matrix, scheme, n=0, threshold=0.5, tie_label=0))]
fn vote_matrix(matrix: &PyMatrix, scheme: &str, n: usize, threshold: f64, tie_label: u8) -> PyResult<Vec<u8>> {
    let config = voting_config(scheme, n, threshold, tie_label)?;
    Ok(ints(&voting::vote_matrix(&matrix.inner, &config).map_err(to_py)?))
}

/// Best mixed-voting cutoff on a validation matrix: `(n, accuracy)`.
#[pyfunction]
#[pyo3(signature = (matrix, threshold=0.5, tie_label=0))]
fn tune_cutoff(matrix: &PyMatrix, threshold: f64, tie_label: u8) -> PyResult<(usize, f64)> {
    let config = voting_config("mixed", 0, threshold, tie_label)?;
    voting::tune_cutoff(&matrix.inner, &config).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (tp, fp, fn_, tn))]
fn metrics(tp: usize, fp: usize, fn_: usize, tn: usize) -> PyResult<BTreeMap<String, f64>> {
    let m = eval::metrics(&ConfusionMatrix::new(tp, fp, fn_, tn)).map_err(to_py)?;
    Ok(BTreeMap::from([
        ("accuracy".to_string(), m.accuracy),
        ("precision".to_string(), m.precision),
        ("recall".to_string(), m.recall),
        ("f1".to_string(), m.f1),
    ]))
}

#[pyclass(name = "EvalReport", module = "sarcasm_ensemble", from_py_object)]
#[derive(Clone)]
struct PyEvalReport {
    inner: eval::EvalReport,
}

#[pymethods]
impl PyEvalReport {
    #[new]
    #[pyo3(signature = (name, pred, gold, dropped=0, members=None))]
    fn new(name: String, pred: Vec<u8>, gold: Vec<u8>, dropped: usize, members: Option<Vec<String>>) -> PyResult<Self> {
        let report = eval::EvalReport::from_labels(name, &labels(&pred)?, &labels(&gold)?, dropped).map_err(to_py)?;
        Ok(PyEvalReport {
            inner: report.with_members(members.unwrap_or_default()),
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn accuracy(&self) -> f64 {
        self.inner.accuracy
    }

    #[getter]
    fn precision(&self) -> f64 {
        self.inner.precision
    }

    #[getter]
    fn recall(&self) -> f64 {
        self.inner.recall
    }

    #[getter]
    fn f1(&self) -> f64 {
        self.inner.f1
    }

    /// `(tp, fp, fn, tn)`.
    #[getter]
    fn confusion(&self) -> (usize, usize, usize, usize) {
        let c = &self.inner.confusion;
        (c.tp, c.fp, c.fn_, c.tn)
    }

    fn __repr__(&self) -> String {
        format!(
            "EvalReport({}: accuracy {}, F1 {})",
            self.inner.name,
            eval::display3(self.inner.accuracy),
            eval::display3(self.inner.f1)
        )
    }
}

/// Renders reports as `text`, `csv` or `json`, sorted by name.
#[pyfunction]
#[pyo3(signature = (reports, format="text"))]
fn emit_report(reports: Vec<PyEvalReport>, format: &str) -> PyResult<String> {
    let format = format
        .parse::<ReportFormat>()
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let reports: Vec<eval::EvalReport> = reports.into_iter().map(|r| r.inner).collect();
    Ok(eval::emit_report(&reports, format))
}

#[pymodule]
fn sarcasm_ensemble(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyMatrix>()?;
    m.add_class::<PyMetaModel>()?;
    m.add_class::<PyEvalReport>()?;
    m.add_function(wrap_pyfunction!(parse_label, m)?)?;
    m.add_function(wrap_pyfunction!(render_classification_prompt, m)?)?;
    m.add_function(wrap_pyfunction!(render_translation_prompt, m)?)?;
    m.add_function(wrap_pyfunction!(ingest, m)?)?;
    m.add_function(wrap_pyfunction!(align, m)?)?;
    m.add_function(wrap_pyfunction!(tune_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(hard_vote, m)?)?;
    m.add_function(wrap_pyfunction!(soft_vote, m)?)?;
    m.add_function(wrap_pyfunction!(mixed_vote, m)?)?;
    m.add_function(wrap_pyfunction!(vote_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(tune_cutoff, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(emit_report, m)?)?;
    Ok(())
}
