#![allow(dead_code)]

use std::collections::VecDeque;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Chat-completions stand-in with deterministic answers.
///
/// Translation prompts get `SL: <query>`. Classification prompts get a label
/// derived from a hash of model name and query, or a refusal when the query
/// contains `REFUSE`. Queued `(status, body)` pairs are served first.
#[derive(Default)]
pub struct FakeState {
    pub requests: AtomicUsize,
    in_flight: AtomicUsize,
    pub max_in_flight: AtomicUsize,
    pub script: Mutex<VecDeque<(u16, String)>>,
    pub delay_ms: AtomicUsize,
}

impl FakeState {
    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn max_in_flight(&self) -> usize {
        self.max_in_flight.load(Ordering::SeqCst)
    }

    pub fn queue(&self, status: u16, body: &str) {
        self.script.lock().unwrap().push_back((status, body.to_string()));
    }
}

pub struct FakeEndpoint {
    pub base_url: String,
    pub state: Arc<FakeState>,
}

impl FakeEndpoint {
    /// Serves on an ephemeral port from a background thread for the life of
    /// the test process.
    pub fn start() -> Self {
        let state = Arc::new(FakeState::default());
        let shared = state.clone();
        let (tx, rx) = std::sync::mpsc::channel();
        std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
                .unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                tx.send(listener.local_addr().unwrap()).unwrap();
                let app = Router::new()
                    .route("/v1/chat/completions", post(handle))
                    .with_state(shared);
                axum::serve(listener, app).await.unwrap();
            });
        });
        let addr = rx.recv().unwrap();
        FakeEndpoint {
            base_url: format!("http://{addr}/v1"),
            state,
        }
    }
}

async fn handle(State(state): State<Arc<FakeState>>, Json(body): Json<Value>) -> (StatusCode, String) {
    state.requests.fetch_add(1, Ordering::SeqCst);
    let now = state.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    state.max_in_flight.fetch_max(now, Ordering::SeqCst);
    let delay = state.delay_ms.load(Ordering::SeqCst);
    if delay > 0 {
        tokio::time::sleep(Duration::from_millis(delay as u64)).await;
    }
    let scripted = state.script.lock().unwrap().pop_front();
    state.in_flight.fetch_sub(1, Ordering::SeqCst);
    if let Some((status, text)) = scripted {
        return (StatusCode::from_u16(status).unwrap(), text);
    }
    let content = answer(&body);
    let reply = json!({
        "id": "chatcmpl-fake",
        "object": "chat.completion",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}],
    });
    (StatusCode::OK, reply.to_string())
}

fn answer(body: &Value) -> String {
    let model = body["model"].as_str().unwrap_or_default();
    let system = body["messages"][0]["content"].as_str().unwrap_or_default();
    let user = body["messages"][1]["content"].as_str().unwrap_or_default();
    let query = user.lines().last().unwrap_or_default();
    if system.contains("translate") {
        return format!("SL: {}", query.trim_end_matches("//").trim());
    }
    if query.contains("REFUSE") {
        return "I'm sorry, I can't classify that.".to_string();
    }
    let digest = Sha256::digest(format!("{model}\n{query}").as_bytes());
    if digest[0] % 2 == 1 { "1" } else { "0" }.to_string()
}

/// Writes iSarcasmEval-shaped CSV files with the given class counts.
pub fn write_official_files(dir: &Path, train: (usize, usize), test: (usize, usize)) -> (std::path::PathBuf, std::path::PathBuf) {
    let train_path = dir.join("train.csv");
    let test_path = dir.join("test.csv");
    let mut text = String::from("tweet,sarcastic\n");
    for i in 0..train.0 {
        text.push_str(&format!("sarcastic train tweet {i},1\n"));
    }
    for i in 0..train.1 {
        text.push_str(&format!("plain train tweet {i},0\n"));
    }
    fs::write(&train_path, text).unwrap();
    let mut text = String::from("text,sarcastic\n");
    for i in 0..test.0 {
        text.push_str(&format!("sarcastic test tweet {i},1\n"));
    }
    for i in 0..test.1 {
        text.push_str(&format!("plain test tweet {i},0\n"));
    }
    fs::write(&test_path, text).unwrap();
    (train_path, test_path)
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sarcasm_core::corpus::Label;
use sarcasm_core::predictions::PredictionMatrix;

/// Random features in [0, 1] with labels drawn from a logistic model, so
/// both classes are present for any `n >= 2`.
pub fn random_design(seed: u64, n: usize, m: usize) -> (Vec<Vec<f64>>, Vec<Label>) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let truth: Vec<f64> = (0..m).map(|_| rng.random_range(-4.0..4.0)).collect();
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random::<f64>()).collect()).collect();
    let mut labels: Vec<Label> = rows
        .iter()
        .map(|x| {
            let z: f64 = x.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() - truth.iter().sum::<f64>() / 2.0;
            let p = 1.0 / (1.0 + (-z).exp());
            if rng.random::<f64>() < p { Label::Sarcastic } else { Label::NotSarcastic }
        })
        .collect();
    labels[0] = Label::Sarcastic;
    labels[1] = Label::NotSarcastic;
    (rows, labels)
}

pub fn matrix_from(rows: Vec<Vec<f64>>, labels: Vec<Label>) -> PredictionMatrix {
    let m = rows[0].len();
    let n = rows.len();
    PredictionMatrix::new(
        (0..m).map(|j| format!("model_{j}")).collect(),
        (0..n).map(|i| format!("ex{i:05}")).collect(),
        rows,
        labels,
    )
    .unwrap()
}

/// Hard-label predictors that are each right with the given probability,
/// independently, over balanced gold labels.
pub fn noisy_predictors(seed: u64, n: usize, accuracies: &[(&str, f64)]) -> PredictionMatrix {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let labels: Vec<Label> = (0..n)
        .map(|_| if rng.random::<bool>() { Label::Sarcastic } else { Label::NotSarcastic })
        .collect();
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .map(|gold| {
            accuracies
                .iter()
                .map(|(_, acc)| {
                    let correct = rng.random::<f64>() < *acc;
                    f64::from(u8::from(correct == gold.is_sarcastic()))
                })
                .collect()
        })
        .collect();
    PredictionMatrix::new(
        accuracies.iter().map(|(id, _)| id.to_string()).collect(),
        (0..n).map(|i| format!("ex{i:05}")).collect(),
        rows,
        labels,
    )
    .unwrap()
}

/// Smallest value of the one-feature regularized log-loss over
/// `(w, b) ∈ [-20, 20]²` on a 0.01 grid, coded independently of the library.
pub fn grid_minimum(xs: &[f64], ys: &[f64], lambda: f64) -> f64 {
    let n = xs.len() as f64;
    let mut best = f64::INFINITY;
    for i in 0..=4000 {
        let w = -20.0 + i as f64 * 0.01;
        let penalty = lambda * w * w;
        for k in 0..=4000 {
            let b = -20.0 + k as f64 * 0.01;
            let mut loss = 0.0;
            for idx in 0..xs.len() {
                let z = w * xs[idx] + b;
                let log1p_exp = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
                loss += log1p_exp - ys[idx] * z;
            }
            let value = loss / n + penalty;
            if value < best {
                best = value;
            }
        }
    }
    best
}

use std::path::PathBuf;
use std::process::{Command, Output};

use sarcasm_core::corpus::{Corpus, Example, OriginSplit, Split};
use sarcasm_core::predictions::{write_predictions, Prediction};

pub fn sarcasm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sarcasm"))
        .current_dir(dir)
        .args(args)
        .env("OPENAI_API_KEY", "sk-test-not-a-real-key")
        .output()
        .unwrap()
}

pub fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

pub fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// A test-split corpus plus one model's predictions whose surviving rows
/// give tp=202, fp=123, fn=11, tn=91, with 13 refusals dropped.
pub fn write_gpt4o_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let groups = [
        (202, Label::Sarcastic, Some(1.0)),
        (123, Label::NotSarcastic, Some(1.0)),
        (11, Label::Sarcastic, Some(0.0)),
        (91, Label::NotSarcastic, Some(0.0)),
        (7, Label::Sarcastic, None),
        (6, Label::NotSarcastic, None),
    ];
    let mut examples = Vec::new();
    let mut predictions = Vec::new();
    for (count, label, p) in groups {
        for _ in 0..count {
            let id = format!("t{:04}", examples.len());
            examples.push(Example {
                id: id.clone(),
                text_source: format!("tweet {id}"),
                text_target: Some(format!("tvit {id}")),
                label,
                origin_split: OriginSplit::OrigTest,
                split: Some(Split::Test),
            });
            predictions.push(match p {
                Some(p) => Prediction::ok("gpt-4o", id, p),
                None => Prediction::refused("gpt-4o", id),
            });
        }
    }
    let corpus_path = dir.join("corpus.jsonl");
    Corpus::new(examples, "fixture", Some(42)).unwrap().save(&corpus_path).unwrap();
    let predictions_dir = dir.join("predictions");
    fs::create_dir_all(&predictions_dir).unwrap();
    write_predictions(&predictions_dir.join("gpt-4o.jsonl"), &predictions).unwrap();
    (corpus_path, predictions_dir)
}

/// Corpus with all three splits and `models` hard/soft predictors of
/// varying quality, written as prediction files.
pub fn write_ensemble_fixture(dir: &Path, models: usize, seed: u64) -> (PathBuf, PathBuf) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n = 300;
    let examples: Vec<Example> = (0..n)
        .map(|i| Example {
            id: format!("x{i:04}"),
            text_source: format!("tweet {i}"),
            text_target: None,
            label: if i % 2 == 0 { Label::Sarcastic } else { Label::NotSarcastic },
            origin_split: OriginSplit::OrigTrain,
            split: Some(match i % 10 {
                0 => Split::Val,
                1 => Split::Test,
                _ => Split::Train,
            }),
        })
        .collect();
    let predictions_dir = dir.join("predictions");
    fs::create_dir_all(&predictions_dir).unwrap();
    for j in 0..models {
        let quality = 0.55 + 0.08 * j as f64;
        let records: Vec<Prediction> = examples
            .iter()
            .map(|e| {
                let right = rng.random::<f64>() < quality;
                let leans_sarcastic = right == e.label.is_sarcastic();
                let p: f64 = if j % 2 == 0 {
                    f64::from(u8::from(leans_sarcastic))
                } else if leans_sarcastic {
                    rng.random_range(0.5..1.0)
                } else {
                    rng.random_range(0.0..0.5)
                };
                if rng.random::<f64>() < 0.02 {
                    Prediction::refused(format!("model-{j}"), e.id.clone())
                } else {
                    Prediction::ok(format!("model-{j}"), e.id.clone(), p)
                }
            })
            .collect();
        write_predictions(&predictions_dir.join(format!("model-{j}.jsonl")), &records).unwrap();
    }
    let corpus_path = dir.join("corpus.jsonl");
    Corpus::new(examples, "fixture", Some(seed)).unwrap().save(&corpus_path).unwrap();
    (corpus_path, predictions_dir)
}
