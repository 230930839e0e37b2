//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sarcasm_core::corpus::{load_isarcasm, merge_and_balance, Label};
use sarcasm_core::eval::{confusion, constant_predictions, display3, metrics, ConfusionMatrix};
use sarcasm_core::llm::parse_label;
use sarcasm_core::meta_learner::{predict_labels, select_top_k, train, tune_lambda, Objective, TrainOptions, DEFAULT_LAMBDA_GRID};
use sarcasm_core::voting::{hard_vote, mixed_vote, soft_vote, VotingConfig};

const METRICS_BUDGET: Duration = Duration::from_secs(1);
const BALANCE_BUDGET: Duration = Duration::from_secs(1);
const META_BUDGET: Duration = Duration::from_secs(30);
const BASELINE_F1_TOLERANCE: f64 = 0.001;
const VOTING_CASES: usize = 500;
const VOTING_SIZES: [usize; 5] = [3, 5, 7, 9, 11];
const FD_STEP: f64 = 1e-5;
const FD_MAX_RELATIVE_ERROR: f64 = 1e-5;
const FD_POINTS: usize = 20;
const GRID_ORACLE_SLACK: f64 = 1e-4;
const STACKING_MIN_VAL_ACCURACY: f64 = 0.9 - 0.02;
const FUZZ_CASES: usize = 10_000;

type Check = Result<String, String>;

fn ensure(cond: bool, message: impl Into<String>) -> Result<(), String> {
    if cond { Ok(()) } else { Err(message.into()) }
}

fn within_budget(start: Instant, budget: Duration) -> Result<Duration, String> {
    let elapsed = start.elapsed();
    ensure(elapsed < budget, format!("took {elapsed:.2?}, budget {budget:?}"))?;
    Ok(elapsed)
}

fn metrics_oracle() -> Check {
    let start = Instant::now();
    let m = metrics(&ConfusionMatrix::new(202, 123, 11, 91)).map_err(|e| e.to_string())?;
    let (acc, f1) = (display3(m.accuracy), display3(m.f1));
    ensure(acc == "0.686" && f1 == "0.751", format!("accuracy {acc}, F1 {f1}"))?;
    let elapsed = within_budget(start, METRICS_BUDGET)?;
    Ok(format!("accuracy {acc}, F1 {f1} in {elapsed:.2?}"))
}

fn balancing() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (train_path, test_path) = common::write_official_files(dir.path(), (867, 2601), (200, 1200));
    let start = Instant::now();
    let raw = load_isarcasm(&train_path, &test_path).map_err(|e| e.to_string())?;
    for seed in [0, 1, 42, 2024, u64::MAX] {
        let balanced = merge_and_balance(&raw, seed).map_err(|e| e.to_string())?;
        let c = balanced.counts();
        ensure(
            balanced.len() == 2134 && c.sarcastic == 1067 && c.not_sarcastic == 1067,
            format!("seed {seed}: {} ({}/{})", balanced.len(), c.sarcastic, c.not_sarcastic),
        )?;
    }
    let elapsed = within_budget(start, BALANCE_BUDGET)?;
    Ok(format!("2134 examples (1067/1067) for 5 seeds in {elapsed:.2?}"))
}

fn baselines() -> Check {
    let mut gold = vec![Label::Sarcastic; 200];
    gold.extend(vec![Label::NotSarcastic; 1200]);
    let pred = constant_predictions(Label::NotSarcastic, gold.len());
    let m = metrics(&confusion(&pred, &gold).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let (neg_acc, neg_f1) = (display3(m.accuracy), display3(m.f1));
    ensure(neg_acc == "0.857" && neg_f1 == "0.000", format!("all-negative {neg_acc}/{neg_f1}"))?;

    let mut balanced = vec![Label::Sarcastic; 1067];
    balanced.extend(vec![Label::NotSarcastic; 1067]);
    let pred = constant_predictions(Label::Sarcastic, balanced.len());
    let m = metrics(&confusion(&pred, &balanced).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let pos_acc = display3(m.accuracy);
    ensure(
        pos_acc == "0.500" && (m.f1 - 2.0 / 3.0).abs() <= BASELINE_F1_TOLERANCE,
        format!("all-positive {pos_acc}/{}", m.f1),
    )?;
    Ok(format!("all-negative {neg_acc}/{neg_f1}, all-positive {pos_acc}/{}", display3(m.f1)))
}

fn random_row(rng: &mut ChaCha20Rng, m: usize) -> Vec<f64> {
    (0..m)
        .map(|_| match rng.random_range(0..3) {
            0 => [0.0, 0.25, 0.5, 0.75, 1.0][rng.random_range(0..5)],
            1 => f64::from(u8::from(rng.random::<bool>())),
            _ => rng.random::<f64>(),
        })
        .collect()
}

fn voting_equivalences() -> Check {
    let mut rng = ChaCha20Rng::seed_from_u64(20_240_601);
    let (hard, soft) = (VotingConfig::hard(), VotingConfig::soft());
    let mut rows_checked = 0;
    for case in 0..VOTING_CASES {
        let m = VOTING_SIZES[case % VOTING_SIZES.len()];
        let n_rows = rng.random_range(1..60);
        let zero = VotingConfig::mixed(0);
        let full = VotingConfig::mixed(m);
        for _ in 0..n_rows {
            let row = random_row(&mut rng, m);
            let (h, s) = (hard_vote(&row, &hard), soft_vote(&row, &soft));
            let (m0, mm) = (mixed_vote(&row, &zero), mixed_vote(&row, &full));
            ensure(m0.as_ref().ok() == h.as_ref().ok(), format!("mixed(0) != hard on {row:?}"))?;
            ensure(mm.as_ref().ok() == s.as_ref().ok(), format!("mixed(M) != soft on {row:?}"))?;
            rows_checked += 1;
        }
    }

    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut enumerated = 0;
    for m in 1..=4usize {
        for code in 0..grid.len().pow(m as u32) {
            let row: Vec<f64> = (0..m).map(|j| grid[(code / grid.len().pow(j as u32)) % grid.len()]).collect();
            let votes = row.iter().filter(|&&p| p > 0.5).count();
            let expected = match (2 * votes).cmp(&m) {
                std::cmp::Ordering::Greater => Label::Sarcastic,
                std::cmp::Ordering::Less => Label::NotSarcastic,
                std::cmp::Ordering::Equal => hard.tie_label,
            };
            let got = hard_vote(&row, &hard).map_err(|e| e.to_string())?;
            ensure(got == expected, format!("hard_vote {row:?} = {got:?}, expected {expected:?}"))?;
            enumerated += 1;
        }
    }
    Ok(format!(
        "{VOTING_CASES} matrices ({rows_checked} rows), 0 mismatches; {enumerated} enumerated rows agree"
    ))
}

fn meta_numerics() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for point in 0..FD_POINTS {
        let (rows, labels) = common::random_design(point as u64, 40, 3);
        let lambda = DEFAULT_LAMBDA_GRID[point % DEFAULT_LAMBDA_GRID.len()];
        let objective = Objective::new(&rows, &labels, lambda);
        let theta: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (gw, gb) = objective.gradient(&theta[..3], theta[3]);
        let analytic: Vec<f64> = gw.into_iter().chain([gb]).collect();
        let mut diff = 0.0;
        let mut scale = 0.0;
        for (k, g) in analytic.iter().enumerate() {
            let (mut up, mut down) = (theta.clone(), theta.clone());
            up[k] += FD_STEP;
            down[k] -= FD_STEP;
            let fd = (objective.value(&up[..3], up[3]) - objective.value(&down[..3], down[3])) / (2.0 * FD_STEP);
            diff += (fd - g).powi(2);
            scale += g * g;
        }
        let rel = diff.sqrt() / scale.sqrt().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
    }
    ensure(worst < FD_MAX_RELATIVE_ERROR, format!("finite-difference relative error {worst:e}"))?;

    let (rows, labels) = common::random_design(5, 400, 5);
    let matrix = common::matrix_from(rows, labels);
    let mut norms = Vec::new();
    for &lambda in &DEFAULT_LAMBDA_GRID {
        let model = train(&matrix, TrainOptions { lambda, ..TrainOptions::default() }).map_err(|e| e.to_string())?;
        norms.push(model.weights.iter().map(|w| w * w).sum::<f64>().sqrt());
    }
    ensure(norms.windows(2).all(|w| w[1] <= w[0]), format!("weight norms {norms:?}"))?;

    let (rows, labels) = common::random_design(8, 8, 1);
    let small = common::matrix_from(rows.clone(), labels.clone());
    let lambda = 0.01;
    let model = train(&small, TrainOptions { lambda, ..TrainOptions::default() }).map_err(|e| e.to_string())?;
    let trained = Objective::new(&rows, &labels, lambda).value(&model.weights, model.intercept);
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let ys: Vec<f64> = labels.iter().map(|l| f64::from(l.as_u8())).collect();
    let best = common::grid_minimum(&xs, &ys, lambda);
    ensure(best >= trained - GRID_ORACLE_SLACK, format!("grid {best} below trained {trained}"))?;

    let elapsed = within_budget(start, META_BUDGET)?;
    Ok(format!(
        "max FD relative error {worst:.1e}, norms non-increasing, grid {best:.6} >= trained {trained:.6}, {elapsed:.2?}"
    ))
}

fn stacking_sanity() -> Check {
    let members = [("strong", 0.9), ("weak-a", 0.55), ("weak-b", 0.55), ("weak-c", 0.55), ("weak-d", 0.55)];
    let train_matrix = common::noisy_predictors(1, 2000, &members);
    let val_matrix = common::noisy_predictors(2, 2000, &members);
    let search = tune_lambda(&train_matrix, &val_matrix, &DEFAULT_LAMBDA_GRID, TrainOptions::default())
        .map_err(|e| e.to_string())?;
    let predicted = predict_labels(&search.model, &val_matrix).map_err(|e| e.to_string())?;
    let correct = predicted.iter().zip(val_matrix.labels()).filter(|(p, g)| p == g).count();
    let accuracy = correct as f64 / predicted.len() as f64;
    let top = select_top_k(&search.model, 1).map_err(|e| e.to_string())?;
    ensure(accuracy >= STACKING_MIN_VAL_ACCURACY, format!("validation accuracy {accuracy:.4}"))?;
    ensure(top == ["strong"], format!("top-1 {top:?}"))?;
    Ok(format!("validation accuracy {accuracy:.4} (lambda {}), top-1 {}", search.lambda, top[0]))
}

fn response_parsing() -> Check {
    let cases = [
        ("11", Some(Label::Sarcastic)),
        ("1\n1", Some(Label::Sarcastic)),
        ("0", Some(Label::NotSarcastic)),
        ("1", Some(Label::Sarcastic)),
        ("I'm sorry, but I can't help with classifying this text.", None),
        ("As an AI language model, I cannot determine sarcasm.", None),
    ];
    for (raw, expected) in cases {
        let got = parse_label(raw).value;
        ensure(got == expected, format!("{raw:?} -> {got:?}"))?;
    }
    let mut rng = ChaCha20Rng::seed_from_u64(10_000);
    let alphabet: Vec<char> = " \t\n01ab9-é😐".chars().collect();
    for i in 0..FUZZ_CASES {
        let len = rng.random_range(0..24);
        let raw = if i % 2 == 0 {
            let bytes: Vec<u8> = (0..len).map(|_| rng.random()).collect();
            String::from_utf8_lossy(&bytes).into_owned()
        } else {
            (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect()
        };
        let parsed = parse_label(&raw);
        let expected = match raw.trim_start().chars().next() {
            Some('0') => Some(Label::NotSarcastic),
            Some('1') => Some(Label::Sarcastic),
            _ => None,
        };
        ensure(parsed.value == expected, format!("{raw:?} -> {:?}", parsed.value))?;
        ensure(parsed.raw_text == raw, "raw text not preserved")?;
    }
    Ok(format!("{} fixed cases, {FUZZ_CASES} fuzzed strings", cases.len()))
}

fn run_pipeline(dir: &Path, base_url: &str) -> Result<Vec<(String, Vec<u8>)>, String> {
    common::write_official_files(dir, (60, 140), (20, 80));
    let llm = ["--base-url", base_url, "--cache", "cache.jsonl"];
    let mut steps: Vec<Vec<&str>> = vec![
        vec!["build-dataset", "--train", "train.csv", "--test", "test.csv"],
        [&["translate"][..], &llm].concat(),
    ];
    for model in ["llm-a", "llm-b", "llm-c"] {
        steps.push(
            [
                &["classify", "--model-id", model, "--model", model, "--corpus", "run/corpus.translated.jsonl"][..],
                &llm,
            ]
            .concat(),
        );
    }
    let sel = ["--corpus", "run/corpus.translated.jsonl"];
    steps.push([&["train-meta", "--k", "2"][..], &sel].concat());
    steps.push([&["ensemble", "--scheme", "hard"][..], &sel].concat());
    steps.push([&["ensemble", "--scheme", "mixed"][..], &sel].concat());
    steps.push([&["report", "--format", "csv"][..], &sel].concat());
    for step in steps {
        let args = [&step[..], &["--out", "run", "--seed", "11"]].concat();
        let out = common::sarcasm(dir, &args);
        ensure(out.status.success(), format!("{step:?} failed: {}", common::stderr(&out)))?;
    }
    let mut artifacts = Vec::new();
    for sub in ["run", "predictions"] {
        let mut names: Vec<String> = fs::read_dir(dir.join(sub))
            .map_err(|e| e.to_string())?
            .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
            .collect();
        names.sort();
        for name in names {
            let bytes = fs::read(dir.join(sub).join(&name)).map_err(|e| e.to_string())?;
            artifacts.push((format!("{sub}/{name}"), bytes));
        }
    }
    Ok(artifacts)
}

fn pipeline_determinism() -> Check {
    let endpoint = common::FakeEndpoint::start();
    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    let first = run_pipeline(a.path(), &endpoint.base_url)?;
    let second = run_pipeline(b.path(), &endpoint.base_url)?;
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    for required in ["run/corpus.jsonl", "run/corpus.translated.jsonl", "predictions/llm-a.jsonl", "run/report.csv"] {
        ensure(names.contains(&required), format!("missing {required}"))?;
    }
    ensure(
        first.iter().map(|(n, _)| n).eq(second.iter().map(|(n, _)| n)),
        "runs produced different file sets",
    )?;
    for ((name, x), (_, y)) in first.iter().zip(&second) {
        ensure(x == y, format!("{name} differs between runs"))?;
    }
    Ok(format!("{} artifacts byte-identical across two runs", first.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("metrics oracle", metrics_oracle),
        ("balancing", balancing),
        ("baselines", baselines),
        ("voting equivalences", voting_equivalences),
        ("meta-learner numerics", meta_numerics),
        ("stacking sanity", stacking_sanity),
        ("response parsing", response_parsing),
        ("pipeline determinism", pipeline_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
