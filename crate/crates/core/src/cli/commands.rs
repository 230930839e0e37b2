use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use super::{
    BuildDatasetArgs, ClassifyArgs, Command, EnsembleArgs, EnsembleScheme, LlmArgs, ReportArgs, SelectionArgs,
    TrainMetaArgs, TranslateArgs,
};
use crate::config::RunConfig;
use crate::corpus::{load_isarcasm, merge_and_balance, stratified_split, write_atomic, Corpus, Label, Split};
use crate::eval::{emit_report, EvalReport};
use crate::llm::{classify_corpus, translate_corpus, BatchSummary, ItemFailure, LlmClient, PromptTemplate, ResponseCache};
use crate::meta_learner::{predict, select_top_k, tune_lambda, MetaModel, TrainOptions};
use crate::predictions::{align, parse_predictions, write_predictions, AlignOptions, Alignment, Prediction};
use crate::voting::{tune_cutoff, vote_matrix, Scheme, VotingConfig};

/// What a command produced. `complete` is false when an artifact was written
/// but some items failed (the process then exits non-zero).
#[derive(Debug, Default)]
pub struct Outcome {
    pub messages: Vec<String>,
    pub complete: bool,
}

impl Outcome {
    fn done(messages: Vec<String>) -> Self {
        Outcome {
            messages,
            complete: true,
        }
    }
}

pub(super) fn dispatch(config: RunConfig, command: Command) -> anyhow::Result<Outcome> {
    match command {
        Command::BuildDataset(args) => build_dataset(config, args),
        Command::Translate(args) => translate(config, args),
        Command::Classify(args) => classify(config, args),
        Command::TrainMeta(args) => train_meta(config, args),
        Command::Ensemble(args) => ensemble(config, args),
        Command::Report(args) => report(config, args),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn echo_config(config: &RunConfig, command: &str) -> anyhow::Result<PathBuf> {
    let path = config.paths.output_dir.join(format!("{command}.config.toml"));
    write_atomic(&path, config.to_toml().as_bytes())?;
    Ok(path)
}

fn runtime() -> anyhow::Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread().enable_all().build()?)
}

fn build_dataset(mut config: RunConfig, args: BuildDatasetArgs) -> anyhow::Result<Outcome> {
    if let Some(train) = args.train {
        config.paths.train = Some(train);
    }
    if let Some(test) = args.test {
        config.paths.test = Some(test);
    }
    if let Some(ratios) = args.ratios {
        config.split = ratios;
    }
    if let Some(corpus) = args.corpus {
        config.paths.corpus = Some(corpus);
    }
    config.validate()?;
    let train = RunConfig::require_file("paths.train", config.paths.train.as_deref())?;
    let test = RunConfig::require_file("paths.test", config.paths.test.as_deref())?;

    let raw = load_isarcasm(&train, &test)?;
    let balanced = merge_and_balance(&raw, config.seed)?;
    let corpus = stratified_split(&balanced, config.split, config.seed)?;
    let out = config.paths.corpus_path();
    corpus.save(&out)?;
    echo_config(&config, "build-dataset")?;

    let counts = corpus.counts();
    let sizes: Vec<String> = [Split::Train, Split::Val, Split::Test]
        .iter()
        .map(|s| format!("{s} {}", corpus.in_split(*s).count()))
        .collect();
    Ok(Outcome::done(vec![
        format!(
            "{} examples ({}/{})",
            corpus.len(),
            counts.sarcastic,
            counts.not_sarcastic
        ),
        sizes.join(" / "),
        format!("wrote {}", out.display()),
    ]))
}

fn apply_llm_args(config: &mut RunConfig, llm: &LlmArgs) {
    if let Some(url) = &llm.base_url {
        config.llm.base_url = url.clone();
    }
    if let Some(model) = &llm.model {
        config.llm.model_name = model.clone();
    }
    if let Some(limit) = llm.concurrency {
        config.llm.concurrency_limit = limit;
    }
    if let Some(cache) = &llm.cache {
        config.paths.cache = cache.clone();
    }
}

fn load_template(path: Option<&Path>, fallback: fn() -> PromptTemplate) -> anyhow::Result<PromptTemplate> {
    match path {
        Some(p) => PromptTemplate::from_file(p).with_context(|| format!("loading prompt template {}", p.display())),
        None => Ok(fallback()),
    }
}

/// Persisted part of a batch summary; cache hit counts vary between reruns
/// and are only printed.
#[derive(Serialize)]
struct RunRecord<'a> {
    seed: u64,
    model_name: &'a str,
    base_url: &'a str,
    temperature: f64,
    total: usize,
    failures: &'a [ItemFailure],
    #[serde(skip_serializing_if = "Option::is_none")]
    refused: Option<usize>,
    template: &'a PromptTemplate,
}

fn summary_line(summary: &BatchSummary) -> String {
    format!(
        "{} prompts: {} cached, {} fetched, {} failed",
        summary.total,
        summary.from_cache,
        summary.fetched,
        summary.failures.len()
    )
}

fn translate(mut config: RunConfig, args: TranslateArgs) -> anyhow::Result<Outcome> {
    apply_llm_args(&mut config, &args.llm);
    if let Some(prompt) = &args.llm.prompt {
        config.paths.translate_prompt = Some(prompt.clone());
    }
    if let Some(corpus) = args.corpus {
        config.paths.corpus = Some(corpus);
    }
    config.validate()?;
    let corpus_path = RunConfig::require_file("paths.corpus", Some(&config.paths.corpus_path()))?;
    let template = load_template(config.paths.translate_prompt.as_deref(), PromptTemplate::default_translation)?;
    template.validate()?;

    let corpus = Corpus::load(&corpus_path)?;
    let client = LlmClient::new(config.llm.clone())?;
    let cache = ResponseCache::open(&config.paths.cache)?;
    let outcome = runtime()?.block_on(translate_corpus(&corpus, &template, &client, &cache))?;

    let out = config.paths.output_dir.join("corpus.translated.jsonl");
    outcome.corpus.save(&out)?;
    write_json(
        &config.paths.output_dir.join("translate.summary.json"),
        &RunRecord {
            seed: config.seed,
            model_name: &config.llm.model_name,
            base_url: &config.llm.base_url,
            temperature: config.llm.temperature,
            total: outcome.summary.total,
            failures: &outcome.summary.failures,
            refused: None,
            template: &template,
        },
    )?;
    echo_config(&config, "translate")?;

    let mut messages = vec![summary_line(&outcome.summary), format!("wrote {}", out.display())];
    for failure in &outcome.summary.failures {
        messages.push(format!("failed {}: {}", failure.example_id, failure.error));
    }
    Ok(Outcome {
        messages,
        complete: outcome.summary.failures.is_empty(),
    })
}

fn classify(mut config: RunConfig, args: ClassifyArgs) -> anyhow::Result<Outcome> {
    apply_llm_args(&mut config, &args.llm);
    if let Some(prompt) = &args.llm.prompt {
        config.paths.classify_prompt = Some(prompt.clone());
    }
    if let Some(corpus) = args.corpus {
        config.paths.corpus = Some(corpus);
    }
    if let Some(dir) = args.predictions_dir {
        config.paths.predictions_dir = dir;
    }
    if args.model_id.is_empty() || args.model_id.contains(['/', '\\']) {
        bail!("invalid --model-id `{}`", args.model_id);
    }
    config.validate()?;
    let corpus_path = RunConfig::require_file("paths.corpus", Some(&config.paths.corpus_path()))?;
    let template = load_template(config.paths.classify_prompt.as_deref(), PromptTemplate::default_classification)?;
    template.validate()?;

    let mut corpus = Corpus::load(&corpus_path)?;
    if let Some(split) = args.split {
        corpus = corpus.with_examples(corpus.in_split(split).cloned().collect())?;
    }
    let client = LlmClient::new(config.llm.clone())?;
    let cache = ResponseCache::open(&config.paths.cache)?;
    let outcome = runtime()?.block_on(classify_corpus(&corpus, &template, &client, &args.model_id, &cache))?;

    let dir = &config.paths.predictions_dir;
    let out = dir.join(format!("{}.jsonl", args.model_id));
    write_predictions(&out, &outcome.predictions)?;
    let refused = outcome.predictions.iter().filter(|p| p.usable().is_none()).count();
    write_json(
        &dir.join(format!("{}.meta.json", args.model_id)),
        &RunRecord {
            seed: config.seed,
            model_name: &config.llm.model_name,
            base_url: &config.llm.base_url,
            temperature: config.llm.temperature,
            total: outcome.summary.total,
            failures: &outcome.summary.failures,
            refused: Some(refused),
            template: &template,
        },
    )?;
    echo_config(&config, "classify")?;

    let mut messages = vec![
        summary_line(&outcome.summary),
        format!("{refused} refused"),
        format!("wrote {}", out.display()),
    ];
    for failure in &outcome.summary.failures {
        messages.push(format!("failed {}: {}", failure.example_id, failure.error));
    }
    Ok(Outcome {
        messages,
        complete: outcome.summary.failures.is_empty(),
    })
}

/// Reads every `*.jsonl` file in `dir`, in file-name order.
fn load_predictions_dir(dir: &Path) -> anyhow::Result<Vec<Prediction>> {
    RunConfig::require_dir("paths.predictions_dir", dir)?;
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
        .collect();
    files.sort();
    let mut all = Vec::new();
    for file in files {
        let text = fs::read_to_string(&file)?;
        all.extend(parse_predictions(&text, &file.display().to_string())?.predictions);
    }
    Ok(all)
}

struct Selection {
    corpus: Corpus,
    predictions: Vec<Prediction>,
    options: AlignOptions,
}

fn select(config: &mut RunConfig, args: &SelectionArgs, members: Option<&[String]>) -> anyhow::Result<Selection> {
    if let Some(corpus) = &args.corpus {
        config.paths.corpus = Some(corpus.clone());
    }
    if let Some(dir) = &args.predictions_dir {
        config.paths.predictions_dir = dir.clone();
    }
    if let Some(exclude) = &args.exclude {
        config.ensemble.exclude = exclude.clone();
    }
    if args.allow_low_coverage {
        config.ensemble.allow_low_coverage = true;
    }
    config.validate()?;
    let corpus_path = RunConfig::require_file("paths.corpus", Some(&config.paths.corpus_path()))?;
    let corpus = Corpus::load(&corpus_path)?;
    let mut predictions = load_predictions_dir(&config.paths.predictions_dir)?;
    let members = members.or(args.members.as_deref());
    if let Some(members) = members {
        for m in members {
            if !predictions.iter().any(|p| &p.model_id == m) {
                bail!("no predictions found for model `{m}`");
            }
        }
        predictions.retain(|p| members.contains(&p.model_id));
    }
    predictions.retain(|p| !config.ensemble.exclude.contains(&p.model_id));
    if predictions.is_empty() {
        bail!("no predictions left after member selection");
    }
    Ok(Selection {
        corpus,
        predictions,
        options: AlignOptions {
            min_coverage: config.ensemble.min_coverage,
            allow_low_coverage: config.ensemble.allow_low_coverage,
        },
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct AlignmentSummary {
    rows: usize,
    split_size: usize,
    dropped_rows: usize,
    dropped_per_model: BTreeMap<String, usize>,
}

impl From<&Alignment> for AlignmentSummary {
    fn from(a: &Alignment) -> Self {
        AlignmentSummary {
            rows: a.matrix.n_examples(),
            split_size: a.split_size,
            dropped_rows: a.dropped_rows,
            dropped_per_model: a.dropped_per_model.clone(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CutoffTuning {
    n: usize,
    val_accuracy: f64,
}

/// One evaluated ensemble, as written to `ensemble.<name>.json`.
#[derive(Debug, Serialize, Deserialize)]
struct EnsembleArtifact {
    seed: u64,
    split: Split,
    scheme: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cutoff_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cutoff_tuning: Option<CutoffTuning>,
    alignment: AlignmentSummary,
    report: EvalReport,
}

fn write_ensemble(
    config: &RunConfig,
    artifact: &EnsembleArtifact,
    predictions: &[Prediction],
) -> anyhow::Result<(PathBuf, PathBuf)> {
    let name = &artifact.report.name;
    let report_path = config.paths.output_dir.join(format!("ensemble.{name}.json"));
    let preds_path = config.paths.output_dir.join(format!("ensemble.{name}.predictions.jsonl"));
    write_json(&report_path, artifact)?;
    write_predictions(&preds_path, predictions)?;
    Ok((report_path, preds_path))
}

fn train_meta(mut config: RunConfig, args: TrainMetaArgs) -> anyhow::Result<Outcome> {
    if let Some(grid) = args.lambda_grid {
        config.ensemble.lambda_grid = grid;
    }
    if let Some(k) = args.k {
        config.ensemble.top_k = k;
    }
    let selection = select(&mut config, &args.selection, None)?;
    let align_split = |split| align(&selection.predictions, &selection.corpus, Some(split), selection.options);
    let train = align_split(Split::Train)?;
    let val = align_split(Split::Val)?;
    let test = align_split(Split::Test)?;

    let options = TrainOptions {
        lambda: 0.0,
        tolerance: config.ensemble.tolerance,
        max_iters: config.ensemble.max_iters,
    };
    let search = tune_lambda(&train.matrix, &val.matrix, &config.ensemble.lambda_grid, options)?;
    let model = &search.model;
    let k = config.ensemble.top_k.min(model.weights.len());
    let top = select_top_k(model, k)?;

    let probabilities = predict(model, &test.matrix)?;
    let labels: Vec<Label> = probabilities
        .iter()
        .map(|&p| if p > 0.5 { Label::Sarcastic } else { Label::NotSarcastic })
        .collect();
    let name = "l2-logistic-regression".to_string();
    let report = EvalReport::from_labels(name.clone(), &labels, test.matrix.labels(), test.dropped_rows)?
        .with_members(model.model_ids.clone());

    let out = &config.paths.output_dir;
    write_json(&out.join("meta_model.json"), model)?;
    #[derive(Serialize)]
    struct MetaReport<'a> {
        seed: u64,
        lambda: f64,
        lambda_scores: &'a [(f64, f64)],
        weights: BTreeMap<&'a str, f64>,
        intercept: f64,
        top_k: &'a [String],
        alignment: BTreeMap<&'static str, AlignmentSummary>,
        test_report: &'a EvalReport,
    }
    write_json(
        &out.join("meta_report.json"),
        &MetaReport {
            seed: config.seed,
            lambda: search.lambda,
            lambda_scores: &search.scores,
            weights: model.model_ids.iter().map(String::as_str).zip(model.weights.iter().copied()).collect(),
            intercept: model.intercept,
            top_k: &top,
            alignment: BTreeMap::from([
                ("train", AlignmentSummary::from(&train)),
                ("val", AlignmentSummary::from(&val)),
                ("test", AlignmentSummary::from(&test)),
            ]),
            test_report: &report,
        },
    )?;
    let stacked: Vec<Prediction> = test
        .matrix
        .example_ids()
        .iter()
        .zip(&probabilities)
        .map(|(id, &p)| Prediction::ok(name.clone(), id.clone(), p))
        .collect();
    let artifact = EnsembleArtifact {
        seed: config.seed,
        split: Split::Test,
        scheme: "stacking".into(),
        cutoff_n: None,
        cutoff_tuning: None,
        alignment: AlignmentSummary::from(&test),
        report,
    };
    write_ensemble(&config, &artifact, &stacked)?;
    echo_config(&config, "train-meta")?;

    let mut messages = vec![format!(
        "lambda = {} (validation accuracy {:.3})",
        search.lambda,
        search.scores.iter().find(|(l, _)| *l == search.lambda).map_or(0.0, |s| s.1)
    )];
    for (id, w) in model.model_ids.iter().zip(&model.weights) {
        messages.push(format!("  {id}: {w:+.4}"));
    }
    messages.push(format!("top-{k}: {}", top.join(", ")));
    messages.push(format!(
        "test accuracy {:.3}, F1 {:.3} over {} examples ({} dropped)",
        artifact.report.accuracy, artifact.report.f1, artifact.report.evaluated, artifact.report.dropped
    ));
    Ok(Outcome::done(messages))
}

fn ensemble(mut config: RunConfig, args: EnsembleArgs) -> anyhow::Result<Outcome> {
    if let Some(threshold) = args.threshold {
        config.ensemble.threshold = threshold;
    }
    if let Some(tie) = args.tie_label {
        config.ensemble.tie_label = tie;
    }
    if let Some(k) = args.k {
        config.ensemble.top_k = k;
    }
    let scheme = match args.scheme {
        Some(s) => s,
        None => match config.ensemble.scheme {
            Scheme::Hard => EnsembleScheme::Hard,
            Scheme::Soft => EnsembleScheme::Soft,
            Scheme::Mixed => EnsembleScheme::Mixed,
        },
    };
    if args.n.is_some() {
        config.ensemble.cutoff_n = args.n;
    }

    if scheme == EnsembleScheme::Stacking {
        let path = args
            .meta_model
            .clone()
            .unwrap_or_else(|| config.paths.output_dir.join("meta_model.json"));
        let path = RunConfig::require_file("meta_model", Some(&path))?;
        let model: MetaModel = serde_json::from_str(&fs::read_to_string(&path)?)?;
        let selection = select(&mut config, &args.selection, Some(&model.model_ids))?;
        let test = align(&selection.predictions, &selection.corpus, Some(Split::Test), selection.options)?;
        let matrix = test.matrix.select_models(&model.model_ids)?;
        let probabilities = predict(&model, &matrix)?;
        let labels: Vec<Label> = probabilities
            .iter()
            .map(|&p| if p > 0.5 { Label::Sarcastic } else { Label::NotSarcastic })
            .collect();
        let name = args.name.clone().unwrap_or_else(|| "l2-logistic-regression".into());
        let report = EvalReport::from_labels(name.clone(), &labels, matrix.labels(), test.dropped_rows)?
            .with_members(model.model_ids.clone());
        let preds: Vec<Prediction> = matrix
            .example_ids()
            .iter()
            .zip(&probabilities)
            .map(|(id, &p)| Prediction::ok(name.clone(), id.clone(), p))
            .collect();
        let artifact = EnsembleArtifact {
            seed: config.seed,
            split: Split::Test,
            scheme: "stacking".into(),
            cutoff_n: None,
            cutoff_tuning: None,
            alignment: AlignmentSummary::from(&test),
            report,
        };
        let (report_path, _) = write_ensemble(&config, &artifact, &preds)?;
        echo_config(&config, "ensemble")?;
        return Ok(Outcome::done(vec![
            format_report_line(&artifact.report),
            format!("wrote {}", report_path.display()),
        ]));
    }

    let (members, member_tag) = match &args.top_k_from {
        Some(path) => {
            let path = RunConfig::require_file("top_k_from", Some(path))?;
            let model: MetaModel = serde_json::from_str(&fs::read_to_string(&path)?)?;
            let k = config.ensemble.top_k;
            (Some(select_top_k(&model, k)?), format!("best-{k}"))
        }
        None => match &args.selection.members {
            Some(m) => (Some(m.clone()), "selected".to_string()),
            None => (None, "all".to_string()),
        },
    };
    let selection = select(&mut config, &args.selection, members.as_deref())?;
    let test = align(&selection.predictions, &selection.corpus, Some(Split::Test), selection.options)?;

    let voting_scheme = match scheme {
        EnsembleScheme::Hard => Scheme::Hard,
        EnsembleScheme::Soft => Scheme::Soft,
        _ => Scheme::Mixed,
    };
    config.ensemble.scheme = voting_scheme;
    let mut voting = VotingConfig {
        scheme: voting_scheme,
        cutoff_n: config.ensemble.cutoff_n.unwrap_or(0),
        threshold: config.ensemble.threshold,
        tie_label: config.ensemble.tie_label,
    };
    let mut tuning = None;
    if voting_scheme == Scheme::Mixed && config.ensemble.cutoff_n.is_none() {
        let val = align(&selection.predictions, &selection.corpus, Some(Split::Val), selection.options)?;
        let (n, acc) = tune_cutoff(&val.matrix, &voting)?;
        voting.cutoff_n = n;
        tuning = Some(CutoffTuning { n, val_accuracy: acc });
    }
    let labels = vote_matrix(&test.matrix, &voting)?;
    let name = args
        .name
        .clone()
        .unwrap_or_else(|| format!("{voting_scheme}-voting-{member_tag}"));
    let report = EvalReport::from_labels(name.clone(), &labels, test.matrix.labels(), test.dropped_rows)?
        .with_members(test.matrix.model_ids().to_vec());
    let preds: Vec<Prediction> = test
        .matrix
        .example_ids()
        .iter()
        .zip(&labels)
        .map(|(id, l)| Prediction::ok(name.clone(), id.clone(), f64::from(l.as_u8())))
        .collect();
    let artifact = EnsembleArtifact {
        seed: config.seed,
        split: Split::Test,
        scheme: voting_scheme.to_string(),
        cutoff_n: (voting_scheme == Scheme::Mixed).then_some(voting.cutoff_n),
        cutoff_tuning: tuning,
        alignment: AlignmentSummary::from(&test),
        report,
    };
    let (report_path, _) = write_ensemble(&config, &artifact, &preds)?;
    echo_config(&config, "ensemble")?;
    let mut messages = vec![format_report_line(&artifact.report)];
    if let Some(t) = &artifact.cutoff_tuning {
        messages.push(format!("tuned n = {} (validation accuracy {:.3})", t.n, t.val_accuracy));
    }
    messages.push(format!("members: {}", artifact.report.members.join(", ")));
    messages.push(format!("wrote {}", report_path.display()));
    Ok(Outcome::done(messages))
}

fn format_report_line(r: &EvalReport) -> String {
    format!(
        "{}: accuracy {:.3}, F1 {:.3} over {} examples ({} dropped)",
        r.name, r.accuracy, r.f1, r.evaluated, r.dropped
    )
}

fn discover_reports(out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if !out.is_dir() {
        return Ok(Vec::new());
    }
    let mut files: Vec<PathBuf> = fs::read_dir(out)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("ensemble.") && n.ends_with(".json"))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn report(mut config: RunConfig, args: ReportArgs) -> anyhow::Result<Outcome> {
    if let Some(corpus) = args.corpus {
        config.paths.corpus = Some(corpus);
    }
    if let Some(dir) = args.predictions_dir {
        config.paths.predictions_dir = dir;
    }
    config.validate()?;
    let corpus = Corpus::load(&RunConfig::require_file("paths.corpus", Some(&config.paths.corpus_path()))?)?;

    let mut reports = Vec::new();
    let mut messages = Vec::new();
    if config.paths.predictions_dir.is_dir() {
        let predictions = load_predictions_dir(&config.paths.predictions_dir)?;
        let mut by_model: BTreeMap<&str, Vec<Prediction>> = BTreeMap::new();
        for p in &predictions {
            by_model.entry(p.model_id.as_str()).or_default().push(p.clone());
        }
        let options = AlignOptions {
            min_coverage: 0.0,
            allow_low_coverage: true,
        };
        for (model, preds) in by_model {
            let aligned = align(&preds, &corpus, Some(args.split), options)?;
            if aligned.matrix.n_examples() == 0 {
                messages.push(format!("skipped {model}: no usable predictions in {} split", args.split));
                continue;
            }
            let threshold = config.ensemble.threshold;
            let labels: Vec<Label> = aligned
                .matrix
                .rows()
                .iter()
                .map(|row| if row[0] > threshold { Label::Sarcastic } else { Label::NotSarcastic })
                .collect();
            reports.push(EvalReport::from_labels(model, &labels, aligned.matrix.labels(), aligned.dropped_rows)?);
        }
    }
    let report_files = match &args.reports {
        Some(files) => files.clone(),
        None => discover_reports(&config.paths.output_dir)?,
    };
    for file in report_files {
        let artifact: EnsembleArtifact = serde_json::from_str(&fs::read_to_string(&file)?)
            .with_context(|| format!("reading ensemble report {}", file.display()))?;
        reports.push(artifact.report);
    }
    if reports.is_empty() {
        bail!("nothing to report: no predictions or ensemble reports found");
    }
    let document = emit_report(&reports, args.format);
    let out = config.paths.output_dir.join(format!("report.{}", args.format.extension()));
    write_atomic(&out, document.as_bytes())?;
    echo_config(&config, "report")?;
    messages.insert(0, document.trim_end().to_string());
    messages.push(format!("wrote {}", out.display()));
    Ok(Outcome::done(messages))
}
