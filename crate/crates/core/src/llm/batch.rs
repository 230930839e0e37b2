//! Resumable batch translation and classification over a corpus.
//!
//! Each example becomes one prompt. Cached responses are reused without a
//! network call, fresh ones are appended to the cache as they complete, and a
//! per-example failure is recorded in the summary while the run continues.

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use super::cache::ResponseCache;
use super::client::LlmClient;
use super::parse::{parse_label, ParsedLabel};
use super::prompt::{render_classification_prompt, render_translation_prompt, PromptTemplate, RenderedPrompt, Task};
use crate::corpus::{Corpus, Example};
use crate::error::{Error, Result};
use crate::predictions::Prediction;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemFailure {
    pub example_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub total: usize,
    pub from_cache: usize,
    pub fetched: usize,
    pub failures: Vec<ItemFailure>,
}

#[derive(Debug)]
pub struct TranslationOutcome {
    pub corpus: Corpus,
    pub summary: BatchSummary,
}

#[derive(Debug)]
pub struct ClassificationOutcome {
    /// One record per successfully answered example, in corpus order.
    pub predictions: Vec<Prediction>,
    pub parsed: Vec<(String, ParsedLabel)>,
    pub summary: BatchSummary,
}

enum Source {
    Cache,
    Network,
}

async fn run_prompts(
    client: &LlmClient,
    cache: &ResponseCache,
    prompts: Vec<(String, RenderedPrompt)>,
) -> (Vec<(String, Result<String>)>, BatchSummary) {
    let model = client.config().model_name.clone();
    let limit = client.config().concurrency_limit;
    let total = prompts.len();

    let results: Vec<(String, Result<(String, Source)>)> = stream::iter(prompts)
        .map(|(id, prompt)| {
            let model = model.clone();
            async move {
                let hash = prompt.hash();
                if let Some(hit) = cache.get(&model, &hash) {
                    return (id, Ok((hit, Source::Cache)));
                }
                let outcome = match client.complete(&prompt).await {
                    Ok(response) => cache.insert(&model, &hash, &response).map(|_| (response, Source::Network)),
                    Err(e) => Err(e),
                };
                (id, outcome)
            }
        })
        .buffered(limit)
        .collect()
        .await;

    let mut summary = BatchSummary {
        total,
        ..BatchSummary::default()
    };
    let responses = results
        .into_iter()
        .map(|(id, outcome)| match outcome {
            Ok((text, source)) => {
                match source {
                    Source::Cache => summary.from_cache += 1,
                    Source::Network => summary.fetched += 1,
                }
                (id, Ok(text))
            }
            Err(e) => {
                log::warn!("example {id} failed: {e}");
                summary.failures.push(ItemFailure {
                    example_id: id.clone(),
                    error: e.to_string(),
                });
                (id, Err(e))
            }
        })
        .collect();
    (responses, summary)
}

/// Fills `text_target` for every example. Examples whose request failed keep
/// their previous target (usually none) and are listed in the summary.
pub async fn translate_corpus(
    corpus: &Corpus,
    template: &PromptTemplate,
    client: &LlmClient,
    cache: &ResponseCache,
) -> Result<TranslationOutcome> {
    if template.task != Task::Translate {
        return Err(Error::InvalidTemplate("translate_corpus needs a translate template".into()));
    }
    template.validate()?;
    let prompts = corpus
        .examples()
        .iter()
        .map(|e| Ok((e.id.clone(), render_translation_prompt(e, template)?)))
        .collect::<Result<Vec<_>>>()?;
    let (responses, summary) = run_prompts(client, cache, prompts).await;

    let examples = corpus
        .examples()
        .iter()
        .zip(responses)
        .map(|(example, (_, response))| match response {
            Ok(text) => Example {
                text_target: Some(text.trim().to_string()),
                ..example.clone()
            },
            Err(_) => example.clone(),
        })
        .collect();
    Ok(TranslationOutcome {
        corpus: corpus.with_examples(examples)?,
        summary,
    })
}

/// Classifies every example (translation when present, else source text).
/// Parsed tokens become probabilities `0.0` / `1.0`; refusals are kept as
/// `refused` records.
pub async fn classify_corpus(
    corpus: &Corpus,
    template: &PromptTemplate,
    client: &LlmClient,
    model_id: &str,
    cache: &ResponseCache,
) -> Result<ClassificationOutcome> {
    if template.task != Task::Classify {
        return Err(Error::InvalidTemplate("classify_corpus needs a classify template".into()));
    }
    template.validate()?;
    let prompts = corpus
        .examples()
        .iter()
        .map(|e| Ok((e.id.clone(), render_classification_prompt(e.classification_text(), template)?)))
        .collect::<Result<Vec<_>>>()?;
    let (responses, summary) = run_prompts(client, cache, prompts).await;

    let mut predictions = Vec::new();
    let mut parsed = Vec::new();
    for (id, response) in responses {
        let Ok(raw) = response else { continue };
        let label = parse_label(&raw);
        predictions.push(match label.value {
            Some(value) => Prediction::ok(model_id, id.clone(), f64::from(value.as_u8())),
            None => Prediction::refused(model_id, id.clone()),
        });
        parsed.push((id, label));
    }
    Ok(ClassificationOutcome {
        predictions,
        parsed,
        summary,
    })
}
