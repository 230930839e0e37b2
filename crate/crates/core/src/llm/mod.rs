//! Prompting an OpenAI-compatible endpoint for translation and few-shot
//! classification.

mod batch;
mod cache;
mod client;
mod parse;
mod prompt;

pub use batch::{classify_corpus, translate_corpus, BatchSummary, ClassificationOutcome, ItemFailure, TranslationOutcome};
pub use cache::{cache_key, CacheEntry, ResponseCache};
pub use client::{LlmClient, LlmConfig};
pub use parse::{parse_label, render_label, ParsedLabel};
pub use prompt::{
    render_classification_prompt, render_translation_prompt, PromptTemplate, RenderedPrompt, Shot, Task,
};
