//! Translate-train sarcasm detection: corpus preparation, few-shot prompting
//! of an OpenAI-compatible endpoint, and stacking / voting ensembles over
//! base-model probabilities with exact evaluation reporting.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod llm;
pub mod meta_learner;
pub mod predictions;
pub mod voting;

pub use error::{Error, Result};
