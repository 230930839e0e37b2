//! Few-shot prompt templates for translation and classification.
//!
//! Templates live in editable JSON files; the stock ones under `prompts/` are
//! compiled in as defaults. A rendered prompt maps onto one system message
//! (the instruction) and one user message (bulleted shots plus the query).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Example;
use crate::error::{Error, Result};

const DEFAULT_TRANSLATE: &str = include_str!("../../prompts/translate.json");
const DEFAULT_CLASSIFY: &str = include_str!("../../prompts/classify.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Translate,
    Classify,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shot {
    pub input: String,
    pub output: String,
}

impl Shot {
    pub fn new(input: impl Into<String>, output: impl Into<String>) -> Self {
        Shot {
            input: input.into(),
            output: output.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub task: Task,
    pub instruction: String,
    pub delimiter: String,
    pub few_shots: Vec<Shot>,
}

impl PromptTemplate {
    pub fn default_translation() -> Self {
        serde_json::from_str(DEFAULT_TRANSLATE).expect("bundled translation template parses")
    }

    pub fn default_classification() -> Self {
        serde_json::from_str(DEFAULT_CLASSIFY).expect("bundled classification template parses")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let template: PromptTemplate = serde_json::from_str(&raw)?;
        template.validate()?;
        Ok(template)
    }

    pub fn validate(&self) -> Result<()> {
        if self.few_shots.is_empty() {
            return Err(Error::InvalidTemplate("at least one few-shot example is required".into()));
        }
        if self.task == Task::Classify {
            let mut seen = [false; 2];
            for shot in &self.few_shots {
                match shot.output.as_str() {
                    "0" => seen[0] = true,
                    "1" => seen[1] = true,
                    other => {
                        return Err(Error::InvalidTemplate(format!(
                            "classification shot output must be `0` or `1`, got `{other}`"
                        )))
                    }
                }
            }
            if !(seen[0] && seen[1]) {
                return Err(Error::InvalidTemplate(
                    "classification shots must include both a sarcastic and a non-sarcastic example".into(),
                ));
            }
        }
        Ok(())
    }

    fn expect_task(&self, task: Task) -> Result<()> {
        if self.task != task {
            return Err(Error::InvalidTemplate(format!(
                "expected a {task:?} template, got {:?}",
                self.task
            )));
        }
        Ok(())
    }

    /// Renders the template around `query`. The query sits after the shots and
    /// is followed by the delimiter (trailing whitespace trimmed), so distinct
    /// queries always give distinct prompts.
    pub fn render(&self, query: &str) -> Result<RenderedPrompt> {
        self.validate()?;
        let mut user = String::new();
        for shot in &self.few_shots {
            user.push_str("- ");
            user.push_str(&shot.input);
            user.push_str(&self.delimiter);
            user.push_str(&shot.output);
            user.push('\n');
        }
        user.push('\n');
        user.push_str(query);
        user.push_str(self.delimiter.trim_end());
        Ok(RenderedPrompt {
            system: self.instruction.clone(),
            user,
        })
    }
}

/// Chat-ready prompt: one system and one user message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
}

impl RenderedPrompt {
    /// Both messages as one document, as used for hashing and display.
    pub fn text(&self) -> String {
        format!("{}\n\n{}", self.system, self.user)
    }

    /// Hex SHA-256 of [`RenderedPrompt::text`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.text().as_bytes()))
    }
}

pub fn render_translation_prompt(example: &Example, template: &PromptTemplate) -> Result<RenderedPrompt> {
    template.expect_task(Task::Translate)?;
    template.render(&example.text_source)
}

pub fn render_classification_prompt(text: &str, template: &PromptTemplate) -> Result<RenderedPrompt> {
    template.expect_task(Task::Classify)?;
    template.render(text)
}
