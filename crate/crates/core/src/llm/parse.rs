use serde::{Deserialize, Serialize};

use crate::corpus::Label;

/// A generative model's answer reduced to a class token.
///
/// `value` is `None` when the model refused: the first non-whitespace
/// character was neither `0` nor `1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedLabel {
    pub value: Option<Label>,
    pub raw_text: String,
}

impl ParsedLabel {
    pub fn is_refused(&self) -> bool {
        self.value.is_none()
    }
}

/// Only the first character counts, so continuations such as `11` or `1\n1`
/// truncate to their leading token.
pub fn parse_label(raw: &str) -> ParsedLabel {
    let value = match raw.trim_start().chars().next() {
        Some('0') => Some(Label::NotSarcastic),
        Some('1') => Some(Label::Sarcastic),
        _ => None,
    };
    ParsedLabel {
        value,
        raw_text: raw.to_string(),
    }
}

/// Canonical text for a parsed value; `parse_label(render_label(v)).value == v`.
pub fn render_label(value: Option<Label>) -> &'static str {
    match value {
        Some(Label::NotSarcastic) => "0",
        Some(Label::Sarcastic) => "1",
        None => "refused",
    }
}
