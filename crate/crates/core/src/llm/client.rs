//! Minimal OpenAI-compatible chat-completions client.
//!
//! Retries transport failures, `429` and `5xx` with exponential backoff (no
//! jitter, so reruns are reproducible) and caps in-flight requests with a
//! semaphore shared by every clone of the client.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Semaphore;

use super::prompt::RenderedPrompt;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub base_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub max_retries: u32,
    pub request_timeout_secs: u64,
    pub concurrency_limit: usize,
    /// Name of the environment variable holding the API key. The key itself
    /// never appears in config files, logs or caches.
    pub api_key_env: String,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig::new("https://api.openai.com/v1", "gpt-4o-2024-05-13")
    }
}

impl LlmConfig {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        LlmConfig {
            base_url: base_url.into(),
            model_name: model_name.into(),
            temperature: 0.0,
            max_output_tokens: 256,
            max_retries: 5,
            request_timeout_secs: 60,
            concurrency_limit: 4,
            api_key_env: "OPENAI_API_KEY".to_string(),
            initial_backoff_ms: 500,
            max_backoff_ms: 30_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.concurrency_limit == 0 {
            return Err(Error::InvalidLlmConfig("concurrency_limit must be at least 1".into()));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(Error::InvalidLlmConfig(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.base_url.is_empty() {
            return Err(Error::InvalidLlmConfig("base_url is empty".into()));
        }
        if self.model_name.is_empty() {
            return Err(Error::InvalidLlmConfig("model_name is empty".into()));
        }
        if self.max_output_tokens == 0 {
            return Err(Error::InvalidLlmConfig("max_output_tokens must be at least 1".into()));
        }
        Ok(())
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u64.checked_shl(attempt).unwrap_or(u64::MAX);
        Duration::from_millis(self.initial_backoff_ms.saturating_mul(factor).min(self.max_backoff_ms))
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

#[derive(Clone)]
pub struct LlmClient {
    config: Arc<LlmConfig>,
    http: reqwest::Client,
    api_key: Option<String>,
    permits: Arc<Semaphore>,
}

impl std::fmt::Debug for LlmClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LlmClient")
            .field("base_url", &self.config.base_url)
            .field("model", &self.config.model_name)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl LlmClient {
    /// Builds a client, reading the API key from `config.api_key_env`. A
    /// missing variable is allowed (local endpoints often need no key).
    pub fn new(config: LlmConfig) -> Result<Self> {
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        Self::with_api_key(config, api_key)
    }

    pub fn with_api_key(config: LlmConfig, api_key: Option<String>) -> Result<Self> {
        config.validate()?;
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs(config.request_timeout_secs))
            .build()
            .map_err(|e| Error::InvalidLlmConfig(e.to_string()))?;
        Ok(LlmClient {
            permits: Arc::new(Semaphore::new(config.concurrency_limit)),
            config: Arc::new(config),
            http,
            api_key,
        })
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    /// Sends one chat completion and returns the assistant message content.
    pub async fn complete(&self, prompt: &RenderedPrompt) -> Result<String> {
        let body = json!({
            "model": self.config.model_name,
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": prompt.user},
            ],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_output_tokens,
        });
        let url = self.endpoint();
        let mut last_status = None;
        let mut last_message = String::new();
        let attempts = self.config.max_retries + 1;

        for attempt in 0..attempts {
            if attempt > 0 {
                tokio::time::sleep(self.config.backoff(attempt - 1)).await;
            }
            let response = {
                let _permit = self.permits.acquire().await.expect("semaphore never closed");
                let mut request = self.http.post(&url).json(&body);
                if let Some(key) = &self.api_key {
                    request = request.bearer_auth(key);
                }
                match request.send().await {
                    Ok(resp) => {
                        let status = resp.status();
                        resp.text().await.map(|text| (status, text))
                    }
                    Err(e) => Err(e),
                }
            };
            let (status, text) = match response {
                Ok(ok) => ok,
                Err(e) => {
                    log::warn!("request to {url} failed (attempt {}): {e}", attempt + 1);
                    last_message = e.to_string();
                    continue;
                }
            };
            if status.is_success() {
                return extract_content(&text);
            }
            last_status = Some(status.as_u16());
            last_message = truncate(&text, 200);
            if status.as_u16() == 429 || status.is_server_error() {
                log::warn!("{url} returned {status} (attempt {})", attempt + 1);
                continue;
            }
            return Err(Error::Transport {
                attempts: attempt + 1,
                last_status,
                message: last_message,
            });
        }
        Err(Error::Transport {
            attempts,
            last_status,
            message: last_message,
        })
    }
}

fn extract_content(body: &str) -> Result<String> {
    let parsed: ChatResponse = serde_json::from_str(body)
        .map_err(|e| Error::Protocol(format!("unexpected response body ({e}): {}", truncate(body, 200))))?;
    parsed
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| Error::Protocol("response has no choices[0].message.content".into()))
}

fn truncate(text: &str, max_chars: usize) -> String {
    text.chars().take(max_chars).collect()
}
