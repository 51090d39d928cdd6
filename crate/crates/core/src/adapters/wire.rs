//! Minimal client for chat-completion style HTTP endpoints.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{AdapterError, TokenUsage};

/// Where and how to reach a chat-completion endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    /// Base URL; `/chat/completions` is appended.
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the bearer token, if any.
    pub api_key_env: Option<String>,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub retry_backoff_ms: u64,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8000/v1".into(),
            model: "default".into(),
            api_key_env: None,
            timeout_ms: 120_000,
            max_retries: 2,
            retry_backoff_ms: 500,
            temperature: None,
            max_tokens: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    #[serde(skip_serializing_if = "Option::is_none")]
    temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_tokens: Option<u32>,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct Usage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

/// Blocking chat-completion client with retry on transport errors, 429 and
/// 5xx responses.
#[derive(Debug, Clone)]
pub struct ChatClient {
    config: EndpointConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl ChatClient {
    /// Builds a client, reading the API key from `api_key_env` if set.
    pub fn new(config: EndpointConfig) -> Result<Self, AdapterError> {
        let api_key = match &config.api_key_env {
            Some(var) => Some(
                std::env::var(var)
                    .map_err(|_| AdapterError::Config(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self { config, api_key, agent })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    pub fn complete(&self, messages: &[ChatMessage]) -> Result<(String, TokenUsage), AdapterError> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = ChatRequest {
            model: &self.config.model,
            messages,
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        };

        let attempts = self.config.max_retries + 1;
        let mut last_error = String::new();
        for attempt in 1..=attempts {
            if attempt > 1 {
                std::thread::sleep(Duration::from_millis(
                    self.config.retry_backoff_ms * u64::from(attempt - 1),
                ));
            }
            let mut req = self.agent.post(&url);
            if let Some(key) = &self.api_key {
                req = req.header("Authorization", &format!("Bearer {key}"));
            }
            let mut resp = match req.send_json(&body) {
                Ok(resp) => resp,
                Err(e) => {
                    last_error = e.to_string();
                    log::warn!("chat request attempt {attempt}/{attempts} failed: {last_error}");
                    continue;
                }
            };
            let status = resp.status().as_u16();
            let text = resp
                .body_mut()
                .read_to_string()
                .map_err(|e| AdapterError::Protocol(format!("reading response body: {e}")))?;
            if status == 429 || status >= 500 {
                last_error = format!("HTTP {status}: {}", truncate(&text));
                log::warn!("chat request attempt {attempt}/{attempts}: {last_error}");
                continue;
            }
            if status >= 400 {
                return Err(AdapterError::Protocol(format!("HTTP {status}: {}", truncate(&text))));
            }
            return parse_response(&text);
        }
        Err(AdapterError::Transport {
            attempts,
            message: last_error,
        })
    }
}

fn parse_response(text: &str) -> Result<(String, TokenUsage), AdapterError> {
    let parsed: ChatResponse =
        serde_json::from_str(text).map_err(|e| AdapterError::Protocol(format!("malformed completion: {e}")))?;
    let content = parsed
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| AdapterError::Protocol("completion has no message content".into()))?;
    let usage = parsed
        .usage
        .map(|u| TokenUsage {
            prompt_tokens: u.prompt_tokens,
            completion_tokens: u.completion_tokens,
        })
        .unwrap_or_default();
    Ok((content, usage))
}

fn truncate(text: &str) -> &str {
    crate::text::truncate_bytes(text, 300).0
}
