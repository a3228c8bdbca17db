//! OpenAI-compatible chat-completion client.

use std::env;
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

use super::{BackendError, ChatBackend, ChatRequest, EndpointConfig};

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct CompletionBody<'a> {
    model: &'a str,
    messages: [Message<'a>; 2],
    temperature: f64,
}

#[derive(Debug)]
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    url: String,
    auth_env_var: Option<String>,
}

/// `base_url` may point at the API root (`…/v1`) or at the completions route.
fn completions_url(base_url: &str) -> String {
    let base = base_url.trim_end_matches('/');
    if base.ends_with("/chat/completions") {
        base.to_string()
    } else {
        format!("{base}/chat/completions")
    }
}

impl HttpBackend {
    pub fn new(config: &EndpointConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(HttpBackend {
            client,
            url: completions_url(&config.base_url),
            auth_env_var: config.auth_env_var.clone(),
        })
    }

    /// Reads the key now; `None` when the endpoint needs no key.
    pub fn api_key(&self) -> Result<Option<String>, BackendError> {
        match &self.auth_env_var {
            None => Ok(None),
            Some(var) => match env::var(var) {
                Ok(v) if !v.trim().is_empty() => Ok(Some(v)),
                _ => Err(BackendError::AuthMissing(var.clone())),
            },
        }
    }
}

pub(crate) fn parse_completion(body: &str) -> Result<String, BackendError> {
    let value: Value = serde_json::from_str(body).map_err(|e| BackendError::Malformed(e.to_string()))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| BackendError::Malformed("missing choices[0].message.content".into()))
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String, BackendError> {
        let key = self.api_key()?;
        let body = CompletionBody {
            model: request.model,
            messages: [
                Message {
                    role: "system",
                    content: request.system,
                },
                Message {
                    role: "user",
                    content: request.user,
                },
            ],
            temperature: request.temperature,
        };
        let mut req = self.client.post(&self.url).json(&body);
        if let Some(key) = key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| BackendError::Transport(e.to_string()))?;
        if status.as_u16() == 429 {
            return Err(BackendError::Throttled);
        }
        if status.is_server_error() {
            return Err(BackendError::Server(status.as_u16()));
        }
        if !status.is_success() {
            return Err(BackendError::Transport(format!("HTTP {status}: {}", text.chars().take(200).collect::<String>())));
        }
        parse_completion(&text)
    }
}
