//! Sends prompts to chat-completion endpoints with a persistent response
//! cache, bounded concurrency, a per-endpoint rate limit and retries.

mod cache;
mod http;
mod limiter;
mod mock;

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::{CachedResponse, ResponseCache};
pub(crate) use cache::dir_name;
pub use http::HttpBackend;
pub use limiter::RateLimiter;
pub use mock::{mock_classify, MockBackend, MockBehavior, MockError, MockMode};

use crate::prompt::PromptSpec;

fn default_concurrency() -> usize {
    4
}
fn default_rpm() -> u32 {
    60
}
fn default_retries() -> u32 {
    3
}
fn default_retry_base_ms() -> u64 {
    500
}
fn default_timeout_ms() -> u64 {
    60_000
}

/// One model endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    /// Name used in outputs and as the cache directory.
    pub model_id: String,
    /// Model name sent on the wire; defaults to `model_id`.
    #[serde(default)]
    pub api_model: Option<String>,
    #[serde(default)]
    pub base_url: String,
    /// Environment variable holding the API key; `None` for unauthenticated
    /// self-hosted servers.
    #[serde(default)]
    pub auth_env_var: Option<String>,
    #[serde(default = "default_concurrency")]
    pub max_concurrency: usize,
    #[serde(default = "default_rpm")]
    pub requests_per_minute: u32,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_retry_base_ms")]
    pub retry_base_ms: u64,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

impl EndpointConfig {
    pub fn new(model_id: &str) -> Self {
        EndpointConfig {
            model_id: model_id.to_string(),
            api_model: None,
            base_url: String::new(),
            auth_env_var: None,
            max_concurrency: default_concurrency(),
            requests_per_minute: default_rpm(),
            max_retries: default_retries(),
            temperature: 0.0,
            retry_base_ms: default_retry_base_ms(),
            timeout_ms: default_timeout_ms(),
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let bad = |m: &str| Err(GatewayError::InvalidConfig(format!("{}: {m}", self.model_id)));
        if self.model_id.trim().is_empty() {
            return bad("empty model_id");
        }
        if self.max_concurrency < 1 {
            return bad("max_concurrency must be at least 1");
        }
        if self.requests_per_minute < 1 {
            return bad("requests_per_minute must be at least 1");
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return bad("temperature must be a non-negative number");
        }
        Ok(())
    }

    fn wire_model(&self) -> &str {
        self.api_model.as_deref().unwrap_or(&self.model_id)
    }
}

/// Content hash of everything that determines a completion.
pub fn prompt_hash(model_id: &str, prompt: &PromptSpec, temperature: f64) -> String {
    let mut h = Sha256::new();
    h.update(model_id.as_bytes());
    h.update([0u8]);
    h.update(prompt.canonical_bytes());
    h.update([0u8]);
    h.update(temperature.to_bits().to_le_bytes());
    hex::encode(h.finalize())
}

/// What a backend sees for one call.
#[derive(Debug, Clone, Copy)]
pub struct ChatRequest<'a> {
    pub model: &'a str,
    /// Not sent over the wire; lets mocks key their behavior by record.
    pub record_id: &'a str,
    pub system: &'a str,
    pub user: &'a str,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("environment variable `{0}` with the API key is not set")]
    AuthMissing(String),
    #[error("throttled by the endpoint")]
    Throttled,
    #[error("server error {0}")]
    Server(u16),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error(transparent)]
    Mock(#[from] MockError),
}

impl BackendError {
    fn retryable(&self) -> bool {
        matches!(self, BackendError::Throttled | BackendError::Server(_))
    }
}

/// A chat-completion provider.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String, BackendError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("environment variable `{0}` with the API key is not set")]
    AuthMissing(String),
    #[error("still throttled after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("transport error: {0}")]
    TransportError(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("mock backend: {0}")]
    Mock(MockError),
    #[error("invalid endpoint config: {0}")]
    InvalidConfig(String),
    #[error("cache write failed: {0}")]
    Cache(String),
    #[error("empty batch")]
    EmptyBatch,
}

impl From<BackendError> for GatewayError {
    fn from(e: BackendError) -> Self {
        match e {
            BackendError::AuthMissing(v) => GatewayError::AuthMissing(v),
            BackendError::Throttled => GatewayError::RateLimited { attempts: 1 },
            BackendError::Server(code) => GatewayError::TransportError(format!("server error {code}")),
            BackendError::Transport(m) => GatewayError::TransportError(m),
            BackendError::Malformed(m) => GatewayError::MalformedResponse(m),
            BackendError::Mock(m) => GatewayError::Mock(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawResponse {
    pub record_id: String,
    pub model_id: String,
    pub prompt_hash: String,
    pub output_text: String,
    pub latency_ms: u64,
    pub from_cache: bool,
}

/// Counters for instrumentation and tests.
#[derive(Debug, Default)]
pub struct GatewayStats {
    backend_calls: AtomicU64,
    cache_hits: AtomicU64,
    in_flight: AtomicUsize,
    peak_in_flight: AtomicUsize,
}

impl GatewayStats {
    /// Number of backend invocations, retries included.
    pub fn backend_calls(&self) -> u64 {
        self.backend_calls.load(Ordering::SeqCst)
    }

    pub fn cache_hits(&self) -> u64 {
        self.cache_hits.load(Ordering::SeqCst)
    }

    pub fn peak_in_flight(&self) -> usize {
        self.peak_in_flight.load(Ordering::SeqCst)
    }

    pub fn reset(&self) {
        self.backend_calls.store(0, Ordering::SeqCst);
        self.cache_hits.store(0, Ordering::SeqCst);
        self.peak_in_flight.store(0, Ordering::SeqCst);
    }
}

/// Per-item results of a batch, in prompt order.
#[derive(Debug)]
pub struct BatchOutcome {
    pub items: Vec<(String, Result<RawResponse, GatewayError>)>,
}

impl BatchOutcome {
    pub fn responses(&self) -> impl Iterator<Item = &RawResponse> {
        self.items.iter().filter_map(|(_, r)| r.as_ref().ok())
    }

    pub fn errors(&self) -> impl Iterator<Item = (&str, &GatewayError)> {
        self.items.iter().filter_map(|(id, r)| r.as_ref().err().map(|e| (id.as_str(), e)))
    }
}

/// One endpoint plus its cache, limiter and counters.
pub struct Gateway {
    config: EndpointConfig,
    backend: Arc<dyn ChatBackend>,
    cache: Option<Arc<ResponseCache>>,
    limiter: RateLimiter,
    stats: GatewayStats,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway").field("config", &self.config).finish_non_exhaustive()
    }
}

impl Gateway {
    pub fn new(config: EndpointConfig, backend: Arc<dyn ChatBackend>, cache: Option<Arc<ResponseCache>>) -> Result<Self, GatewayError> {
        config.validate()?;
        let limiter = RateLimiter::per_minute(config.requests_per_minute);
        Ok(Gateway {
            config,
            backend,
            cache,
            limiter,
            stats: GatewayStats::default(),
        })
    }

    /// A gateway over the HTTP backend. Fails with `AuthMissing` right away
    /// when the key variable is unset.
    pub fn http(config: EndpointConfig, cache: Option<Arc<ResponseCache>>) -> Result<Self, GatewayError> {
        let backend = HttpBackend::new(&config)?;
        backend.api_key()?;
        Gateway::new(config, Arc::new(backend), cache)
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    pub fn stats(&self) -> &GatewayStats {
        &self.stats
    }

    fn call_backend(&self, request: &ChatRequest<'_>) -> Result<String, BackendError> {
        self.limiter.acquire();
        self.stats.backend_calls.fetch_add(1, Ordering::SeqCst);
        let now = self.stats.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.stats.peak_in_flight.fetch_max(now, Ordering::SeqCst);
        let result = self.backend.complete(request);
        self.stats.in_flight.fetch_sub(1, Ordering::SeqCst);
        result
    }

    fn call_with_retries(&self, request: &ChatRequest<'_>) -> Result<String, GatewayError> {
        let attempts = self.config.max_retries + 1;
        let mut last = None;
        for attempt in 0..attempts {
            match self.call_backend(request) {
                Ok(text) => return Ok(text),
                Err(e) if e.retryable() && attempt + 1 < attempts => {
                    let base = self.config.retry_base_ms.saturating_mul(1 << attempt.min(16));
                    let jitter = if self.config.retry_base_ms > 0 {
                        rand::thread_rng().gen_range(0..self.config.retry_base_ms)
                    } else {
                        0
                    };
                    thread::sleep(Duration::from_millis(base + jitter));
                    last = Some(e);
                }
                Err(e) => {
                    last = Some(e);
                    break;
                }
            }
        }
        match last.expect("at least one attempt") {
            BackendError::Throttled => Err(GatewayError::RateLimited { attempts }),
            BackendError::Server(code) => Err(GatewayError::TransportError(format!("server error {code} after {attempts} attempts"))),
            other => Err(other.into()),
        }
    }

    /// Answers from the cache when possible, otherwise calls the backend and
    /// stores the completion.
    pub fn submit(&self, prompt: &PromptSpec) -> Result<RawResponse, GatewayError> {
        let hash = prompt_hash(&self.config.model_id, prompt, self.config.temperature);
        let started = Instant::now();
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&self.config.model_id, &hash)) {
            self.stats.cache_hits.fetch_add(1, Ordering::SeqCst);
            return Ok(RawResponse {
                record_id: prompt.sample_record_id.clone(),
                model_id: self.config.model_id.clone(),
                prompt_hash: hash,
                output_text: hit.output_text,
                latency_ms: started.elapsed().as_millis() as u64,
                from_cache: true,
            });
        }
        let request = ChatRequest {
            model: self.config.wire_model(),
            record_id: &prompt.sample_record_id,
            system: &prompt.context,
            user: &prompt.instruction,
            temperature: self.config.temperature,
        };
        let output_text = self.call_with_retries(&request)?;
        if let Some(cache) = &self.cache {
            cache
                .put(&CachedResponse {
                    model_id: self.config.model_id.clone(),
                    prompt_hash: hash.clone(),
                    temperature: self.config.temperature,
                    output_text: output_text.clone(),
                })
                .map_err(|e| GatewayError::Cache(e.to_string()))?;
        }
        Ok(RawResponse {
            record_id: prompt.sample_record_id.clone(),
            model_id: self.config.model_id.clone(),
            prompt_hash: hash,
            output_text,
            latency_ms: started.elapsed().as_millis() as u64,
            from_cache: false,
        })
    }

    /// Submits every prompt using up to `max_concurrency` worker threads.
    /// A failing item never aborts the batch; results come back in input
    /// order.
    pub fn run_batch(&self, prompts: &[PromptSpec]) -> Result<BatchOutcome, GatewayError> {
        if prompts.is_empty() {
            return Err(GatewayError::EmptyBatch);
        }
        let slots: Mutex<Vec<Option<Result<RawResponse, GatewayError>>>> = Mutex::new(vec![None; prompts.len()]);
        let next = AtomicUsize::new(0);
        let workers = self.config.max_concurrency.min(prompts.len());
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let idx = next.fetch_add(1, Ordering::SeqCst);
                    let Some(prompt) = prompts.get(idx) else { break };
                    let result = self.submit(prompt);
                    slots.lock().expect("result slots")[idx] = Some(result);
                });
            }
        });
        let items = slots
            .into_inner()
            .expect("result slots")
            .into_iter()
            .zip(prompts)
            .map(|(r, p)| (p.sample_record_id.clone(), r.expect("every slot filled")))
            .collect();
        Ok(BatchOutcome { items })
    }
}
