//! Chat-completion backends: a live JSON-over-HTTP client and a scripted
//! deterministic mock for offline runs and tests.
//!
//! Sampling is greedy (temperature 0) so identical requests yield identical
//! completions; overriding the temperature is an explicit escape hatch that
//! gets flagged in run manifests.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use async_trait::async_trait;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tokio::sync::Semaphore;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    System,
    User,
}

impl Role {
    fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
        }
    }
}

/// One chat turn. At most one image per message; system messages carry none
/// (the constructors are the only way to build one).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatMessage {
    role: Role,
    text: String,
    image: Option<String>,
}

impl ChatMessage {
    pub fn system(text: impl Into<String>) -> Self {
        ChatMessage { role: Role::System, text: text.into(), image: None }
    }

    pub fn user(text: impl Into<String>) -> Self {
        ChatMessage { role: Role::User, text: text.into(), image: None }
    }

    pub fn user_with_image(text: impl Into<String>, image_ref: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            text: text.into(),
            image: Some(image_ref.into()),
        }
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn image(&self) -> Option<&str> {
        self.image.as_deref()
    }
}

/// Completion text plus how many transport attempts it took.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub attempts: u32,
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("empty message list")]
    EmptyMessages,
    #[error("unreadable image {path:?}: {detail}")]
    UnreadableImage { path: String, detail: String },
    #[error("transport failure after {attempts} attempt(s): {detail}")]
    Transport { attempts: u32, detail: String },
    #[error("server returned status {status} after {attempts} attempt(s): {body_head}")]
    Status {
        status: u16,
        attempts: u32,
        body_head: String,
    },
    #[error("malformed completion response: {0}")]
    BadResponse(String),
    #[error("invalid backend profile: {0}")]
    InvalidProfile(String),
}

/// Connection settings for one model endpoint.
#[derive(Debug, Clone)]
pub struct BackendProfile {
    /// Full URL of the chat-completions route.
    pub endpoint: String,
    pub model_id: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub max_retries: u32,
    pub max_in_flight: usize,
    pub vision: bool,
    /// Greedy sampling unless explicitly overridden.
    pub temperature: f64,
    pub backoff: Duration,
}

impl BackendProfile {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.max_in_flight < 1 {
            return Err(BackendError::InvalidProfile("max_in_flight must be at least 1".into()));
        }
        if self.timeout.is_zero() {
            return Err(BackendError::InvalidProfile("timeout must be positive".into()));
        }
        Ok(())
    }

    pub fn sampling_overridden(&self) -> bool {
        self.temperature != 0.0
    }
}

#[async_trait]
pub trait ChatBackend: Send + Sync {
    async fn complete(&self, messages: &[ChatMessage]) -> Result<Completion, BackendError>;
    fn model_id(&self) -> &str;
    fn vision_capable(&self) -> bool;
}

/// Stable fingerprint of a message list: SHA-256 over role, text, and image
/// reference of each message. Keys mock scripts and request logs.
pub fn fingerprint(messages: &[ChatMessage]) -> String {
    let mut hasher = Sha256::new();
    for m in messages {
        hasher.update(m.role.as_str().as_bytes());
        hasher.update([0x1f]);
        hasher.update(m.text.as_bytes());
        if let Some(image) = &m.image {
            hasher.update([0x1f]);
            hasher.update(b"image:");
            hasher.update(image.as_bytes());
        }
        hasher.update([0x1e]);
    }
    hex::encode(hasher.finalize())
}

fn is_remote_ref(image_ref: &str) -> bool {
    image_ref.starts_with("http://")
        || image_ref.starts_with("https://")
        || image_ref.starts_with("data:")
}

/// Checks every attached local image is readable. Runs before any network
/// traffic or script lookup.
pub fn validate_images(messages: &[ChatMessage]) -> Result<(), BackendError> {
    for m in messages {
        if let Some(image_ref) = &m.image {
            if is_remote_ref(image_ref) {
                continue;
            }
            std::fs::metadata(image_ref).map_err(|e| BackendError::UnreadableImage {
                path: image_ref.clone(),
                detail: e.to_string(),
            })?;
        }
    }
    Ok(())
}

fn mime_for(path: &str) -> &'static str {
    match Path::new(path).extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("jpg") || ext.eq_ignore_ascii_case("jpeg") => {
            "image/jpeg"
        }
        Some(ext) if ext.eq_ignore_ascii_case("gif") => "image/gif",
        Some(ext) if ext.eq_ignore_ascii_case("webp") => "image/webp",
        Some(ext) if ext.eq_ignore_ascii_case("bmp") => "image/bmp",
        _ => "image/png",
    }
}

/// Resolves an image reference to a URL the wire format accepts: remote
/// refs pass through, local files become base64 data URLs.
fn resolve_image_url(image_ref: &str) -> Result<String, BackendError> {
    if is_remote_ref(image_ref) {
        return Ok(image_ref.to_owned());
    }
    let bytes = std::fs::read(image_ref).map_err(|e| BackendError::UnreadableImage {
        path: image_ref.to_owned(),
        detail: e.to_string(),
    })?;
    let encoded = base64::engine::general_purpose::STANDARD.encode(bytes);
    Ok(format!("data:{};base64,{}", mime_for(image_ref), encoded))
}

#[derive(Serialize)]
struct WireImageUrl {
    url: String,
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum WirePart {
    Text { text: String },
    ImageUrl { image_url: WireImageUrl },
}

#[derive(Serialize)]
#[serde(untagged)]
enum WireContent {
    Text(String),
    Parts(Vec<WirePart>),
}

#[derive(Serialize)]
struct WireMessage {
    role: &'static str,
    content: WireContent,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: Vec<WireMessage>,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireResponseMessage,
}

#[derive(Deserialize)]
struct WireResponseMessage {
    content: Option<String>,
}

/// Live chat-completion client. Timeouts and 429/5xx statuses are retried
/// with exponential backoff up to `max_retries`; other client errors fail
/// fast.
pub struct HttpBackend {
    profile: BackendProfile,
    http: reqwest::Client,
}

impl HttpBackend {
    pub fn new(profile: BackendProfile) -> Result<Self, BackendError> {
        profile.validate()?;
        let http = reqwest::Client::builder()
            .timeout(profile.timeout)
            .build()
            .map_err(|e| BackendError::InvalidProfile(e.to_string()))?;
        Ok(HttpBackend { profile, http })
    }

    fn build_body(&self, messages: &[ChatMessage]) -> Result<serde_json::Value, BackendError> {
        let mut wire_messages = Vec::with_capacity(messages.len());
        for m in messages {
            let content = match &m.image {
                None => WireContent::Text(m.text.clone()),
                Some(image_ref) => WireContent::Parts(vec![
                    WirePart::Text { text: m.text.clone() },
                    WirePart::ImageUrl {
                        image_url: WireImageUrl { url: resolve_image_url(image_ref)? },
                    },
                ]),
            };
            wire_messages.push(WireMessage { role: m.role.as_str(), content });
        }
        let request = WireRequest {
            model: &self.profile.model_id,
            temperature: self.profile.temperature,
            messages: wire_messages,
        };
        Ok(serde_json::to_value(request).expect("request serialization cannot fail"))
    }

    fn retryable_status(status: u16) -> bool {
        status == 429 || (500..600).contains(&status)
    }
}

#[async_trait]
impl ChatBackend for HttpBackend {
    async fn complete(&self, messages: &[ChatMessage]) -> Result<Completion, BackendError> {
        if messages.is_empty() {
            return Err(BackendError::EmptyMessages);
        }
        validate_images(messages)?;
        let body = self.build_body(messages)?;

        let mut attempts = 0u32;
        loop {
            attempts += 1;
            let mut request = self.http.post(&self.profile.endpoint).json(&body);
            if let Some(key) = &self.profile.api_key {
                request = request.bearer_auth(key);
            }
            let outcome = request.send().await;
            let retry_exhausted = attempts > self.profile.max_retries;
            match outcome {
                Ok(response) => {
                    let status = response.status().as_u16();
                    if (200..300).contains(&status) {
                        let parsed: WireResponse = response
                            .json()
                            .await
                            .map_err(|e| BackendError::BadResponse(e.to_string()))?;
                        let text = parsed
                            .choices
                            .first()
                            .and_then(|c| c.message.content.clone())
                            .ok_or_else(|| {
                                BackendError::BadResponse("no choices[0].message.content".into())
                            })?;
                        return Ok(Completion { text, attempts });
                    }
                    let body_head: String = response
                        .text()
                        .await
                        .unwrap_or_default()
                        .chars()
                        .take(200)
                        .collect();
                    if !Self::retryable_status(status) || retry_exhausted {
                        return Err(BackendError::Status { status, attempts, body_head });
                    }
                }
                Err(e) => {
                    if retry_exhausted {
                        return Err(BackendError::Transport { attempts, detail: e.to_string() });
                    }
                }
            }
            let backoff = self.profile.backoff * 2u32.saturating_pow(attempts - 1);
            tokio::time::sleep(backoff).await;
        }
    }

    fn model_id(&self) -> &str {
        &self.profile.model_id
    }

    fn vision_capable(&self) -> bool {
        self.profile.vision
    }
}

/// On-disk mock script: fingerprint-keyed replies plus a fallback for
/// anything unscripted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MockScript {
    pub fallback: String,
    #[serde(default = "default_true")]
    pub vision: bool,
    #[serde(default)]
    pub entries: Vec<MockEntry>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MockEntry {
    pub fingerprint: String,
    pub reply: String,
}

impl MockScript {
    pub fn new(fallback: impl Into<String>) -> Self {
        MockScript { fallback: fallback.into(), vision: true, entries: Vec::new() }
    }

    /// Scripts `reply` for the exact message list.
    pub fn add(&mut self, messages: &[ChatMessage], reply: impl Into<String>) {
        self.entries.push(MockEntry {
            fingerprint: fingerprint(messages),
            reply: reply.into(),
        });
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            BackendError::InvalidProfile(format!(
                "cannot read mock script {:?}: {e}",
                path.as_ref()
            ))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| BackendError::InvalidProfile(format!("bad mock script: {e}")))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self).expect("script serializes"))
    }
}

/// Deterministic scripted backend. Identical message lists always produce
/// identical replies; unscripted prompts return the fallback and are
/// recorded as misses.
pub struct MockBackend {
    script: HashMap<String, String>,
    fallback: String,
    model_id: String,
    vision: bool,
    latency: Option<Duration>,
    calls: AtomicU64,
    misses: Mutex<Vec<String>>,
    in_flight: AtomicUsize,
    peak_in_flight: AtomicUsize,
}

impl MockBackend {
    pub fn from_script(script: MockScript) -> Self {
        MockBackend {
            script: script
                .entries
                .into_iter()
                .map(|e| (e.fingerprint, e.reply))
                .collect(),
            fallback: script.fallback,
            model_id: "mock".into(),
            vision: script.vision,
            latency: None,
            calls: AtomicU64::new(0),
            misses: Mutex::new(Vec::new()),
            in_flight: AtomicUsize::new(0),
            peak_in_flight: AtomicUsize::new(0),
        }
    }

    pub fn with_vision(mut self, vision: bool) -> Self {
        self.vision = vision;
        self
    }

    /// Adds artificial latency so concurrency tests can observe overlap.
    pub fn with_latency(mut self, latency: Duration) -> Self {
        self.latency = Some(latency);
        self
    }

    /// Number of requests that reached the model (image validation happens
    /// first and does not count).
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn misses(&self) -> Vec<String> {
        self.misses.lock().expect("miss log poisoned").clone()
    }

    pub fn peak_in_flight(&self) -> usize {
        self.peak_in_flight.load(Ordering::SeqCst)
    }
}

#[async_trait]
impl ChatBackend for MockBackend {
    async fn complete(&self, messages: &[ChatMessage]) -> Result<Completion, BackendError> {
        if messages.is_empty() {
            return Err(BackendError::EmptyMessages);
        }
        validate_images(messages)?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak_in_flight.fetch_max(now, Ordering::SeqCst);
        if let Some(latency) = self.latency {
            tokio::time::sleep(latency).await;
        }
        let key = fingerprint(messages);
        let reply = match self.script.get(&key) {
            Some(reply) => reply.clone(),
            None => {
                log::warn!("mock backend miss for fingerprint {key}");
                self.misses.lock().expect("miss log poisoned").push(key);
                self.fallback.clone()
            }
        };
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        Ok(Completion { text: reply, attempts: 1 })
    }

    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn vision_capable(&self) -> bool {
        self.vision
    }
}

/// Shareable handle over a backend that enforces the in-flight bound.
/// Callers see completions in whatever order they finish; pipelines restore
/// input order keyed on sample id.
#[derive(Clone)]
pub struct Client {
    backend: Arc<dyn ChatBackend>,
    limiter: Arc<Semaphore>,
    sampling_override: bool,
}

impl Client {
    pub fn new(backend: Arc<dyn ChatBackend>, max_in_flight: usize) -> Self {
        Client {
            backend,
            limiter: Arc::new(Semaphore::new(max_in_flight.max(1))),
            sampling_override: false,
        }
    }

    pub fn from_profile(profile: BackendProfile) -> Result<Self, BackendError> {
        let max_in_flight = profile.max_in_flight;
        let sampling_override = profile.sampling_overridden();
        let backend = Arc::new(HttpBackend::new(profile)?);
        let mut client = Client::new(backend, max_in_flight);
        client.sampling_override = sampling_override;
        Ok(client)
    }

    pub async fn complete(&self, messages: &[ChatMessage]) -> Result<Completion, BackendError> {
        let _permit = self.limiter.acquire().await.expect("limiter never closed");
        self.backend.complete(messages).await
    }

    pub fn model_id(&self) -> String {
        self.backend.model_id().to_owned()
    }

    pub fn vision_capable(&self) -> bool {
        self.backend.vision_capable()
    }

    pub fn sampling_override(&self) -> bool {
        self.sampling_override
    }
}
