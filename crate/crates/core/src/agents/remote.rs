//! Chat-completion agent.
//!
//! Each decision renders the matching prompt, attaches the card images in
//! prompt order and posts an OpenAI-style `/chat/completions` request.
//! Replies that fail to parse are retried; once retries run out the agent
//! substitutes a seeded uniform choice and flags it as a fallback.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::agents::{Agent, AgentError, AgentReply, CaptionBank, Decision};
use crate::deck::{resolve_image, Card};
use crate::prompts::{parse_reply, render, Bindings, ChoiceSet, PromptName, ReplyKind};
use crate::rng::{derive_seed, GameRng};

fn default_timeout() -> u64 {
    60
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    /// Base URL; `/chat/completions` is appended.
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding a bearer token.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Overrides the game config's retry limit when set.
    #[serde(default)]
    pub retry_limit: Option<u32>,
    #[serde(default)]
    pub temperature: f32,
    #[serde(default)]
    pub max_tokens: Option<u32>,
    #[serde(default)]
    pub system_prompt: Option<String>,
    /// Substitute a seeded choice after exhausting retries instead of failing.
    #[serde(default = "default_true")]
    pub fallback: bool,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
            api_key_env: None,
            timeout_secs: default_timeout(),
            retry_limit: None,
            temperature: 0.0,
            max_tokens: None,
            system_prompt: None,
            fallback: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: Vec<ContentPart>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ContentPart {
    Text { text: String },
    ImageUrl { image_url: ImageUrl },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageUrl {
    pub url: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatResponse {
    /// Response body exactly as received.
    pub raw: String,
    /// Assistant message text.
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransportError {
    #[error("request failed: {0}")]
    Http(String),
    #[error("endpoint returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response shape: {0}")]
    Decode(String),
    #[error("image {0}: {1}")]
    Image(String, String),
}

pub trait ChatTransport: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, TransportError>;
}

/// Extracts the assistant text from an OpenAI-style completion body.
pub fn completion_content(raw: &str) -> Result<String, TransportError> {
    let value: Value =
        serde_json::from_str(raw).map_err(|e| TransportError::Decode(e.to_string()))?;
    let content = value
        .pointer("/choices/0/message/content")
        .ok_or_else(|| TransportError::Decode("missing choices[0].message.content".into()))?;
    match content {
        Value::String(s) => Ok(s.clone()),
        Value::Array(parts) => Ok(parts
            .iter()
            .filter_map(|p| p.get("text").and_then(Value::as_str))
            .collect::<Vec<_>>()
            .join("")),
        other => Err(TransportError::Decode(format!("content is {other}"))),
    }
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
    url: String,
    api_key: Option<String>,
}

impl HttpTransport {
    pub fn new(endpoint: &EndpointConfig) -> Result<Self, AgentError> {
        let api_key = match &endpoint.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                AgentError::Config(format!("environment variable {var} is not set"))
            })?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(endpoint.timeout_secs))
            .build()
            .map_err(|e| AgentError::Config(e.to_string()))?;
        Ok(Self {
            client,
            url: format!("{}/chat/completions", endpoint.base_url.trim_end_matches('/')),
            api_key,
        })
    }
}

impl ChatTransport for HttpTransport {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, TransportError> {
        let body = serde_json::to_string(request).map_err(|e| TransportError::Http(e.to_string()))?;
        let mut builder = self
            .client
            .post(&self.url)
            .header("content-type", "application/json")
            .body(body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| TransportError::Http(e.to_string()))?;
        let status = response.status();
        let raw = response.text().map_err(|e| TransportError::Http(e.to_string()))?;
        if !status.is_success() {
            return Err(TransportError::Status {
                status: status.as_u16(),
                body: raw,
            });
        }
        let content = completion_content(&raw)?;
        Ok(ChatResponse { raw, content })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub agent: String,
    pub call: u64,
    pub attempt: u32,
    pub request: String,
    pub response: Option<String>,
    pub error: Option<String>,
}

/// Shared line-delimited sink for verbatim request/response payloads.
#[derive(Clone)]
pub struct AuditSink(Arc<Mutex<Box<dyn Write + Send>>>);

impl AuditSink {
    pub fn new(writer: impl Write + Send + 'static) -> Self {
        Self(Arc::new(Mutex::new(Box::new(writer))))
    }

    pub fn record(&self, record: &AuditRecord) {
        let line = serde_json::to_string(record).expect("audit record serializes");
        let mut out = self.0.lock().unwrap_or_else(|e| e.into_inner());
        if let Err(e) = writeln!(out, "{line}").and_then(|_| out.flush()) {
            tracing::warn!("audit write failed: {e}");
        }
    }
}

impl std::fmt::Debug for AuditSink {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("AuditSink")
    }
}

pub struct RemoteAgent {
    name: String,
    endpoint: EndpointConfig,
    transport: Box<dyn ChatTransport>,
    image_root: Option<PathBuf>,
    retry_limit: u32,
    seed: u64,
    seq: u64,
    bank: Arc<CaptionBank>,
    audit: Option<AuditSink>,
    fallbacks: usize,
}

impl RemoteAgent {
    pub fn new(
        name: impl Into<String>,
        endpoint: EndpointConfig,
        transport: Box<dyn ChatTransport>,
        default_retry_limit: u32,
        seed: u64,
    ) -> Self {
        let retry_limit = endpoint.retry_limit.unwrap_or(default_retry_limit);
        Self {
            name: name.into(),
            endpoint,
            transport,
            image_root: None,
            retry_limit,
            seed,
            seq: 0,
            bank: Arc::new(CaptionBank::default()),
            audit: None,
            fallbacks: 0,
        }
    }

    pub fn over_http(
        name: impl Into<String>,
        endpoint: EndpointConfig,
        default_retry_limit: u32,
        seed: u64,
    ) -> Result<Self, AgentError> {
        let transport = HttpTransport::new(&endpoint)?;
        Ok(Self::new(name, endpoint, Box::new(transport), default_retry_limit, seed))
    }

    pub fn with_image_root(mut self, root: impl Into<PathBuf>) -> Self {
        self.image_root = Some(root.into());
        self
    }

    pub fn with_audit(mut self, audit: AuditSink) -> Self {
        self.audit = Some(audit);
        self
    }

    pub fn with_caption_bank(mut self, bank: Arc<CaptionBank>) -> Self {
        self.bank = bank;
        self
    }

    fn image_url(&self, image_ref: &str) -> Result<String, TransportError> {
        if ["http://", "https://", "data:"]
            .iter()
            .any(|p| image_ref.starts_with(p))
        {
            return Ok(image_ref.to_owned());
        }
        let path = match &self.image_root {
            Some(root) => resolve_image(root, image_ref),
            None => PathBuf::from(image_ref),
        };
        let bytes = std::fs::read(&path)
            .map_err(|e| TransportError::Image(image_ref.to_owned(), e.to_string()))?;
        Ok(format!(
            "data:{};base64,{}",
            mime_for(&path),
            base64::engine::general_purpose::STANDARD.encode(bytes)
        ))
    }

    fn build_request(&self, prompt: &str, images: &[Card]) -> Result<ChatRequest, TransportError> {
        let mut messages = Vec::new();
        if let Some(system) = &self.endpoint.system_prompt {
            messages.push(ChatMessage {
                role: "system".into(),
                content: vec![ContentPart::Text {
                    text: system.clone(),
                }],
            });
        }
        let mut content = vec![ContentPart::Text {
            text: prompt.to_owned(),
        }];
        for card in images {
            content.push(ContentPart::ImageUrl {
                image_url: ImageUrl {
                    url: self.image_url(&card.image_ref)?,
                },
            });
        }
        messages.push(ChatMessage {
            role: "user".into(),
            content,
        });
        Ok(ChatRequest {
            model: self.endpoint.model.clone(),
            messages,
            temperature: self.endpoint.temperature,
            max_tokens: self.endpoint.max_tokens,
        })
    }

    /// One decision: send, parse, retry, and fall back when allowed.
    pub fn call(
        &mut self,
        prompt: &str,
        images: &[Card],
        kind: ReplyKind,
        valid: &ChoiceSet,
    ) -> Result<AgentReply, AgentError> {
        let call = self.seq;
        self.seq += 1;
        let request = self
            .build_request(prompt, images)
            .map_err(|e| AgentError::Transport(e.to_string()))?;
        let request_text = serde_json::to_string(&request).expect("request serializes");

        let mut last_transport: Option<TransportError> = None;
        let mut last_invalid: Option<String> = None;
        for attempt in 0..=self.retry_limit {
            let result = self.transport.complete(&request);
            if let Some(audit) = &self.audit {
                audit.record(&AuditRecord {
                    agent: self.name.clone(),
                    call,
                    attempt,
                    request: request_text.clone(),
                    response: result.as_ref().ok().map(|r| r.raw.clone()),
                    error: result.as_ref().err().map(ToString::to_string),
                });
            }
            match result {
                Ok(response) => match parse_reply(&response.content, kind, valid) {
                    Ok(reply) => return Ok(reply),
                    Err(e) => {
                        tracing::debug!(agent = %self.name, attempt, "invalid reply: {e}");
                        last_transport = None;
                        last_invalid = Some(e.to_string());
                    }
                },
                Err(e) => {
                    tracing::debug!(agent = %self.name, attempt, "transport error: {e}");
                    last_transport = Some(e);
                }
            }
        }

        if let Some(e) = last_transport {
            return Err(AgentError::Transport(e.to_string()));
        }
        let reason = last_invalid.unwrap_or_default();
        if !self.endpoint.fallback {
            return Err(AgentError::InvalidReply(reason));
        }
        self.fallbacks += 1;
        let mut rng = GameRng::from_seed(derive_seed(self.seed, "fallback", call));
        let decision = match kind {
            ReplyKind::Choice => {
                if valid.is_empty() {
                    return Err(AgentError::InvalidReply("empty choice set".into()));
                }
                Decision::Choice(valid.indices()[rng.below(valid.len())])
            }
            ReplyKind::Caption => {
                let captions = self.bank.captions();
                Decision::Caption(captions[rng.below(captions.len())].clone())
            }
        };
        tracing::warn!(agent = %self.name, "falling back after {} attempts: {reason}", self.retry_limit + 1);
        Ok(AgentReply {
            thought: format!("fallback: {reason}"),
            decision,
            fallback: true,
        })
    }

    fn choose(
        &mut self,
        name: PromptName,
        caption: Option<&str>,
        cards: &[Card],
    ) -> Result<AgentReply, AgentError> {
        let valid = ChoiceSet::first(cards.len());
        let mut bindings = Bindings::new()
            .with_rules()
            .with("valid_choices", valid.render());
        if let Some(caption) = caption {
            bindings = bindings.with("caption", caption);
        }
        let prompt = render(name, &bindings).map_err(|e| AgentError::Config(e.to_string()))?;
        self.call(&prompt, cards, ReplyKind::Choice, &valid)
    }
}

fn mime_for(path: &Path) -> &'static str {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("png") => "image/png",
        Some("jpg") | Some("jpeg") => "image/jpeg",
        Some("gif") => "image/gif",
        Some("webp") => "image/webp",
        Some("svg") => "image/svg+xml",
        _ => "application/octet-stream",
    }
}

impl Agent for RemoteAgent {
    fn select_story_card(&mut self, hand: &[Card]) -> Result<AgentReply, AgentError> {
        self.choose(PromptName::StoryCardSelect, None, hand)
    }

    fn caption_card(&mut self, card: &Card) -> Result<AgentReply, AgentError> {
        let prompt = render(PromptName::StoryCaption, &Bindings::new().with_rules())
            .map_err(|e| AgentError::Config(e.to_string()))?;
        self.call(
            &prompt,
            std::slice::from_ref(card),
            ReplyKind::Caption,
            &ChoiceSet::first(0),
        )
    }

    fn select_decoy(&mut self, caption: &str, hand: &[Card]) -> Result<AgentReply, AgentError> {
        self.choose(PromptName::DecoySelect, Some(caption), hand)
    }

    fn vote(&mut self, caption: &str, pool: &[Card]) -> Result<AgentReply, AgentError> {
        self.choose(PromptName::Vote, Some(caption), pool)
    }

    fn describe(&self) -> String {
        format!("remote({}@{})", self.endpoint.model, self.endpoint.base_url)
    }

    fn fallback_count(&self) -> usize {
        self.fallbacks
    }
}
