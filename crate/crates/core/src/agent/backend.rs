use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::agent::{
    parse_ballot, parse_proposal, render_prompt, Agent, AgentError, AgentMemory, BallotDraft, ChatMessage,
    PromptContext, ProposalDraft, RateLimiter, TemplateSet,
};
use crate::ids::{AgentId, ModelId};

/// Environment variable holding the chat server base URL.
pub const BACKEND_URL_ENV: &str = "NOMIC_BACKEND_URL";

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("server returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("backend gave up after {attempts} attempts; last error: {last}")]
    Exhausted { attempts: u32, last: String },
}

/// Settings shared by every backend call in a game. Only the model tag
/// differs between agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InvocationParams {
    pub temperature: f64,
    pub num_predict: Option<u32>,
    pub num_ctx: Option<u32>,
    pub seed: Option<u64>,
    pub timeout_secs: u64,
    pub max_attempts: u32,
    /// First retry delay; doubles on each further retry.
    pub backoff_ms: u64,
}

impl Default for InvocationParams {
    fn default() -> Self {
        Self {
            temperature: 0.7,
            num_predict: None,
            num_ctx: None,
            seed: None,
            timeout_secs: 120,
            max_attempts: 4,
            backoff_ms: 500,
        }
    }
}

impl InvocationParams {
    fn options(&self) -> Value {
        let mut o = serde_json::Map::new();
        o.insert("temperature".into(), json!(self.temperature));
        if let Some(n) = self.num_predict {
            o.insert("num_predict".into(), json!(n));
        }
        if let Some(n) = self.num_ctx {
            o.insert("num_ctx".into(), json!(n));
        }
        if let Some(s) = self.seed {
            o.insert("seed".into(), json!(s));
        }
        Value::Object(o)
    }
}

/// Blocking client for a local chat-completion server (`POST /api/chat`).
/// Safe to share between threads.
#[derive(Debug)]
pub struct BackendClient {
    base_url: String,
    params: InvocationParams,
    http: reqwest::blocking::Client,
    limiter: Option<Arc<RateLimiter>>,
}

impl BackendClient {
    pub fn new(base_url: impl Into<String>, params: InvocationParams) -> Result<Self, BackendError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(params.timeout_secs.max(1)))
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(Self { base_url: base_url.into().trim_end_matches('/').to_string(), params, http, limiter: None })
    }

    /// Reads the base URL from `NOMIC_BACKEND_URL`.
    pub fn from_env(params: InvocationParams) -> Result<Self, BackendError> {
        let url = std::env::var(BACKEND_URL_ENV)
            .map_err(|_| BackendError::Transport(format!("{BACKEND_URL_ENV} is not set")))?;
        Self::new(url, params)
    }

    pub fn with_rate_limiter(mut self, limiter: Arc<RateLimiter>) -> Self {
        self.limiter = Some(limiter);
        self
    }

    pub fn params(&self) -> &InvocationParams {
        &self.params
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    /// The request body sent for one call; exposed so callers can check
    /// that agents in a game differ only by model tag.
    pub fn request_body(&self, model: &ModelId, messages: &[ChatMessage]) -> Value {
        json!({
            "model": model.as_str(),
            "messages": messages,
            "stream": false,
            "options": self.params.options(),
        })
    }

    /// One chat completion, retried with exponential backoff on transport
    /// failures, non-success status and unreadable bodies.
    pub fn complete(&self, model: &ModelId, messages: &[ChatMessage]) -> Result<String, BackendError> {
        let body = self.request_body(model, messages);
        let url = format!("{}/api/chat", self.base_url);
        let attempts = self.params.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 1..=attempts {
            if let Some(l) = &self.limiter {
                l.acquire();
            }
            match self.call_once(&url, &body) {
                Ok(text) => return Ok(text),
                Err(e) => {
                    log::warn!("backend call for {model} failed (attempt {attempt}/{attempts}): {e}");
                    last = e.to_string();
                }
            }
            if attempt < attempts {
                let delay = self.params.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(delay));
            }
        }
        Err(BackendError::Exhausted { attempts, last })
    }

    fn call_once(&self, url: &str, body: &Value) -> Result<String, BackendError> {
        let resp = self.http.post(url).json(body).send().map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| BackendError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(BackendError::Status { status: status.as_u16(), body: text.chars().take(200).collect() });
        }
        extract_content(&text)
    }
}

/// Pulls the assistant text out of a chat response. Accepts the native
/// `{"message": {"content": ..}}` shape and the OpenAI-style `choices` list.
fn extract_content(body: &str) -> Result<String, BackendError> {
    let v: Value = serde_json::from_str(body).map_err(|e| BackendError::Malformed(e.to_string()))?;
    let content = v
        .pointer("/message/content")
        .or_else(|| v.pointer("/choices/0/message/content"))
        .and_then(Value::as_str)
        .ok_or_else(|| BackendError::Malformed("no message content in response".into()))?;
    Ok(content.to_string())
}

/// Agent backed by a chat model. Keeps the whole conversation of the run in
/// its memory and replays it with each call.
pub struct BackendAgent {
    id: AgentId,
    model: ModelId,
    client: Arc<BackendClient>,
    templates: Arc<TemplateSet>,
    memory: AgentMemory,
}

impl BackendAgent {
    pub fn new(id: AgentId, model: ModelId, client: Arc<BackendClient>, templates: Arc<TemplateSet>) -> Self {
        Self { id, model, client, templates, memory: AgentMemory::new() }
    }

    fn exchange(&mut self, ctx: &PromptContext<'_>) -> Result<String, AgentError> {
        let prompt = render_prompt(ctx, &self.templates)?;
        let mut messages = Vec::with_capacity(self.memory.len() + 2);
        messages.push(ChatMessage::system(prompt.system));
        messages.extend(self.memory.messages().iter().cloned());
        messages.push(ChatMessage::user(prompt.user.clone()));
        let reply = self.client.complete(&self.model, &messages)?;
        self.memory.push(ChatMessage::user(prompt.user));
        self.memory.push(ChatMessage::assistant(reply.clone()));
        Ok(reply)
    }
}

impl Agent for BackendAgent {
    fn id(&self) -> &AgentId {
        &self.id
    }

    fn propose(&mut self, ctx: &PromptContext<'_>) -> Result<ProposalDraft, AgentError> {
        let reply = self.exchange(ctx)?;
        Ok(parse_proposal(&reply)?)
    }

    fn vote(&mut self, ctx: &PromptContext<'_>) -> Result<BallotDraft, AgentError> {
        let reply = self.exchange(ctx)?;
        Ok(parse_ballot(&reply, ctx.valid_targets)?)
    }

    fn memory(&self) -> &AgentMemory {
        &self.memory
    }

    fn reset(&mut self) {
        self.memory.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_extraction_shapes() {
        assert_eq!(extract_content(r#"{"message":{"role":"assistant","content":"hi"}}"#).unwrap(), "hi");
        assert_eq!(extract_content(r#"{"choices":[{"message":{"content":"yo"}}]}"#).unwrap(), "yo");
        assert!(matches!(extract_content("{}"), Err(BackendError::Malformed(_))));
        assert!(matches!(extract_content("not json"), Err(BackendError::Malformed(_))));
    }

    #[test]
    fn request_bodies_differ_only_by_model() {
        let c = BackendClient::new("http://127.0.0.1:9", InvocationParams::default()).unwrap();
        let msgs = vec![ChatMessage::user("x")];
        let mut a = c.request_body(&ModelId::from("llama3"), &msgs);
        let mut b = c.request_body(&ModelId::from("qwen3"), &msgs);
        a.as_object_mut().unwrap().remove("model");
        b.as_object_mut().unwrap().remove("model");
        assert_eq!(a, b);
        assert_eq!(a["options"]["temperature"], json!(0.7));
        assert_eq!(a["stream"], json!(false));
    }
}
