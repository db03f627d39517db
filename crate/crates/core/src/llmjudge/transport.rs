use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::verdict::{ANSWER_GENERAL, ANSWER_ZOMBIE};
use super::JudgeError;
use crate::corpus::{Label, ReplyPair};
use crate::textenc::{tokenize, TokenizerConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: &str) -> Self {
        Self { role: "system".into(), content: content.into() }
    }

    pub fn user(content: &str) -> Self {
        Self { role: "user".into(), content: content.into() }
    }

    pub fn assistant(content: &str) -> Self {
        Self { role: "assistant".into(), content: content.into() }
    }
}

/// Request body in the common chat-completions shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn body(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("chat request serializes")
    }

    /// Hex SHA-256 of [`body`](Self::body).
    pub fn sha256_hex(&self) -> String {
        Sha256::digest(self.body()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message}")]
pub struct TransportError {
    /// Worth retrying (timeouts, rate limits, server errors).
    pub retryable: bool,
    pub message: String,
}

impl TransportError {
    pub fn retryable(message: impl Into<String>) -> Self {
        Self { retryable: true, message: message.into() }
    }

    pub fn fatal(message: impl Into<String>) -> Self {
        Self { retryable: false, message: message.into() }
    }
}

/// Sends one request and returns the assistant's text.
pub trait Transport: Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    pub endpoint: String,
    pub model_name: String,
    pub timeout_ms: u64,
    /// Extra attempts after the first for retryable failures.
    pub max_retries: u32,
    /// First backoff delay; doubles per retry.
    pub backoff_ms: u64,
    pub temperature: f64,
    /// Name of the environment variable holding the API credential. Only
    /// the name is ever stored.
    pub credential_env: String,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model_name: "gpt-4.1".into(),
            timeout_ms: 60_000,
            max_retries: 3,
            backoff_ms: 500,
            temperature: 0.0,
            credential_env: "IMPZOMBIE_LLM_API_KEY".into(),
        }
    }
}

impl TransportConfig {
    pub fn validate(&self) -> Result<(), JudgeError> {
        let bad = |field: &str, message: &str| {
            Err(JudgeError::InvalidConfig { field: field.into(), message: message.into() })
        };
        if self.model_name.trim().is_empty() {
            return bad("model_name", "must not be empty");
        }
        if self.credential_env.trim().is_empty() {
            return bad("credential_env", "must name an environment variable");
        }
        if self.timeout_ms == 0 {
            return bad("timeout_ms", "must be positive");
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad("temperature", "must be in [0, 2]");
        }
        Ok(())
    }
}

/// API secret. Deliberately neither `Serialize` nor `Display`; `Debug`
/// prints a placeholder.
#[derive(Clone)]
pub struct Credential(String);

impl Credential {
    pub fn from_env(var: &str) -> Result<Self, JudgeError> {
        match std::env::var(var) {
            Ok(v) if !v.is_empty() => Ok(Self(v)),
            _ => Err(JudgeError::MissingCredential { var: var.to_string() }),
        }
    }

    pub fn expose(&self) -> &str {
        &self.0
    }

    /// Replace any occurrence of the secret in `text`.
    pub fn scrub(&self, text: &str) -> String {
        text.replace(&self.0, "<redacted>")
    }
}

impl std::fmt::Debug for Credential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Credential(<redacted>)")
    }
}

/// Recover `(parent, reply)` from the last user turn of a judge request.
pub fn extract_query(request: &ChatRequest) -> Option<(String, String)> {
    let msg = request.messages.iter().rev().find(|m| m.role == "user")?;
    let body = msg.content.strip_prefix("<parent>\n")?;
    let (parent, rest) = body.split_once("\n</parent>\n<reply>\n")?;
    let reply = rest.strip_suffix("\n</reply>")?;
    Some((parent.to_string(), reply.to_string()))
}

type Responder = Box<dyn Fn(&ChatRequest) -> Result<String, TransportError> + Send + Sync>;

/// Offline transport answering from a closure.
pub struct MockTransport {
    responder: Responder,
}

impl MockTransport {
    pub fn new(f: impl Fn(&ChatRequest) -> Result<String, TransportError> + Send + Sync + 'static) -> Self {
        Self { responder: Box::new(f) }
    }

    /// Always answers `text`.
    pub fn constant(text: &str) -> Self {
        let text = text.to_string();
        Self::new(move |_| Ok(text.clone()))
    }

    /// Answers the gold label of the queried pair (looked up by its texts);
    /// unknown queries get a non-answer.
    pub fn gold(pairs: &[&ReplyPair]) -> Self {
        let mut table: HashMap<(String, String), Label> = HashMap::new();
        for p in pairs {
            table.entry((p.parent_text.clone(), p.reply_text.clone())).or_insert(p.label);
        }
        Self::new(move |req| {
            let answer = extract_query(req).and_then(|q| table.get(&q).copied()).map(|l| match l {
                Label::Zombie => ANSWER_ZOMBIE,
                Label::General => ANSWER_GENERAL,
                Label::Unlabeled => "unsure",
            });
            Ok(answer.unwrap_or("unsure").to_string())
        })
    }

    /// Heuristic stand-in for a real model: Zombie iff the reply shares no
    /// token with its parent.
    pub fn overlap() -> Self {
        let cfg = TokenizerConfig::default();
        Self::new(move |req| {
            let (parent, reply) =
                extract_query(req).ok_or_else(|| TransportError::fatal("request has no recognizable query"))?;
            let parent_tokens: std::collections::HashSet<String> = tokenize(&parent, &cfg).into_iter().collect();
            let shares = tokenize(&reply, &cfg).iter().any(|t| parent_tokens.contains(t));
            Ok(format!("Verdict: {}", if shares { ANSWER_GENERAL } else { ANSWER_ZOMBIE }))
        })
    }
}

impl Transport for MockTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        (self.responder)(request)
    }
}

/// Blocking HTTPS client for chat-completions endpoints, sending the
/// credential as a bearer token.
#[cfg(feature = "http")]
pub struct HttpTransport {
    agent: ureq::Agent,
    endpoint: String,
    credential: Credential,
}

#[cfg(feature = "http")]
impl std::fmt::Debug for HttpTransport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpTransport")
            .field("endpoint", &self.endpoint)
            .field("credential", &self.credential)
            .finish()
    }
}

#[cfg(feature = "http")]
impl HttpTransport {
    /// Reads the credential from `cfg.credential_env`.
    pub fn from_config(cfg: &TransportConfig) -> Result<Self, JudgeError> {
        cfg.validate()?;
        let credential = Credential::from_env(&cfg.credential_env)?;
        Ok(Self::with_credential(cfg, credential))
    }

    pub fn with_credential(cfg: &TransportConfig, credential: Credential) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(std::time::Duration::from_millis(cfg.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            endpoint: cfg.endpoint.clone(),
            credential,
        }
    }

    fn send(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.credential.expose()))
            .header("Content-Type", "application/json")
            .send(&request.body()[..])
            .map_err(|e| match e {
                ureq::Error::Timeout(_) | ureq::Error::Io(_) | ureq::Error::ConnectionFailed => {
                    TransportError::retryable(e.to_string())
                }
                other => TransportError::fatal(other.to_string()),
            })?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError::retryable(format!("reading response body: {e}")))?;
        if status != 200 {
            let snippet: String = text.chars().take(200).collect();
            let msg = format!("HTTP {status}: {snippet}");
            return Err(if status == 429 || status >= 500 {
                TransportError::retryable(msg)
            } else {
                TransportError::fatal(msg)
            });
        }
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| TransportError::fatal(format!("response is not JSON: {e}")))?;
        v.pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| TransportError::fatal("response has no choices[0].message.content"))
    }
}

#[cfg(feature = "http")]
impl Transport for HttpTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        // Error text can quote server output; make sure it cannot carry the key.
        self.send(request).map_err(|e| TransportError {
            retryable: e.retryable,
            message: self.credential.scrub(&e.message),
        })
    }
}
