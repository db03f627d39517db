//! Zero-shot and few-shot LLM judging of parent/reply pairs over a
//! chat-completions style API.
//!
//! The judge is only a baseline: prompts are deterministic, answers are
//! reduced to one of two fixed tokens by [`parse_verdict`], and anything
//! else is scored as a miss. Every exchange is recorded in an audit log
//! keyed by the SHA-256 of the request body.
//!
//! The API credential is read from an environment variable at transport
//! construction and held in a [`Credential`] that has no serialized form
//! and a redacted `Debug`; it never enters a prompt, an audit record or a
//! report.

mod judge;
mod prompt;
mod transport;
mod verdict;

use std::path::PathBuf;

pub use judge::{judge_pairs, AuditRecord, JudgeConfig, JudgeOutcome, JudgeReport, JudgeRun};
pub use prompt::{
    build_prompt, format_query, select_exemplars, Exemplar, JudgePrompt, PromptMode, EXEMPLARS_PER_CLASS,
    STRICT_REMINDER, SYSTEM_INSTRUCTIONS,
};
pub use transport::{
    extract_query, ChatMessage, ChatRequest, Credential, MockTransport, Transport, TransportConfig, TransportError,
};
#[cfg(feature = "http")]
pub use transport::HttpTransport;
pub use verdict::{parse_verdict, JudgeVerdict, Verdict, ANSWER_GENERAL, ANSWER_ZOMBIE};

use crate::classifier::ClassifierError;
use crate::corpus::Label;

#[derive(Debug, thiserror::Error)]
pub enum JudgeError {
    #[error("few-shot prompting needs {need} labeled {label} pairs, found {have}")]
    InsufficientExemplars { label: Label, have: usize, need: usize },
    #[error("environment variable `{var}` holding the API credential is not set")]
    MissingCredential { var: String },
    #[error("invalid judge config field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },
    #[error("nothing to judge")]
    Empty,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Eval(#[from] ClassifierError),
}
