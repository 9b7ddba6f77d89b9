//! Model endpoints: a blocking `ModelClient` trait plus a seeded oracle
//! mock, a transcript replayer, and an OpenAI-style HTTP client.

mod http;
mod mock;
mod replay;

use rapidbench_core::corpus::Language;
use thiserror::Error;

pub use http::{HttpClient, HttpSettings, API_KEY_ENV};
pub use mock::{Mutation, OracleMock};
pub use replay::{transcript_key, ReplayClient, Transcript};

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest<'a> {
    pub id: &'a str,
    pub language: Language,
    /// 0-based sample number when several completions are drawn per prompt.
    pub sample: usize,
    pub prompt: &'a str,
    pub temperature: f64,
    pub max_tokens: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    /// Wall-clock seconds spent in the endpoint; 0 for offline clients.
    pub latency_s: f64,
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("no transcript entry for {0}")]
    MissingTranscript(String),
    #[error("unknown instance {0}")]
    UnknownInstance(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("client setup: {0}")]
    Setup(String),
}

pub trait ModelClient: Send + Sync {
    /// Model name recorded in report metadata.
    fn identity(&self) -> String;

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Completion, ClientError>;
}
