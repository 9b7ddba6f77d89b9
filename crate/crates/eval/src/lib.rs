//! Evaluation harness for RAPID code-modification tasks: few-shot prompt
//! construction, model clients, code extraction, scoring and reports.

pub mod client;
pub mod config;
pub mod extract;
pub mod passk;
pub mod prompt;
pub mod report;
mod run;

use thiserror::Error;

pub use config::{EvalConfig, ModelConfig, Scoring};
pub use extract::extract_code;
pub use passk::{pass_at_k, DomainError};
pub use report::{EvalRecord, EvalReport};
pub use run::{run_eval, Harness};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] rapidbench_core::corpus::CorpusError),
    #[error(transparent)]
    Rules(#[from] rapidbench_core::conformance::RuleSetError),
    #[error(transparent)]
    Prompt(#[from] prompt::PromptError),
    #[error(transparent)]
    Client(#[from] client::ClientError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}
