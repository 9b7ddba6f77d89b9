use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ClientError, Completion, GenerationRequest, ModelClient};

pub const API_KEY_ENV: &str = "RAPIDBENCH_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpSettings {
    pub base_url: String,
    pub path: String,
    pub model: String,
    pub timeout_s: f64,
    /// Extra attempts after the first failure.
    pub retries: u32,
    pub backoff_ms: u64,
}

impl Default for HttpSettings {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:8000".into(),
            path: "/v1/chat/completions".into(),
            model: "local-model".into(),
            timeout_s: 120.0,
            retries: 2,
            backoff_ms: 500,
        }
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: String,
}

/// OpenAI-compatible chat-completion client.
#[derive(Debug)]
pub struct HttpClient {
    settings: HttpSettings,
    url: String,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
}

impl HttpClient {
    /// Reads the bearer token from `RAPIDBENCH_API_KEY` when set.
    pub fn new(settings: HttpSettings) -> Result<Self, ClientError> {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::with_api_key(settings, key)
    }

    pub fn with_api_key(settings: HttpSettings, api_key: Option<String>) -> Result<Self, ClientError> {
        if !(settings.timeout_s > 0.0 && settings.timeout_s.is_finite()) {
            return Err(ClientError::Setup(format!("timeout_s must be positive, got {}", settings.timeout_s)));
        }
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(settings.timeout_s))
            .build()
            .map_err(|e| ClientError::Setup(e.to_string()))?;
        let url = format!(
            "{}/{}",
            settings.base_url.trim_end_matches('/'),
            settings.path.trim_start_matches('/')
        );
        Ok(Self {
            settings,
            url,
            api_key,
            http,
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn attempt(&self, request: &GenerationRequest<'_>) -> Result<String, ClientError> {
        let body = json!({
            "model": self.settings.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        let mut req = self.http.post(&self.url).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| ClientError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(ClientError::Status {
                status: status.as_u16(),
                body: text.chars().take(200).collect(),
            });
        }
        let parsed: ChatResponse = serde_json::from_str(&text).map_err(|e| ClientError::Malformed(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| ClientError::Malformed("no choices".into()))
    }
}

fn retryable(err: &ClientError) -> bool {
    match err {
        ClientError::Transport(_) => true,
        ClientError::Status { status, .. } => *status == 429 || *status >= 500,
        _ => false,
    }
}

impl ModelClient for HttpClient {
    fn identity(&self) -> String {
        self.settings.model.clone()
    }

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Completion, ClientError> {
        let started = Instant::now();
        let mut attempt = 0;
        loop {
            match self.attempt(request) {
                Ok(text) => {
                    return Ok(Completion {
                        text,
                        latency_s: started.elapsed().as_secs_f64(),
                    })
                }
                Err(e) if attempt < self.settings.retries && retryable(&e) => {
                    attempt += 1;
                    std::thread::sleep(Duration::from_millis(self.settings.backoff_ms << (attempt - 1)));
                }
                Err(e) => return Err(e),
            }
        }
    }
}
