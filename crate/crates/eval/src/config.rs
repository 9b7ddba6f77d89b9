//! TOML run configuration.
//!
//! ```toml
//! corpus = "corpus/manifest.jsonl"
//! languages = ["de", "en"]
//! shots = 2
//! retrieval = "lexical"
//! seed = 42
//! parallelism = 8
//!
//! [scoring]
//! strict = true
//! functional = true
//!
//! [model]
//! kind = "mock"
//! error_rate = 0.2
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rapidbench_core::corpus::Language;

use crate::client::HttpSettings;
use crate::prompt::{Retrieval, DEFAULT_TEMPLATE_ID};
use crate::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scoring {
    pub strict: bool,
    pub functional: bool,
}

impl Default for Scoring {
    fn default() -> Self {
        Self {
            strict: true,
            functional: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelConfig {
    Mock {
        /// Defaults to the run seed.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default)]
        error_rate: f64,
    },
    Replay {
        transcript: PathBuf,
    },
    Http(HttpSettings),
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::Mock {
            seed: None,
            error_rate: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Path to `manifest.jsonl`.
    pub corpus: PathBuf,
    pub languages: Vec<Language>,
    pub shots: usize,
    pub retrieval: Retrieval,
    pub template_id: String,
    /// Extra template catalog overlaid on the built-in one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub templates: Option<PathBuf>,
    /// Rule set for validator reports; built-in defaults when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rules: Option<PathBuf>,
    pub seed: u64,
    pub parallelism: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Completions drawn per prompt.
    pub samples: usize,
    /// pass@k values reported when non-empty; each must be at most `samples`.
    pub pass_k: Vec<usize>,
    /// Start position of the functional-match trace, in mm.
    pub start: [f64; 3],
    pub scoring: Scoring,
    pub model: ModelConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            corpus: PathBuf::from("manifest.jsonl"),
            languages: Language::ALL.to_vec(),
            shots: 2,
            retrieval: Retrieval::None,
            template_id: DEFAULT_TEMPLATE_ID.into(),
            templates: None,
            rules: None,
            seed: 42,
            parallelism: 4,
            temperature: 0.0,
            max_tokens: 2048,
            samples: 1,
            pass_k: Vec::new(),
            start: [0.0; 3],
            scoring: Scoring::default(),
            model: ModelConfig::default(),
        }
    }
}

impl EvalConfig {
    pub fn from_toml(text: &str) -> Result<Self, EvalError> {
        let cfg: Self = toml::from_str(text).map_err(|e| EvalError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Parses `path` and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = fs::read_to_string(path).map_err(|e| EvalError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| EvalError::Config(format!("{}: {e}", path.display())))?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus);
        if let Some(p) = &mut self.templates {
            fix(p);
        }
        if let Some(p) = &mut self.rules {
            fix(p);
        }
        if let ModelConfig::Replay { transcript } = &mut self.model {
            fix(transcript);
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn check(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::Config(m));
        if self.languages.is_empty() {
            return bad("languages must not be empty".into());
        }
        let mut langs = self.languages.clone();
        langs.sort();
        langs.dedup();
        if langs.len() != self.languages.len() {
            return bad("languages contain duplicates".into());
        }
        if self.parallelism == 0 {
            return bad("parallelism must be at least 1".into());
        }
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if let Some(&k) = self.pass_k.iter().find(|&&k| k == 0 || k > self.samples) {
            return bad(format!("pass_k value {k} outside 1..={}", self.samples));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return bad(format!("temperature {} must be finite and non-negative", self.temperature));
        }
        if !self.scoring.strict && !self.scoring.functional {
            return bad("at least one of scoring.strict and scoring.functional must be on".into());
        }
        if self.start.iter().any(|c| !c.is_finite()) {
            return bad("start must be finite".into());
        }
        if let ModelConfig::Mock { error_rate, .. } = self.model {
            if !(0.0..=1.0).contains(&error_rate) {
                return bad(format!("model.error_rate {error_rate} outside [0, 1]"));
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the config's canonical JSON form.
    pub fn sha256(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}
