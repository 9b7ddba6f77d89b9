use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rapidbench_core::corpus::Language;

use super::{ClientError, Completion, GenerationRequest, ModelClient};

/// Saved responses keyed by [`transcript_key`] (or by bare instance id).
pub type Transcript = BTreeMap<String, String>;

/// `id/lang` for the first sample, `id/lang/sample` for later ones.
pub fn transcript_key(id: &str, language: Language, sample: usize) -> String {
    if sample == 0 {
        format!("{id}/{}", language.code())
    } else {
        format!("{id}/{}/{sample}", language.code())
    }
}

#[derive(Debug, Clone)]
pub struct ReplayClient {
    name: String,
    transcript: Transcript,
}

impl ReplayClient {
    pub fn new(name: impl Into<String>, transcript: Transcript) -> Self {
        Self {
            name: name.into(),
            transcript,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ClientError> {
        let text = fs::read_to_string(path).map_err(|e| ClientError::Setup(format!("{}: {e}", path.display())))?;
        let transcript: Transcript =
            serde_json::from_str(&text).map_err(|e| ClientError::Setup(format!("{}: {e}", path.display())))?;
        let name = path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        Ok(Self::new(format!("replay({name})"), transcript))
    }
}

impl ModelClient for ReplayClient {
    fn identity(&self) -> String {
        self.name.clone()
    }

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Completion, ClientError> {
        let key = transcript_key(request.id, request.language, request.sample);
        let text = self
            .transcript
            .get(&key)
            .or_else(|| self.transcript.get(request.id))
            .ok_or(ClientError::MissingTranscript(key))?;
        Ok(Completion {
            text: text.clone(),
            latency_s: 0.0,
        })
    }
}
