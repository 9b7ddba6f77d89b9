//! Few-shot prompt construction.
//!
//! Template catalogs are TOML tables keyed by template id and language:
//!
//! ```toml
//! [default.en]
//! system = "You are an expert ABB RAPID programmer."
//! example_heading = "Example"
//! task_heading = "Task"
//! instruction_label = "Instruction"
//! input_label = "Input"
//! output_label = "Output"
//! directive = "Output only the complete modified module in one code block."
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use rapidbench_core::corpus::{retrieve_examples, ExampleIndex, Language, TaskInstance};

pub const DEFAULT_TEMPLATE_ID: &str = "default";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Retrieval {
    /// First `shots` instances of the same task in id order.
    #[default]
    None,
    /// Nearest neighbours under the lexical index.
    Lexical,
}

impl Retrieval {
    pub fn as_str(self) -> &'static str {
        match self {
            Retrieval::None => "none",
            Retrieval::Lexical => "lexical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub language: Language,
    pub shots: usize,
    pub template_id: String,
    pub retrieval: Retrieval,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("prompt wants {expected} examples, got {got}")]
    ShotMismatch { expected: usize, got: usize },
    #[error("example {0} is the query instance itself")]
    ExampleOverlap(String),
    #[error("no template {id:?} for language {lang}")]
    UnknownTemplate { id: String, lang: &'static str },
    #[error("only {available} example candidates for {shots} shots")]
    NotEnoughExamples { shots: usize, available: usize },
    #[error("template catalog: {0}")]
    Catalog(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Template {
    pub system: String,
    pub example_heading: String,
    pub task_heading: String,
    pub instruction_label: String,
    pub input_label: String,
    pub output_label: String,
    pub directive: String,
}

impl Template {
    pub fn english() -> Self {
        Self {
            system: "You are an expert programmer for ABB industrial robots. You modify RAPID modules exactly as instructed and keep everything else unchanged.".into(),
            example_heading: "Example".into(),
            task_heading: "Task".into(),
            instruction_label: "Instruction".into(),
            input_label: "Input".into(),
            output_label: "Output".into(),
            directive: "Output only the complete modified module in a single code block, without any explanation.".into(),
        }
    }

    pub fn german() -> Self {
        Self {
            system: "Du bist ein erfahrener Programmierer für ABB-Industrieroboter. Du änderst RAPID-Module genau wie angewiesen und lässt alles andere unverändert.".into(),
            example_heading: "Beispiel".into(),
            task_heading: "Aufgabe".into(),
            instruction_label: "Anweisung".into(),
            input_label: "Eingabe".into(),
            output_label: "Ausgabe".into(),
            directive: "Gib nur das vollständige geänderte Modul in einem einzigen Codeblock aus, ohne Erklärung.".into(),
        }
    }
}

/// Template sets by id, each with one template per language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TemplateCatalog(BTreeMap<String, BTreeMap<Language, Template>>);

impl Default for TemplateCatalog {
    fn default() -> Self {
        let set = BTreeMap::from([(Language::De, Template::german()), (Language::En, Template::english())]);
        Self(BTreeMap::from([(DEFAULT_TEMPLATE_ID.to_string(), set)]))
    }
}

impl TemplateCatalog {
    pub fn from_toml(text: &str) -> Result<Self, PromptError> {
        toml::from_str(text).map_err(|e| PromptError::Catalog(e.to_string()))
    }

    /// Built-in templates overlaid with the sets in `path`.
    pub fn load_with_defaults(path: &Path) -> Result<Self, PromptError> {
        let text = fs::read_to_string(path).map_err(|e| PromptError::Catalog(format!("{}: {e}", path.display())))?;
        let mut catalog = Self::default();
        for (id, set) in Self::from_toml(&text)?.0 {
            catalog.0.entry(id).or_default().extend(set);
        }
        Ok(catalog)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("catalog serializes")
    }

    pub fn get(&self, id: &str, lang: Language) -> Result<&Template, PromptError> {
        self.0
            .get(id)
            .and_then(|set| set.get(&lang))
            .ok_or_else(|| PromptError::UnknownTemplate {
                id: id.to_string(),
                lang: lang.code(),
            })
    }
}

fn fenced(out: &mut String, code: &str) {
    out.push_str("```rapid\n");
    out.push_str(code.trim_end());
    out.push_str("\n```\n");
}

pub fn build_prompt(
    instance: &TaskInstance,
    spec: &PromptSpec,
    examples: &[&TaskInstance],
    catalog: &TemplateCatalog,
) -> Result<String, PromptError> {
    if examples.len() != spec.shots {
        return Err(PromptError::ShotMismatch {
            expected: spec.shots,
            got: examples.len(),
        });
    }
    if let Some(ex) = examples.iter().find(|e| e.id == instance.id) {
        return Err(PromptError::ExampleOverlap(ex.id.clone()));
    }
    let t = catalog.get(&spec.template_id, spec.language)?;
    let mut out = String::new();
    out.push_str(t.system.trim());
    out.push_str("\n\n");
    for (i, ex) in examples.iter().enumerate() {
        out.push_str(&format!("### {} {}\n", t.example_heading, i + 1));
        out.push_str(&format!("{}: {}\n", t.instruction_label, ex.instruction(spec.language)));
        out.push_str(&format!("{}:\n", t.input_label));
        fenced(&mut out, &ex.input_source);
        out.push_str(&format!("{}:\n", t.output_label));
        fenced(&mut out, &ex.expected_source);
        out.push('\n');
    }
    out.push_str(&format!("### {}\n", t.task_heading));
    out.push_str(&format!("{}: {}\n", t.instruction_label, instance.instruction(spec.language)));
    out.push_str(&format!("{}:\n", t.input_label));
    fenced(&mut out, &instance.input_source);
    out.push('\n');
    out.push_str(t.directive.trim());
    out.push('\n');
    Ok(out)
}

/// Chooses `shots` examples for `query` from `pool`, never the query itself.
pub fn select_examples<'a>(
    query: &TaskInstance,
    pool: &'a [TaskInstance],
    index: &ExampleIndex,
    shots: usize,
    retrieval: Retrieval,
) -> Result<Vec<&'a TaskInstance>, PromptError> {
    if shots == 0 {
        return Ok(Vec::new());
    }
    let by_id: BTreeMap<&str, &TaskInstance> = pool.iter().map(|i| (i.id.as_str(), i)).collect();
    let picked: Vec<&TaskInstance> = match retrieval {
        Retrieval::Lexical => retrieve_examples(query, index, shots)
            .iter()
            .filter_map(|id| by_id.get(id.as_str()).copied())
            .collect(),
        Retrieval::None => {
            let others = by_id.values().filter(|i| i.id != query.id);
            let same = others.clone().filter(|i| i.task.kind() == query.task.kind());
            let rest = others.filter(|i| i.task.kind() != query.task.kind());
            same.chain(rest).take(shots).copied().collect()
        }
    };
    if picked.len() < shots {
        return Err(PromptError::NotEnoughExamples {
            shots,
            available: picked.len(),
        });
    }
    Ok(picked)
}
