//! Task-instance corpora: seeded generation, the on-disk manifest layout, and
//! lexical few-shot example retrieval.
//!
//! ```text
//! <dir>/manifest.jsonl
//! <dir>/inputs/<id>.mod
//! <dir>/expected/<id>.mod
//! ```

mod generator;
mod retrieval;
mod templates;

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::transforms::{ReverseMode, TaskKind, TaskParams};

pub use generator::{generate_corpus, AXIS_ALIGNED_QUATERNIONS};
pub use retrieval::{retrieve_examples, retrieve_scored, ExampleIndex};
pub use templates::instruction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    De,
    En,
}

impl Language {
    pub const ALL: [Language; 2] = [Language::De, Language::En];

    pub fn code(self) -> &'static str {
        match self {
            Language::De => "de",
            Language::En => "en",
        }
    }

    pub fn parse(s: &str) -> Option<Language> {
        Self::ALL.into_iter().find(|l| l.code().eq_ignore_ascii_case(s))
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("oracle failed on {id}: {source}")]
    Oracle {
        id: String,
        source: crate::transforms::TransformError,
    },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub seed: u64,
    pub count: usize,
    pub moves_min: usize,
    pub moves_max: usize,
    pub coord_range_mm: (f64, f64),
    pub movec_fraction: f64,
    pub task_mix: BTreeMap<TaskKind, f64>,
    /// Ground-truth semantics for generated T3 instances.
    pub reversal_mode: ReverseMode,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            count: 100,
            moves_min: 3,
            moves_max: 12,
            coord_range_mm: (-1000.0, 1000.0),
            movec_fraction: 0.15,
            task_mix: TaskKind::ALL.into_iter().map(|k| (k, 1.0)).collect(),
            reversal_mode: ReverseMode::Instruction,
        }
    }
}

impl GenConfig {
    pub fn check(&self) -> Result<(), CorpusError> {
        let fail = |m: &str| Err(CorpusError::Config(m.to_string()));
        if self.count == 0 {
            return fail("count must be positive");
        }
        if self.moves_min == 0 || self.moves_min > self.moves_max {
            return fail("need 1 <= moves_min <= moves_max");
        }
        let (lo, hi) = self.coord_range_mm;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return fail("coord_range_mm must be a finite interval with lo < hi");
        }
        if !(0.0..=1.0).contains(&self.movec_fraction) {
            return fail("movec_fraction must lie in [0, 1]");
        }
        if self.task_mix.values().any(|w| !w.is_finite() || *w < 0.0) {
            return fail("task weights must be finite and non-negative");
        }
        if self.task_mix.values().all(|w| *w == 0.0) {
            return fail("at least one task weight must be positive");
        }
        Ok(())
    }

    /// Parses `t1=1,t2=0.5,t3=2`. Tasks not mentioned get weight 0.
    pub fn parse_task_mix(text: &str) -> Result<BTreeMap<TaskKind, f64>, CorpusError> {
        let mut mix: BTreeMap<TaskKind, f64> = TaskKind::ALL.into_iter().map(|k| (k, 0.0)).collect();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (task, weight) = part
                .split_once('=')
                .or_else(|| part.split_once(':'))
                .ok_or_else(|| CorpusError::Config(format!("expected task=weight, got {part:?}")))?;
            let kind = TaskKind::parse(task.trim())
                .ok_or_else(|| CorpusError::Config(format!("unknown task {task:?}")))?;
            let w: f64 = weight
                .trim()
                .parse()
                .map_err(|_| CorpusError::Config(format!("bad weight {weight:?}")))?;
            mix.insert(kind, w);
        }
        Ok(mix)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskInstance {
    pub id: String,
    pub task: TaskParams,
    /// Procedure the task applies to.
    pub proc_name: String,
    pub input_source: String,
    pub expected_source: String,
    pub nl_instruction_de: String,
    pub nl_instruction_en: String,
}

impl TaskInstance {
    pub fn instruction(&self, lang: Language) -> &str {
        match lang {
            Language::De => &self.nl_instruction_de,
            Language::En => &self.nl_instruction_en,
        }
    }
}

/// One line of `manifest.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub task: TaskParams,
    pub proc: String,
    pub input_path: String,
    pub expected_path: String,
    pub nl_de: String,
    pub nl_en: String,
}

pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// Writes the corpus layout under `dir` and returns the manifest path.
pub fn write_corpus(dir: &Path, instances: &[TaskInstance]) -> Result<PathBuf, CorpusError> {
    let inputs = dir.join("inputs");
    let expected = dir.join("expected");
    fs::create_dir_all(&inputs).map_err(io_err(&inputs))?;
    fs::create_dir_all(&expected).map_err(io_err(&expected))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let mut manifest = Vec::new();
    for inst in instances {
        let input_rel = format!("inputs/{}.mod", inst.id);
        let expected_rel = format!("expected/{}.mod", inst.id);
        let p = dir.join(&input_rel);
        fs::write(&p, &inst.input_source).map_err(io_err(&p))?;
        let p = dir.join(&expected_rel);
        fs::write(&p, &inst.expected_source).map_err(io_err(&p))?;
        let entry = ManifestEntry {
            id: inst.id.clone(),
            task: inst.task.clone(),
            proc: inst.proc_name.clone(),
            input_path: input_rel,
            expected_path: expected_rel,
            nl_de: inst.nl_instruction_de.clone(),
            nl_en: inst.nl_instruction_en.clone(),
        };
        serde_json::to_writer(&mut manifest, &entry).expect("manifest entry serializes");
        manifest.push(b'\n');
    }
    let mut f = fs::File::create(&manifest_path).map_err(io_err(&manifest_path))?;
    f.write_all(&manifest).map_err(io_err(&manifest_path))?;
    Ok(manifest_path)
}

/// Reads a manifest and the module files it points at. Paths in the
/// manifest are relative to the manifest's directory.
pub fn load_manifest(path: &Path) -> Result<Vec<TaskInstance>, CorpusError> {
    let base = path.parent().unwrap_or(Path::new("."));
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| CorpusError::Manifest {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let entry: ManifestEntry = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        if !seen.insert(entry.id.clone()) {
            return Err(bad(format!("duplicate id {}", entry.id)));
        }
        let read = |rel: &str| {
            let p = base.join(rel);
            fs::read_to_string(&p).map_err(io_err(&p))
        };
        out.push(TaskInstance {
            input_source: read(&entry.input_path)?,
            expected_source: read(&entry.expected_path)?,
            id: entry.id,
            task: entry.task,
            proc_name: entry.proc,
            nl_instruction_de: entry.nl_de,
            nl_instruction_en: entry.nl_en,
        });
    }
    Ok(out)
}
