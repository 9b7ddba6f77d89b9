//! Evaluation records and the per-task, per-language summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use rapidbench_core::conformance::ValidationReport;
use rapidbench_core::corpus::Language;
use rapidbench_core::transforms::TaskKind;

use crate::client::{transcript_key, Transcript};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub task: TaskKind,
    pub language: Language,
    pub sample: usize,
    pub response: String,
    pub code: String,
    /// `None` when that scorer is switched off.
    pub strict: Option<bool>,
    pub functional: Option<bool>,
    pub validation: ValidationReport,
    pub latency_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub model: String,
    pub seed: u64,
    pub config_sha256: String,
    pub languages: Vec<Language>,
    pub shots: usize,
    pub retrieval: String,
    pub template_id: String,
    pub temperature: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub task: TaskKind,
    pub language: Language,
    pub n: usize,
    pub strict_matches: Option<usize>,
    pub functional_matches: Option<usize>,
    /// Percentages rounded to two decimals.
    pub strict_accuracy: Option<f64>,
    pub functional_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassAtKSummary {
    pub task: TaskKind,
    pub language: Language,
    /// Samples per instance.
    pub n: usize,
    /// Passing samples summed over instances.
    pub c: usize,
    pub k: usize,
    pub instances: usize,
    /// Mean per-instance pass@k.
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub meta: ReportMeta,
    pub cells: Vec<CellSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pass_at_k: Vec<PassAtKSummary>,
    pub records: Vec<EvalRecord>,
}

/// `matches / n` as a percentage with two decimals, rounded half up on the
/// exact rational.
pub fn percent(matches: usize, n: usize) -> String {
    let bp = basis_points(matches, n);
    format!("{}.{:02}", bp / 100, bp % 100)
}

fn basis_points(matches: usize, n: usize) -> u128 {
    if n == 0 {
        return 0;
    }
    let (m, n) = (matches as u128, n as u128);
    (m * 20_000 + n) / (2 * n)
}

pub fn accuracy(matches: usize, n: usize) -> f64 {
    basis_points(matches, n) as f64 / 100.0
}

/// Aggregates records per (task, language) in task then language order.
pub fn summarize(records: &[EvalRecord]) -> Vec<CellSummary> {
    let mut cells: BTreeMap<(TaskKind, Language), Vec<&EvalRecord>> = BTreeMap::new();
    for r in records {
        cells.entry((r.task, r.language)).or_default().push(r);
    }
    cells
        .into_iter()
        .map(|((task, language), rs)| {
            let n = rs.len();
            let count = |f: fn(&EvalRecord) -> Option<bool>| -> Option<usize> {
                let scored: Vec<bool> = rs.iter().filter_map(|r| f(r)).collect();
                (scored.len() == n).then(|| scored.iter().filter(|&&b| b).count())
            };
            let strict = count(|r| r.strict);
            let functional = count(|r| r.functional);
            CellSummary {
                task,
                language,
                n,
                strict_matches: strict,
                functional_matches: functional,
                strict_accuracy: strict.map(|m| accuracy(m, n)),
                functional_accuracy: functional.map(|m| accuracy(m, n)),
            }
        })
        .collect()
}

pub fn task_label(task: TaskKind) -> &'static str {
    match task {
        TaskKind::T1 => "Modifying arguments",
        TaskKind::T2 => "Adding an offset",
        TaskKind::T3 => "Reversing a routine",
    }
}

fn column_label(lang: Language) -> &'static str {
    match lang {
        Language::De => "German prompts",
        Language::En => "English prompts",
    }
}

#[derive(Clone, Copy)]
enum Metric {
    Strict,
    Functional,
}

impl EvalReport {
    pub fn cell(&self, task: TaskKind, language: Language) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.task == task && c.language == language)
    }

    fn has(&self, metric: Metric) -> bool {
        self.cells.iter().any(|c| match metric {
            Metric::Strict => c.strict_matches.is_some(),
            Metric::Functional => c.functional_matches.is_some(),
        })
    }

    fn table(&self, out: &mut String, metric: Metric) {
        let cols: Vec<&str> = Language::ALL.iter().map(|&l| column_label(l)).collect();
        let _ = writeln!(out, "| Task | {} | {} |", cols[0], cols[1]);
        let _ = writeln!(out, "|:-----|-----:|-----:|");
        for task in TaskKind::ALL {
            let values: Vec<String> = Language::ALL
                .iter()
                .map(|&lang| {
                    let matches = self.cell(task, lang).and_then(|c| {
                        let m = match metric {
                            Metric::Strict => c.strict_matches,
                            Metric::Functional => c.functional_matches,
                        };
                        m.map(|m| (m, c.n))
                    });
                    match matches {
                        Some((m, n)) if n > 0 => percent(m, n),
                        _ => "n/a".to_string(),
                    }
                })
                .collect();
            let _ = writeln!(out, "| {} | {} | {} |", task_label(task), values[0], values[1]);
        }
    }

    /// Markdown summary: one task-by-language accuracy table per scorer.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Accuracy per task\n\n");
        if self.has(Metric::Strict) {
            out.push_str("## Strict match (%)\n\n");
            self.table(&mut out, Metric::Strict);
            out.push('\n');
        }
        if self.has(Metric::Functional) {
            out.push_str("## Functional match (%)\n\n");
            self.table(&mut out, Metric::Functional);
            out.push('\n');
        }
        if !self.pass_at_k.is_empty() {
            out.push_str("## pass@k\n\n| Task | Language | n | k | pass@k |\n|:-----|:-----|-----:|-----:|-----:|\n");
            for p in &self.pass_at_k {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {:.4} |",
                    task_label(p.task),
                    p.language.code(),
                    p.n,
                    p.k,
                    p.estimate
                );
            }
            out.push('\n');
        }
        let m = &self.meta;
        out.push_str("## Run\n\n");
        let _ = writeln!(out, "- model: {}", m.model);
        let _ = writeln!(out, "- seed: {}", m.seed);
        let _ = writeln!(out, "- shots: {} ({} retrieval, template {})", m.shots, m.retrieval, m.template_id);
        let _ = writeln!(out, "- temperature: {}, samples: {}", m.temperature, m.samples);
        let _ = writeln!(out, "- instances per cell: {}", self.cell_sizes());
        let _ = writeln!(out, "- config sha256: {}", m.config_sha256);
        out
    }

    fn cell_sizes(&self) -> String {
        let mut sizes: Vec<usize> = self.cells.iter().map(|c| c.n).collect();
        sizes.sort_unstable();
        sizes.dedup();
        match sizes.as_slice() {
            [] => "0".into(),
            [n] => n.to_string(),
            _ => self
                .cells
                .iter()
                .map(|c| format!("{}/{}={}", c.task.as_str(), c.language.code(), c.n))
                .collect::<Vec<_>>()
                .join(", "),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("task,language,n,strict_matches,strict_accuracy,functional_matches,functional_accuracy\n");
        let opt = |m: Option<usize>, n: usize| match m {
            Some(m) => (m.to_string(), percent(m, n)),
            None => (String::new(), String::new()),
        };
        for c in &self.cells {
            let (sm, sa) = opt(c.strict_matches, c.n);
            let (fm, fa) = opt(c.functional_matches, c.n);
            let _ = writeln!(out, "{},{},{},{sm},{sa},{fm},{fa}", c.task.as_str(), c.language.code(), c.n);
        }
        out
    }

    /// Responses keyed for [`crate::client::ReplayClient`]; failed requests are left out.
    pub fn transcript(&self) -> Transcript {
        self.records
            .iter()
            .filter(|r| r.error.is_none())
            .map(|r| (transcript_key(&r.id, r.language, r.sample), r.response.clone()))
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
