//! Lexical nearest-neighbour retrieval of solved instances for few-shot
//! prompts: term-frequency vectors over code tokens and task-parameter
//! tokens, compared by cosine similarity.

use std::collections::BTreeMap;

use crate::syntax::{tokenize, TokenKind};
use crate::transforms::{ArgSelector, MoveSelector, TaskParams};

use super::TaskInstance;

/// Sparse L2-normalized vector, sorted by term.
type SparseVec = Vec<(String, f64)>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExampleIndex {
    entries: BTreeMap<String, SparseVec>,
}

impl ExampleIndex {
    pub fn build<'a>(instances: impl IntoIterator<Item = &'a TaskInstance>) -> Self {
        let mut index = Self::default();
        for inst in instances {
            index.insert(inst);
        }
        index
    }

    pub fn insert(&mut self, instance: &TaskInstance) {
        self.entries.insert(instance.id.clone(), vectorize(instance));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn vector(&self, id: &str) -> Option<&[(String, f64)]> {
        self.entries.get(id).map(Vec::as_slice)
    }
}

fn task_terms(task: &TaskParams) -> Vec<String> {
    let mut terms = vec![format!("task={}", task.kind().as_str())];
    match task {
        TaskParams::T1 {
            selector,
            field,
            new_value,
        } => {
            terms.push(format!("field={}", field.as_str()));
            terms.push(
                match selector {
                    ArgSelector::All => "selector=all",
                    ArgSelector::Range(..) => "selector=range",
                    ArgSelector::Target(_) => "selector=target",
                }
                .to_string(),
            );
            terms.push(format!("value={}", new_value.to_ascii_lowercase()));
        }
        TaskParams::T2 { selector, .. } => terms.push(
            match selector {
                MoveSelector::Index(_) => "selector=index",
                MoveSelector::Target(_) => "selector=target",
            }
            .to_string(),
        ),
        TaskParams::T3 { mode } => terms.push(format!("mode={}", mode.as_str())),
    }
    terms
}

fn vectorize(instance: &TaskInstance) -> SparseVec {
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    // Numerals are coordinates and carry no signal about the task.
    for tok in tokenize(&instance.input_source).unwrap_or_default() {
        let term = match tok.kind {
            TokenKind::Keyword(k) => k.as_str().to_ascii_uppercase(),
            TokenKind::Ident(name) => name.to_ascii_lowercase(),
            TokenKind::Switch(name) => format!("\\{}", name.to_ascii_lowercase()),
            _ => continue,
        };
        *counts.entry(term).or_default() += 1.0;
    }
    for term in task_terms(&instance.task) {
        *counts.entry(term).or_default() += 1.0;
    }
    let norm = counts.values().map(|c| c * c).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Vec::new();
    }
    counts.into_iter().map(|(t, c)| (t, c / norm)).collect()
}

fn cosine(a: &[(String, f64)], b: &[(String, f64)]) -> f64 {
    let (mut i, mut j, mut dot) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    dot.clamp(0.0, 1.0)
}

/// Top-`k` ids by cosine similarity with their scores, ties broken by
/// ascending id. The query's own id is never returned.
pub fn retrieve_scored(query: &TaskInstance, index: &ExampleIndex, k: usize) -> Vec<(String, f64)> {
    if k == 0 {
        return Vec::new();
    }
    let q = vectorize(query);
    let mut scored: Vec<(String, f64)> = index
        .entries
        .iter()
        .filter(|(id, _)| **id != query.id)
        .map(|(id, v)| (id.clone(), cosine(&q, v)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

pub fn retrieve_examples(query: &TaskInstance, index: &ExampleIndex, k: usize) -> Vec<String> {
    retrieve_scored(query, index, k)
        .into_iter()
        .map(|(id, _)| id)
        .collect()
}
