use std::sync::atomic::{AtomicUsize, Ordering};

use proptest::prelude::*;

use rapidbench_core::corpus::{generate_corpus, write_corpus, GenConfig, Language, TaskInstance};
use rapidbench_core::transforms::TaskKind;
use rapidbench_eval::client::{ClientError, Completion, GenerationRequest, ModelClient, ReplayClient};
use rapidbench_eval::prompt::Retrieval;
use rapidbench_eval::{pass_at_k, run_eval, EvalConfig, Harness, ModelConfig, Scoring};

fn corpus(count: usize) -> Vec<TaskInstance> {
    generate_corpus(&GenConfig { count, seed: 5, ..GenConfig::default() }).unwrap()
}

fn config(model: ModelConfig) -> EvalConfig {
    EvalConfig {
        model,
        shots: 1,
        ..EvalConfig::default()
    }
}

fn mock(error_rate: f64) -> ModelConfig {
    ModelConfig::Mock { seed: Some(1), error_rate }
}

#[test]
fn perfect_mock_scores_everything() {
    let h = Harness::new(config(mock(0.0)), corpus(30)).unwrap();
    let report = h.run(h.client().unwrap().as_ref()).unwrap();
    assert_eq!(report.records.len(), 60);
    assert_eq!(report.cells.len(), 6);
    for c in &report.cells {
        assert_eq!(c.strict_accuracy, Some(100.0));
        assert_eq!(c.functional_accuracy, Some(100.0));
    }
    assert!(report.records.iter().all(|r| r.validation.pass));
    assert!(report.to_markdown().matches("| 100.00 | 100.00 |").count() == 6);
    let first = &h.instances()[0];
    let prompt = h.prompt(first, Language::En).unwrap();
    assert!(prompt.contains(first.input_source.trim_end()));
    assert_eq!(prompt.matches("```rapid").count(), 3);
}

#[test]
fn matches_add_up_and_strict_implies_parse() {
    let h = Harness::new(config(mock(0.3)), corpus(45)).unwrap();
    let report = h.run(h.client().unwrap().as_ref()).unwrap();
    let from_cells: usize = report.cells.iter().map(|c| c.strict_matches.unwrap()).sum();
    let from_records = report.records.iter().filter(|r| r.strict == Some(true)).count();
    assert_eq!(from_cells, from_records);
    for r in &report.records {
        if r.strict == Some(true) {
            assert!(rapidbench_core::syntax::parse_module(&r.code).is_ok());
            assert_eq!(r.functional, Some(true));
        }
    }
    for c in &report.cells {
        // 15 instances per task, round(0.3 * 15) = 5 wrong.
        assert_eq!((c.n, c.strict_matches), (15, Some(10)));
    }
}

#[test]
fn ordering_ignores_parallelism() {
    let c = corpus(24);
    let a = Harness::new(EvalConfig { parallelism: 1, ..config(mock(0.5)) }, c.clone()).unwrap();
    let b = Harness::new(EvalConfig { parallelism: 7, ..config(mock(0.5)) }, c.into_iter().rev().collect()).unwrap();
    let ra = a.run(a.client().unwrap().as_ref()).unwrap();
    let rb = b.run(b.client().unwrap().as_ref()).unwrap();
    assert_eq!(ra.records, rb.records);
    assert_eq!(ra.cells, rb.cells);
    let ids: Vec<&str> = ra.records.iter().map(|r| r.id.as_str()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
}

/// Fails every third call.
struct Flaky(AtomicUsize);

impl ModelClient for Flaky {
    fn identity(&self) -> String {
        "flaky".into()
    }

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Completion, ClientError> {
        if self.0.fetch_add(1, Ordering::SeqCst).is_multiple_of(3) {
            return Err(ClientError::Transport("connection reset".into()));
        }
        Ok(Completion {
            text: format!("no idea about {}", request.id),
            latency_s: 0.5,
        })
    }
}

#[test]
fn transport_failures_are_recorded_not_fatal() {
    let h = Harness::new(EvalConfig { parallelism: 1, ..config(mock(0.0)) }, corpus(9)).unwrap();
    let report = h.run(&Flaky(AtomicUsize::new(0))).unwrap();
    assert_eq!(report.records.len(), 18);
    let failed: Vec<_> = report.records.iter().filter(|r| r.error.is_some()).collect();
    assert_eq!(failed.len(), 6);
    for r in &failed {
        assert_eq!((r.strict, r.functional), (Some(false), Some(false)));
        assert!(r.error.as_ref().unwrap().contains("connection reset"));
    }
    assert_eq!(report.meta.model, "flaky");
    assert_eq!(report.transcript().len(), 12);
}

#[test]
fn replay_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_corpus(dir.path(), &corpus(18)).unwrap();
    let cfg = EvalConfig {
        retrieval: Retrieval::Lexical,
        ..config(mock(0.2))
    };
    let h = Harness::new(cfg.clone(), rapidbench_core::corpus::load_manifest(&manifest).unwrap()).unwrap();
    let first = run_eval(&manifest, &cfg, h.client().unwrap().as_ref()).unwrap();
    let transcript = dir.path().join("t.json");
    std::fs::write(&transcript, serde_json::to_string(&first.transcript()).unwrap()).unwrap();
    let replay_cfg = config(ModelConfig::Replay { transcript: transcript.clone() });
    let client = ReplayClient::load(&transcript).unwrap();
    let a = run_eval(&manifest, &replay_cfg, &client).unwrap();
    let b = run_eval(&manifest, &replay_cfg, &client).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.cells, first.cells);
    assert_eq!(rapidbench_eval::EvalReport::from_json(&a.to_json()).unwrap(), a);
}

#[test]
fn missing_replay_entries_fail_only_those_records() {
    let c = corpus(6);
    let mut transcript = std::collections::BTreeMap::new();
    transcript.insert(format!("{}/de", c[0].id), format!("```\n{}\n```", c[0].expected_source));
    let h = Harness::new(config(mock(0.0)), c.clone()).unwrap();
    let report = h.run(&ReplayClient::new("partial", transcript)).unwrap();
    let ok: Vec<_> = report.records.iter().filter(|r| r.strict == Some(true)).collect();
    assert_eq!(ok.len(), 1);
    assert_eq!((ok[0].id.as_str(), ok[0].language), (c[0].id.as_str(), Language::De));
    assert!(report.records.iter().filter(|r| r.error.is_some()).all(|r| r.error.as_ref().unwrap().contains("no transcript entry")));
}

#[test]
fn scoring_toggles_and_single_language() {
    let cfg = EvalConfig {
        languages: vec![Language::En],
        scoring: Scoring { strict: false, functional: true },
        ..config(mock(0.0))
    };
    let h = Harness::new(cfg, corpus(6)).unwrap();
    let report = h.run(h.client().unwrap().as_ref()).unwrap();
    assert!(report.records.iter().all(|r| r.strict.is_none() && r.functional == Some(true)));
    let md = report.to_markdown();
    assert!(!md.contains("Strict match"));
    assert_eq!(md.matches("| n/a | 100.00 |").count(), 3);
    assert!(report.to_csv().contains("t1,en,2,,,2,100.00"));
}

#[test]
fn pass_at_k_block_with_samples() {
    let cfg = EvalConfig {
        samples: 3,
        pass_k: vec![1, 3],
        ..config(mock(0.5))
    };
    let h = Harness::new(cfg, corpus(12)).unwrap();
    let report = h.run(h.client().unwrap().as_ref()).unwrap();
    assert_eq!(report.records.len(), 72);
    assert_eq!(report.pass_at_k.len(), 12);
    for p in &report.pass_at_k {
        // The mock is deterministic: an instance passes all samples or none.
        let cell = report.cell(p.task, p.language).unwrap();
        let frac = cell.strict_matches.unwrap() as f64 / cell.n as f64;
        assert!((p.estimate - frac).abs() < 1e-12, "{p:?}");
        assert_eq!(p.c, cell.strict_matches.unwrap());
    }
    assert!(report.to_markdown().contains("## pass@k"));
}

#[test]
fn config_errors_surface() {
    let c = corpus(3);
    assert!(Harness::new(EvalConfig { shots: 5, ..config(mock(0.0)) }, c.clone())
        .unwrap()
        .run(&ReplayClient::new("r", Default::default()))
        .is_err());
    let bad_template = EvalConfig { template_id: "nope".into(), ..config(mock(0.0)) };
    assert!(Harness::new(bad_template, c.clone()).is_err());
    let mut broken = c;
    broken[0].expected_source = "MODULE".into();
    assert!(Harness::new(config(mock(0.0)), broken).is_err());
    assert!(run_eval(std::path::Path::new("/nonexistent/manifest.jsonl"), &config(mock(0.0)), &ReplayClient::new("r", Default::default())).is_err());
}

fn choose(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pass_at_k_matches_closed_form(n in 1usize..60, c_frac in 0.0f64..=1.0, k_frac in 0.0f64..=1.0) {
        let c = (c_frac * n as f64).floor() as usize;
        let k = 1 + (k_frac * (n - 1) as f64).floor() as usize;
        let got = pass_at_k(n, c, k).unwrap();
        let want = 1.0 - choose((n - c) as u64, k as u64) / choose(n as u64, k as u64);
        prop_assert!((got - want).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&got));
        prop_assert_eq!(pass_at_k(n, c, 1).unwrap(), c as f64 / n as f64);
    }

    #[test]
    fn mock_accuracy_is_exact(count in 3usize..60, rate in 0.0f64..=1.0) {
        let c = corpus(count);
        let h = Harness::new(EvalConfig { languages: vec![Language::De], shots: 0, ..config(mock(rate)) }, c.clone()).unwrap();
        let report = h.run(h.client().unwrap().as_ref()).unwrap();
        for kind in TaskKind::ALL {
            let n = c.iter().filter(|i| i.task.kind() == kind).count();
            if n == 0 {
                continue;
            }
            let wrong = (rate * n as f64).round() as usize;
            let cell = report.cell(kind, Language::De).unwrap();
            prop_assert_eq!(cell.strict_matches, Some(n - wrong));
        }
    }
}
