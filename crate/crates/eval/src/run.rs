use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use rapidbench_core::conformance::{functional_match_with, strict_match, validate, RuleSet};
use rapidbench_core::corpus::{load_manifest, ExampleIndex, Language, TaskInstance};
use rapidbench_core::motion::{MotionTables, Pose};
use rapidbench_core::syntax::{parse_module, ModuleAst};

use crate::client::{GenerationRequest, HttpClient, ModelClient, OracleMock, ReplayClient};
use crate::config::{EvalConfig, ModelConfig};
use crate::extract::extract_code;
use crate::passk::pass_at_k;
use crate::prompt::{build_prompt, select_examples, PromptSpec, TemplateCatalog};
use crate::report::{summarize, EvalRecord, EvalReport, PassAtKSummary, ReportMeta};
use crate::EvalError;

/// A loaded corpus plus everything needed to score it.
#[derive(Debug)]
pub struct Harness {
    config: EvalConfig,
    instances: Vec<TaskInstance>,
    expected: Vec<ModuleAst>,
    index: ExampleIndex,
    templates: TemplateCatalog,
    rules: RuleSet,
    tables: MotionTables,
}

impl Harness {
    /// Loads the corpus, templates and rules named by `config`.
    pub fn from_config(config: EvalConfig) -> Result<Self, EvalError> {
        let instances = load_manifest(&config.corpus)?;
        Self::new(config, instances)
    }

    pub fn new(config: EvalConfig, mut instances: Vec<TaskInstance>) -> Result<Self, EvalError> {
        config.check()?;
        instances.sort_by(|a, b| a.id.cmp(&b.id));
        let expected = instances
            .iter()
            .map(|i| {
                parse_module(&i.expected_source)
                    .map_err(|e| EvalError::Config(format!("expected output of {} does not parse: {e}", i.id)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let templates = match &config.templates {
            Some(p) => TemplateCatalog::load_with_defaults(p)?,
            None => TemplateCatalog::default(),
        };
        for &lang in &config.languages {
            templates.get(&config.template_id, lang)?;
        }
        let rules = match &config.rules {
            Some(p) => RuleSet::load(p)?,
            None => RuleSet::default(),
        };
        let index = ExampleIndex::build(&instances);
        Ok(Self {
            config,
            instances,
            expected,
            index,
            templates,
            rules,
            tables: MotionTables::default(),
        })
    }

    pub fn config(&self) -> &EvalConfig {
        &self.config
    }

    pub fn instances(&self) -> &[TaskInstance] {
        &self.instances
    }

    /// Builds the client described by `config.model`.
    pub fn client(&self) -> Result<Box<dyn ModelClient>, EvalError> {
        Ok(match &self.config.model {
            ModelConfig::Mock { seed, error_rate } => Box::new(OracleMock::new(
                &self.instances,
                seed.unwrap_or(self.config.seed),
                *error_rate,
            )?),
            ModelConfig::Replay { transcript } => Box::new(ReplayClient::load(transcript)?),
            ModelConfig::Http(settings) => Box::new(HttpClient::new(settings.clone())?),
        })
    }

    fn spec(&self, language: Language) -> PromptSpec {
        PromptSpec {
            language,
            shots: self.config.shots,
            template_id: self.config.template_id.clone(),
            retrieval: self.config.retrieval,
        }
    }

    /// Prompt for one instance; examples are drawn from the rest of the corpus.
    pub fn prompt(&self, instance: &TaskInstance, language: Language) -> Result<String, EvalError> {
        let examples = select_examples(instance, &self.instances, &self.index, self.config.shots, self.config.retrieval)?;
        Ok(build_prompt(instance, &self.spec(language), &examples, &self.templates)?)
    }

    fn score(&self, i: usize, language: Language, sample: usize, prompt: &str, client: &dyn ModelClient) -> EvalRecord {
        let inst = &self.instances[i];
        let request = GenerationRequest {
            id: &inst.id,
            language,
            sample,
            prompt,
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        };
        let (response, latency_s, error) = match client.generate(&request) {
            Ok(c) => (c.text, c.latency_s, None),
            Err(e) => (String::new(), 0.0, Some(e.to_string())),
        };
        let code = if error.is_some() { String::new() } else { extract_code(&response) };
        let scoring = self.config.scoring;
        let ok = error.is_none();
        let strict = scoring.strict.then(|| ok && strict_match(&code, &self.expected[i]));
        let functional = scoring.functional.then(|| {
            ok && functional_match_with(
                &code,
                &self.expected[i],
                &inst.proc_name,
                Pose::at(self.config.start),
                &self.tables,
            )
        });
        EvalRecord {
            id: inst.id.clone(),
            task: inst.task.kind(),
            language,
            sample,
            validation: validate(&code, &self.rules),
            response,
            code,
            strict,
            functional,
            latency_s,
            error,
        }
    }

    /// Queries `client` for every instance, language and sample and scores
    /// the answers. Transport failures become failed records.
    pub fn run(&self, client: &dyn ModelClient) -> Result<EvalReport, EvalError> {
        let cfg = &self.config;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.parallelism)
            .build()
            .map_err(|e| EvalError::Config(e.to_string()))?;
        let prompts: Vec<Vec<(Language, String)>> = pool.install(|| {
            self.instances
                .par_iter()
                .map(|inst| {
                    let examples = select_examples(inst, &self.instances, &self.index, cfg.shots, cfg.retrieval)?;
                    cfg.languages
                        .iter()
                        .map(|&lang| Ok((lang, build_prompt(inst, &self.spec(lang), &examples, &self.templates)?)))
                        .collect::<Result<Vec<_>, EvalError>>()
                })
                .collect::<Result<_, _>>()
        })?;
        let jobs: Vec<(usize, Language, usize, &str)> = prompts
            .iter()
            .enumerate()
            .flat_map(|(i, per_lang)| {
                per_lang
                    .iter()
                    .flat_map(move |(lang, p)| (0..cfg.samples).map(move |s| (i, *lang, s, p.as_str())))
            })
            .collect();
        let mut records: Vec<EvalRecord> = pool.install(|| {
            jobs.par_iter()
                .map(|&(i, lang, s, p)| self.score(i, lang, s, p, client))
                .collect()
        });
        records.sort_by(|a, b| (&a.id, a.language, a.sample).cmp(&(&b.id, b.language, b.sample)));
        Ok(EvalReport {
            meta: ReportMeta {
                model: client.identity(),
                seed: cfg.seed,
                config_sha256: cfg.sha256(),
                languages: cfg.languages.clone(),
                shots: cfg.shots,
                retrieval: cfg.retrieval.as_str().into(),
                template_id: cfg.template_id.clone(),
                temperature: cfg.temperature,
                samples: cfg.samples,
            },
            cells: summarize(&records),
            pass_at_k: self.pass_at_k(&records)?,
            records,
        })
    }

    fn pass_at_k(&self, records: &[EvalRecord]) -> Result<Vec<PassAtKSummary>, EvalError> {
        let cfg = &self.config;
        if cfg.pass_k.is_empty() {
            return Ok(Vec::new());
        }
        let mut passes: BTreeMap<_, BTreeMap<&str, usize>> = BTreeMap::new();
        for r in records {
            let ok = r.strict.or(r.functional).unwrap_or(false);
            *passes.entry((r.task, r.language)).or_default().entry(r.id.as_str()).or_default() += usize::from(ok);
        }
        let mut out = Vec::new();
        for ((task, language), per_instance) in passes {
            for &k in &cfg.pass_k {
                let mut sum = 0.0;
                for &c in per_instance.values() {
                    sum += pass_at_k(cfg.samples, c, k)?;
                }
                out.push(PassAtKSummary {
                    task,
                    language,
                    n: cfg.samples,
                    c: per_instance.values().sum(),
                    k,
                    instances: per_instance.len(),
                    estimate: sum / per_instance.len() as f64,
                });
            }
        }
        Ok(out)
    }
}

/// Evaluates the corpus at `manifest` with `config` against `client`.
pub fn run_eval(manifest: &Path, config: &EvalConfig, client: &dyn ModelClient) -> Result<EvalReport, EvalError> {
    let config = EvalConfig {
        corpus: manifest.to_path_buf(),
        ..config.clone()
    };
    Harness::from_config(config)?.run(client)
}
