use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rapidbench_core::conformance::{validate, RuleSet};
use rapidbench_core::corpus::{generate_corpus, write_corpus, GenConfig};
use rapidbench_core::motion::{interpret, MotionTables, Pose};
use rapidbench_core::syntax::{parse_module, print_module, ModuleAst};
use rapidbench_core::transforms::{apply_task, ReverseMode, TaskKind, TaskParams};
use rapidbench_eval::{EvalConfig, EvalReport, Harness};

#[derive(Parser)]
#[command(name = "rapidbench", version, about = "RAPID robot-program toolkit and LLM evaluation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the AST of a module as JSON.
    Parse {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Pretty-print a module.
    Fmt {
        #[arg(long = "in")]
        input: PathBuf,
        /// Rewrite the file in place instead of printing.
        #[arg(long)]
        write: bool,
    },
    /// Apply one of the three task transformations.
    Transform {
        #[arg(long, value_enum)]
        task: Task,
        /// Task parameters as JSON, with or without the "task" field.
        #[arg(long, default_value = "{}")]
        params: String,
        #[arg(long)]
        proc: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a module against a rule set; exits 1 on violations.
    Validate {
        /// TOML rule set; built-in defaults when omitted.
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
    /// Run a procedure on the motion interpreter and print one JSON line per segment.
    Trace {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        proc: String,
        /// Start position in mm as x,y,z.
        #[arg(long, default_value = "0,0,0")]
        start: String,
    },
    /// Generate a task corpus.
    Gen {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        moves_min: Option<usize>,
        #[arg(long)]
        moves_max: Option<usize>,
        #[arg(long)]
        movec_fraction: Option<f64>,
        /// Task weights such as "t1=1,t2=1,t3=2".
        #[arg(long)]
        task_mix: Option<String>,
        #[arg(long, value_enum)]
        reversal_mode: Option<Mode>,
    },
    /// Evaluate a model on a corpus and write the JSON report.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the responses as a replay transcript.
        #[arg(long)]
        save_transcript: Option<PathBuf>,
        /// Exit 1 if any cell's accuracy (strict, else functional) is below this percentage.
        #[arg(long)]
        min_accuracy: Option<f64>,
    },
    /// Render a JSON report as a Markdown or CSV summary.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = SummaryFormat::Md)]
        format: SummaryFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    T1,
    T2,
    T3,
}

impl From<Task> for TaskKind {
    fn from(t: Task) -> Self {
        match t {
            Task::T1 => TaskKind::T1,
            Task::T2 => TaskKind::T2,
            Task::T3 => TaskKind::T3,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Instruction,
    Segment,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum SummaryFormat {
    Md,
    Csv,
}

/// Exit status 1 for domain failures, 2 for usage and configuration errors.
#[derive(Debug)]
enum Failure {
    Domain(String),
    Usage(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Domain(m) | Failure::Usage(m) => m,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_module(path: &Path) -> Result<ModuleAst, Failure> {
    parse_module(&read(path)?).map_err(|e| {
        let p = e.position();
        Failure::Domain(format!("{}:{}:{}: {e}", path.display(), p.line, p.column))
    })
}

fn parse_start(text: &str) -> Result<Pose, Failure> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("--start expects x,y,z, got {text:?}")))?;
    match parts.as_slice() {
        &[x, y, z] if parts.iter().all(|v| v.is_finite()) => Ok(Pose::at([x, y, z])),
        _ => Err(usage(format!("--start expects x,y,z, got {text:?}"))),
    }
}

/// Accepts params with or without a "task" field; a present one must agree with `--task`.
fn task_params(task: TaskKind, json: &str) -> Result<TaskParams, Failure> {
    let mut value: serde_json::Value =
        serde_json::from_str(json).map_err(|e| usage(format!("--params: {e}")))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| usage("--params must be a JSON object"))?;
    match obj.get("task").and_then(|t| t.as_str()) {
        Some(t) if TaskKind::parse(t) != Some(task) => {
            return Err(usage(format!("--params says task {t:?} but --task is {}", task.as_str())))
        }
        _ => {
            obj.insert("task".into(), task.as_str().into());
        }
    }
    if task == TaskKind::T3 && !obj.contains_key("mode") {
        obj.insert("mode".into(), ReverseMode::Instruction.as_str().into());
    }
    serde_json::from_value(value).map_err(|e| usage(format!("--params: {e}")))
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Parse { input } => {
            let m = load_module(&input)?;
            println!("{}", serde_json::to_string_pretty(&m).expect("AST serializes"));
        }
        Command::Fmt { input, write: in_place } => {
            let text = print_module(&load_module(&input)?);
            if in_place {
                write(&input, &text)?;
            } else {
                print!("{text}");
            }
        }
        Command::Transform {
            task,
            params,
            proc,
            input,
            out,
        } => {
            let params = task_params(task.into(), &params)?;
            let m = load_module(&input)?;
            let result = apply_task(&m, &proc, &params).map_err(|e| Failure::Domain(e.to_string()))?;
            write(&out, &print_module(&result))?;
        }
        Command::Validate { rules, input, format } => {
            let rules = match rules {
                Some(p) => RuleSet::load(&p).map_err(usage)?,
                None => RuleSet::default(),
            };
            let report = validate(&read(&input)?, &rules);
            match format {
                ReportFormat::Json => println!("{}", serde_json::to_string_pretty(&report).expect("report serializes")),
                ReportFormat::Text => print!("{}", report.to_text()),
            }
            if !report.pass {
                return Err(Failure::Domain(format!("{} violation(s)", report.violations.len())));
            }
        }
        Command::Trace { input, proc, start } => {
            let start = parse_start(&start)?;
            let m = load_module(&input)?;
            let trace = interpret(&m, &proc, start, &MotionTables::default()).map_err(|e| Failure::Domain(e.to_string()))?;
            print!("{}", trace.to_jsonl());
        }
        Command::Gen {
            seed,
            count,
            out,
            moves_min,
            moves_max,
            movec_fraction,
            task_mix,
            reversal_mode,
        } => {
            let defaults = GenConfig::default();
            let cfg = GenConfig {
                seed,
                count,
                moves_min: moves_min.unwrap_or(defaults.moves_min),
                moves_max: moves_max.unwrap_or(defaults.moves_max),
                movec_fraction: movec_fraction.unwrap_or(defaults.movec_fraction),
                task_mix: match task_mix {
                    Some(t) => GenConfig::parse_task_mix(&t).map_err(usage)?,
                    None => defaults.task_mix.clone(),
                },
                reversal_mode: match reversal_mode {
                    Some(Mode::Instruction) => ReverseMode::Instruction,
                    Some(Mode::Segment) => ReverseMode::Segment,
                    None => defaults.reversal_mode,
                },
                ..defaults
            };
            let corpus = generate_corpus(&cfg).map_err(usage)?;
            let manifest = write_corpus(&out, &corpus).map_err(usage)?;
            println!("{}", manifest.display());
        }
        Command::Eval {
            config,
            out,
            save_transcript,
            min_accuracy,
        } => {
            let cfg = EvalConfig::load(&config).map_err(usage)?;
            let harness = Harness::from_config(cfg).map_err(usage)?;
            let client = harness.client().map_err(usage)?;
            let report = harness.run(client.as_ref()).map_err(usage)?;
            write(&out, &report.to_json())?;
            if let Some(path) = save_transcript {
                write(&path, &serde_json::to_string_pretty(&report.transcript()).expect("transcript serializes"))?;
            }
            eprint!("{}", report.to_markdown());
            if let Some(min) = min_accuracy {
                let below: Vec<String> = report
                    .cells
                    .iter()
                    .filter_map(|c| {
                        let acc = c.strict_accuracy.or(c.functional_accuracy)?;
                        (acc < min).then(|| format!("{}/{}={acc:.2}", c.task.as_str(), c.language.code()))
                    })
                    .collect();
                if !below.is_empty() {
                    return Err(Failure::Domain(format!("accuracy below {min}: {}", below.join(", "))));
                }
            }
        }
        Command::Report { input, format } => {
            let report = EvalReport::from_json(&read(&input)?).map_err(|e| usage(format!("{}: {e}", input.display())))?;
            match format {
                SummaryFormat::Md => print!("{}", report.to_markdown()),
                SummaryFormat::Csv => print!("{}", report.to_csv()),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("rapidbench: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
