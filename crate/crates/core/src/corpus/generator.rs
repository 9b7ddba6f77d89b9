use std::f64::consts::FRAC_1_SQRT_2;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::syntax::{
    print_module, ModuleAst, MoveKind, MoveStmt, ProcAst, RobTarget, Statement, TargetDecl,
    TargetExpr, WaitStmt,
};
use crate::transforms::{
    apply_task, ArgField, ArgSelector, MoveSelector, ReverseMode, TaskKind, TaskParams,
};

use super::{instruction, CorpusError, GenConfig, Language, TaskInstance};

const S: f64 = FRAC_1_SQRT_2;

/// The 24 rotations of the cube as unit quaternions (scalar first), one
/// representative per rotation.
pub const AXIS_ALIGNED_QUATERNIONS: [[f64; 4]; 24] = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
    [S, S, 0.0, 0.0],
    [S, -S, 0.0, 0.0],
    [S, 0.0, S, 0.0],
    [S, 0.0, -S, 0.0],
    [S, 0.0, 0.0, S],
    [S, 0.0, 0.0, -S],
    [0.0, S, S, 0.0],
    [0.0, S, -S, 0.0],
    [0.0, S, 0.0, S],
    [0.0, S, 0.0, -S],
    [0.0, 0.0, S, S],
    [0.0, 0.0, S, -S],
    [0.5, 0.5, 0.5, 0.5],
    [0.5, 0.5, 0.5, -0.5],
    [0.5, 0.5, -0.5, 0.5],
    [0.5, 0.5, -0.5, -0.5],
    [0.5, -0.5, 0.5, 0.5],
    [0.5, -0.5, 0.5, -0.5],
    [0.5, -0.5, -0.5, 0.5],
    [0.5, -0.5, -0.5, -0.5],
];

const SPEEDS: &[&str] = &["v50", "v100", "v150", "v200", "v300", "v400", "v500", "v800", "v1000"];
const ZONES: &[&str] = &["z1", "z5", "z10", "z20", "z50", "fine"];
const WAITS: &[f64] = &[0.1, 0.5, 1.0, 2.0];
const ROUTINE_NAMES: &[&str] = &["main", "rPick", "rPlace", "rWeld", "rPath", "rGlue"];
const HOME_ROUTINE: &str = "rHome";

/// Generates `cfg.count` instances with oracle-computed expected outputs.
/// Task counts follow `cfg.task_mix` by largest-remainder apportionment.
pub fn generate_corpus(cfg: &GenConfig) -> Result<Vec<TaskInstance>, CorpusError> {
    cfg.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tasks = apportion(cfg);
    tasks.shuffle(&mut rng);
    let width = cfg.count.saturating_sub(1).to_string().len().max(5);
    tasks
        .into_iter()
        .enumerate()
        .map(|(i, kind)| {
            let id = format!("inst{i:0width$}");
            instance(&mut rng, cfg, id, i, kind)
        })
        .collect()
}

fn apportion(cfg: &GenConfig) -> Vec<TaskKind> {
    let total: f64 = cfg.task_mix.values().sum();
    let mut shares: Vec<(TaskKind, usize, f64)> = cfg
        .task_mix
        .iter()
        .map(|(k, w)| {
            let exact = cfg.count as f64 * w / total;
            (*k, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let assigned: usize = shares.iter().map(|s| s.1).sum();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|a, b| shares[*b].2.total_cmp(&shares[*a].2).then(a.cmp(b)));
    for idx in order.into_iter().take(cfg.count - assigned) {
        shares[idx].1 += 1;
    }
    shares
        .into_iter()
        .flat_map(|(k, n, _)| std::iter::repeat_n(k, n))
        .collect()
}

fn coord(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> f64 {
    let (lo, hi) = cfg.coord_range_mm;
    let v = (rng.gen_range(lo..=hi) * 10.0).round() / 10.0;
    // Rounding can step just outside the interval.
    let v = v.clamp(lo, hi);
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

fn robtarget(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> RobTarget {
    RobTarget {
        trans: [coord(rng, cfg), coord(rng, cfg), coord(rng, cfg)],
        orient: *AXIS_ALIGNED_QUATERNIONS.choose(rng).expect("non-empty"),
        conf: [
            rng.gen_range(-1..=1),
            rng.gen_range(-1..=1),
            rng.gen_range(-1..=1),
            rng.gen_range(0..=1),
        ],
        extax: RobTarget::at([0.0; 3]).extax,
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).expect("non-empty")
}

fn instance(
    rng: &mut ChaCha8Rng,
    cfg: &GenConfig,
    id: String,
    index: usize,
    task: TaskKind,
) -> Result<TaskInstance, CorpusError> {
    let n = rng.gen_range(cfg.moves_min..=cfg.moves_max);
    let circular_ok = !(task == TaskKind::T3 && cfg.reversal_mode == ReverseMode::Instruction);
    let proc_name = pick(rng, ROUTINE_NAMES).to_string();
    let wobj = rng.gen_bool(0.2).then(|| "wobj0".to_string());

    let mut declarations = Vec::new();
    let mut statements = Vec::new();
    let mut target_names = Vec::with_capacity(n);
    for i in 0..n {
        let name = format!("p{}", (i + 1) * 10);
        let via = if circular_ok && rng.gen_bool(cfg.movec_fraction) {
            let via_name = format!("c{}", (i + 1) * 10);
            declarations.push(TargetDecl {
                name: via_name.clone(),
                target: robtarget(rng, cfg),
            });
            Some(TargetExpr::named(via_name))
        } else {
            None
        };
        declarations.push(TargetDecl {
            name: name.clone(),
            target: robtarget(rng, cfg),
        });
        let kind = match via {
            Some(_) => MoveKind::Circular,
            None if rng.gen_bool(0.7) => MoveKind::Linear,
            None => MoveKind::Joint,
        };
        // The last move always stops. Reversal turns the first move (or its
        // corner) into the last one, so for T3 it stops as well.
        let stops = i + 1 == n || (i == 0 && task == TaskKind::T3);
        let zone = if stops { "fine" } else { pick(rng, ZONES) };
        statements.push(Statement::Move(MoveStmt {
            kind,
            via,
            target: TargetExpr::named(name.clone()),
            speed: pick(rng, SPEEDS).to_string(),
            zone: zone.to_string(),
            tool: "tool0".to_string(),
            wobj: wobj.clone(),
        }));
        if rng.gen_bool(0.1) {
            statements.push(Statement::Wait(WaitStmt {
                seconds: *WAITS.choose(rng).expect("non-empty"),
            }));
        }
        target_names.push(name);
    }

    let mut procedures = vec![ProcAst {
        name: proc_name.clone(),
        statements,
    }];
    if rng.gen_bool(0.3) {
        declarations.push(TargetDecl {
            name: "pHome".into(),
            target: robtarget(rng, cfg),
        });
        procedures.push(ProcAst {
            name: HOME_ROUTINE.into(),
            statements: vec![Statement::Move(MoveStmt::new(
                MoveKind::Joint,
                TargetExpr::named("pHome"),
                "v500",
                "fine",
                "tool0",
            ))],
        });
    }
    let module = ModuleAst {
        name: format!("Prog{index:05}"),
        declarations,
        procedures,
    };

    let params = task_params(rng, cfg, task, &target_names);
    let expected = apply_task(&module, &proc_name, &params).map_err(|source| CorpusError::Oracle {
        id: id.clone(),
        source,
    })?;
    Ok(TaskInstance {
        nl_instruction_de: instruction(&params, &proc_name, Language::De),
        nl_instruction_en: instruction(&params, &proc_name, Language::En),
        input_source: print_module(&module),
        expected_source: print_module(&expected),
        id,
        task: params,
        proc_name,
    })
}

fn task_params(
    rng: &mut ChaCha8Rng,
    cfg: &GenConfig,
    task: TaskKind,
    targets: &[String],
) -> TaskParams {
    let n = targets.len();
    match task {
        TaskKind::T1 => {
            // Zone edits never touch the final move so it keeps stopping at fine.
            let field = if n >= 2 && rng.gen_bool(0.5) {
                ArgField::Zone
            } else {
                ArgField::Speed
            };
            let last_editable = if field == ArgField::Zone { n - 1 } else { n };
            let selector = match rng.gen_range(0..3) {
                0 if field == ArgField::Speed => ArgSelector::All,
                1 | 0 => {
                    let lo = rng.gen_range(1..=last_editable);
                    ArgSelector::Range(lo, rng.gen_range(lo..=last_editable))
                }
                _ => ArgSelector::Target(targets[rng.gen_range(0..last_editable)].clone()),
            };
            let new_value = match field {
                ArgField::Zone => pick(rng, &ZONES[..ZONES.len() - 1]),
                _ => pick(rng, SPEEDS),
            };
            TaskParams::T1 {
                selector,
                field,
                new_value: new_value.to_string(),
            }
        }
        TaskKind::T2 => {
            let i = rng.gen_range(0..n);
            let selector = if rng.gen_bool(0.5) {
                MoveSelector::Index(i + 1)
            } else {
                MoveSelector::Target(targets[i].clone())
            };
            let [dx, dy, dz] = loop {
                let d: [i32; 3] = std::array::from_fn(|_| rng.gen_range(-100..=100));
                if d != [0; 3] {
                    break d.map(f64::from);
                }
            };
            TaskParams::T2 { selector, dx, dy, dz }
        }
        TaskKind::T3 => TaskParams::T3 {
            mode: cfg.reversal_mode,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformance::{strict_match, validate, RuleSet};
    use crate::syntax::parse_module;

    #[test]
    fn quaternions_are_unit_and_distinct_rotations() {
        for (i, q) in AXIS_ALIGNED_QUATERNIONS.iter().enumerate() {
            let norm: f64 = q.iter().map(|x| x * x).sum();
            assert!((norm - 1.0).abs() < 1e-12);
            for other in &AXIS_ALIGNED_QUATERNIONS[i + 1..] {
                // q and -q are the same rotation, so |<q, r>| < 1 for distinct ones.
                let dot: f64 = q.iter().zip(other).map(|(a, b)| a * b).sum();
                assert!(dot.abs() < 1.0 - 1e-9, "{q:?} {other:?}");
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let cfg = GenConfig { seed: 42, count: 10, ..GenConfig::default() };
        assert_eq!(generate_corpus(&cfg).unwrap(), generate_corpus(&cfg).unwrap());
        let other = GenConfig { seed: 43, ..cfg.clone() };
        assert_ne!(generate_corpus(&cfg).unwrap(), generate_corpus(&other).unwrap());
    }

    #[test]
    fn task_mix_filtering() {
        let cfg = GenConfig {
            count: 60,
            movec_fraction: 0.0,
            task_mix: [(TaskKind::T1, 0.0), (TaskKind::T2, 0.0), (TaskKind::T3, 1.0)].into(),
            ..GenConfig::default()
        };
        for inst in generate_corpus(&cfg).unwrap() {
            assert_eq!(inst.task, TaskParams::T3 { mode: ReverseMode::Instruction });
            assert!(!inst.input_source.contains("MoveC"));
        }
    }

    #[test]
    fn movec_only_where_permitted() {
        let cfg = GenConfig { count: 90, movec_fraction: 1.0, ..GenConfig::default() };
        let corpus = generate_corpus(&cfg).unwrap();
        for inst in &corpus {
            let has_movec = inst.input_source.contains("MoveC");
            assert_eq!(has_movec, inst.task.kind() != TaskKind::T3, "{}", inst.id);
        }
        let segment = GenConfig { reversal_mode: ReverseMode::Segment, ..cfg };
        assert!(generate_corpus(&segment).unwrap().iter().all(|i| i.input_source.contains("MoveC")));
    }

    #[test]
    fn apportionment_is_exact() {
        let cfg = GenConfig { count: 1500, ..GenConfig::default() };
        let corpus = generate_corpus(&cfg).unwrap();
        for kind in TaskKind::ALL {
            assert_eq!(corpus.iter().filter(|i| i.task.kind() == kind).count(), 500);
        }
        let skewed = GenConfig {
            count: 10,
            task_mix: [(TaskKind::T1, 1.0), (TaskKind::T2, 1.0), (TaskKind::T3, 1.0)].into(),
            ..GenConfig::default()
        };
        let counts: Vec<usize> = TaskKind::ALL
            .iter()
            .map(|k| apportion(&skewed).iter().filter(|t| *t == k).count())
            .collect();
        assert_eq!(counts, vec![4, 3, 3]);
    }

    #[test]
    fn instances_are_self_consistent_and_valid() {
        let rules = RuleSet::default();
        for mode in [ReverseMode::Instruction, ReverseMode::Segment] {
            let cfg = GenConfig { count: 300, reversal_mode: mode, ..GenConfig::default() };
            for inst in generate_corpus(&cfg).unwrap() {
                let expected = parse_module(&inst.expected_source).unwrap();
                assert!(strict_match(&inst.expected_source, &expected));
                let input = parse_module(&inst.input_source).unwrap();
                let recomputed = apply_task(&input, &inst.proc_name, &inst.task).unwrap();
                assert_eq!(print_module(&recomputed), inst.expected_source);
                for src in [&inst.input_source, &inst.expected_source] {
                    let report = validate(src, &rules);
                    assert!(report.pass, "{} {:?}\n{src}", inst.id, report.violations);
                }
            }
        }
    }

    #[test]
    fn coordinates_stay_in_range() {
        let cfg = GenConfig { count: 50, coord_range_mm: (-5.0, 5.0), ..GenConfig::default() };
        for inst in generate_corpus(&cfg).unwrap() {
            for decl in parse_module(&inst.input_source).unwrap().declarations {
                assert!(decl.target.trans.iter().all(|c| (-5.0..=5.0).contains(c)));
            }
        }
    }

    #[test]
    fn rejects_invalid_config() {
        let cfg = GenConfig { moves_min: 4, moves_max: 2, ..GenConfig::default() };
        assert!(matches!(generate_corpus(&cfg), Err(CorpusError::Config(_))));
    }
}
