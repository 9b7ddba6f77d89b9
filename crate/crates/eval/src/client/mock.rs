use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use rapidbench_core::corpus::TaskInstance;
use rapidbench_core::syntax::{parse_module, print_module, ModuleAst, Statement};
use rapidbench_core::transforms::TaskKind;

use super::{ClientError, Completion, GenerationRequest, ModelClient};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    WrongSpeed,
    DroppedMove,
    Truncated,
}

impl Mutation {
    const ROTATION: [Mutation; 3] = [Mutation::WrongSpeed, Mutation::DroppedMove, Mutation::Truncated];
}

const SPEED_POOL: [&str; 4] = ["v5", "v10", "v20", "v30"];

/// Answers with the oracle output, except for exactly
/// `round(error_rate * n_task)` instances per task, picked by a seeded
/// shuffle of the ids and corrupted with mutations in round-robin order.
#[derive(Debug, Clone)]
pub struct OracleMock {
    seed: u64,
    error_rate: f64,
    responses: HashMap<String, String>,
    mutated: BTreeMap<String, Mutation>,
}

impl OracleMock {
    pub fn new(instances: &[TaskInstance], seed: u64, error_rate: f64) -> Result<Self, ClientError> {
        if !(0.0..=1.0).contains(&error_rate) {
            return Err(ClientError::Setup(format!("error_rate {error_rate} outside [0, 1]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mutated = BTreeMap::new();
        for kind in TaskKind::ALL {
            let mut ids: Vec<&str> = instances
                .iter()
                .filter(|i| i.task.kind() == kind)
                .map(|i| i.id.as_str())
                .collect();
            ids.sort_unstable();
            ids.shuffle(&mut rng);
            let take = (error_rate * ids.len() as f64).round() as usize;
            for (j, id) in ids.into_iter().take(take).enumerate() {
                mutated.insert(id.to_string(), Mutation::ROTATION[j % 3]);
            }
        }
        let responses = instances
            .iter()
            .map(|inst| {
                let code = match mutated.get(&inst.id) {
                    Some(&m) => corrupt(inst, m),
                    None => inst.expected_source.clone(),
                };
                (inst.id.clone(), format!("```rapid\n{}\n```\n", code.trim_end()))
            })
            .collect();
        Ok(Self {
            seed,
            error_rate,
            responses,
            mutated,
        })
    }

    /// Ids the mock answers wrongly, with the mutation used.
    pub fn mutated(&self) -> &BTreeMap<String, Mutation> {
        &self.mutated
    }
}

fn corrupt(inst: &TaskInstance, mutation: Mutation) -> String {
    let Ok(mut module) = parse_module(&inst.expected_source) else {
        return truncate(&inst.expected_source);
    };
    let moves = module
        .procedure(&inst.proc_name)
        .map_or(0, |p| p.move_count());
    let mutation = match mutation {
        Mutation::DroppedMove if moves < 3 => Mutation::WrongSpeed,
        m => m,
    };
    let mutation = match mutation {
        Mutation::WrongSpeed if moves == 0 => Mutation::Truncated,
        m => m,
    };
    match mutation {
        Mutation::WrongSpeed => {
            wrong_speed(&mut module, &inst.proc_name);
            print_module(&module)
        }
        Mutation::DroppedMove => {
            drop_middle_move(&mut module, &inst.proc_name, moves);
            print_module(&module)
        }
        Mutation::Truncated => truncate(&inst.expected_source),
    }
}

fn wrong_speed(module: &mut ModuleAst, proc: &str) {
    let proc = module.procedure_mut(proc).expect("procedure has moves");
    let mv = proc
        .statements
        .iter_mut()
        .find_map(Statement::as_move_mut)
        .expect("procedure has moves");
    let other = SPEED_POOL
        .iter()
        .find(|s| !s.eq_ignore_ascii_case(&mv.speed))
        .expect("pool has two distinct speeds");
    mv.speed = other.to_string();
}

fn drop_middle_move(module: &mut ModuleAst, proc: &str, moves: usize) {
    let proc = module.procedure_mut(proc).expect("procedure has moves");
    let pos = proc
        .statements
        .iter()
        .enumerate()
        .filter(|(_, s)| s.as_move().is_some())
        .nth(moves / 2)
        .map(|(i, _)| i)
        .expect("middle move exists");
    proc.statements.remove(pos);
}

fn truncate(source: &str) -> String {
    let half = source.chars().count() / 2;
    source.chars().take(half).collect()
}

impl ModelClient for OracleMock {
    fn identity(&self) -> String {
        format!("oracle-mock(seed={}, error_rate={})", self.seed, self.error_rate)
    }

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Completion, ClientError> {
        let text = self
            .responses
            .get(request.id)
            .ok_or_else(|| ClientError::UnknownInstance(request.id.to_string()))?;
        Ok(Completion {
            text: text.clone(),
            latency_s: 0.0,
        })
    }
}
