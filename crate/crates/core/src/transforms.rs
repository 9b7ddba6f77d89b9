//! Reference implementations of the three editing tasks. Their output is the
//! ground truth that model answers are scored against.
//!
//! Instruction indices are 1-based and count only move instructions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{ModuleAst, MoveKind, MoveStmt, ProcAst, Statement, TargetExpr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    T1,
    T2,
    T3,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::T1, TaskKind::T2, TaskKind::T3];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::T1 => "t1",
            TaskKind::T2 => "t2",
            TaskKind::T3 => "t3",
        }
    }

    pub fn parse(s: &str) -> Option<TaskKind> {
        Self::ALL.into_iter().find(|k| k.as_str().eq_ignore_ascii_case(s))
    }
}

/// Which move instructions a T1 edit applies to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArgSelector {
    #[serde(rename = "all")]
    All,
    /// Inclusive 1-based range.
    #[serde(rename = "range")]
    Range(usize, usize),
    #[serde(rename = "target")]
    Target(String),
}

/// Which single move instruction a T2 edit applies to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveSelector {
    #[serde(rename = "index")]
    Index(usize),
    #[serde(rename = "target")]
    Target(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArgField {
    Speed,
    Zone,
    Tool,
}

impl ArgField {
    pub fn as_str(self) -> &'static str {
        match self {
            ArgField::Speed => "speed",
            ArgField::Zone => "zone",
            ArgField::Tool => "tool",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReverseMode {
    /// Reverse the instruction list as written. Waits travel with the move
    /// before them; waits ahead of the first move end up last, so applying
    /// this twice is the identity only for routines that start with a move.
    Instruction,
    /// Drive the path backwards from its final point, re-associating speed,
    /// kind and via point with the traversed segment and zones with corners.
    Segment,
}

impl ReverseMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ReverseMode::Instruction => "instruction",
            ReverseMode::Segment => "segment",
        }
    }
}

/// Serialized as `{"task": "t1" | "t2" | "t3", ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum TaskParams {
    T1 {
        selector: ArgSelector,
        field: ArgField,
        new_value: String,
    },
    T2 {
        selector: MoveSelector,
        dx: f64,
        dy: f64,
        dz: f64,
    },
    T3 {
        mode: ReverseMode,
    },
}

impl TaskParams {
    pub fn kind(&self) -> TaskKind {
        match self {
            TaskParams::T1 { .. } => TaskKind::T1,
            TaskParams::T2 { .. } => TaskKind::T2,
            TaskParams::T3 { .. } => TaskKind::T3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("procedure {0} not found")]
    ProcNotFound(String),
    #[error("selector matched no move instruction")]
    SelectorMiss,
    #[error("target {0} is used by more than one move instruction")]
    AmbiguousSelector(String),
    #[error("instruction-mode reversal is undefined for MoveC")]
    CircularInInstructionMode,
    #[error("invalid task parameters: {0}")]
    InvalidParams(String),
}

/// Applies `params` to procedure `proc_name`, leaving everything else untouched.
pub fn apply_task(
    module: &ModuleAst,
    proc_name: &str,
    params: &TaskParams,
) -> Result<ModuleAst, TransformError> {
    let mut out = module.clone();
    let proc = out
        .procedure_mut(proc_name)
        .ok_or_else(|| TransformError::ProcNotFound(proc_name.to_string()))?;
    match params {
        TaskParams::T1 {
            selector,
            field,
            new_value,
        } => modify_arguments(proc, selector, *field, new_value)?,
        TaskParams::T2 { selector, dx, dy, dz } => add_offset(proc, selector, [*dx, *dy, *dz])?,
        TaskParams::T3 {
            mode: ReverseMode::Instruction,
        } => reverse_instructions(proc)?,
        TaskParams::T3 {
            mode: ReverseMode::Segment,
        } => reverse_segments(proc),
    }
    Ok(out)
}

fn modify_arguments(
    proc: &mut ProcAst,
    selector: &ArgSelector,
    field: ArgField,
    new_value: &str,
) -> Result<(), TransformError> {
    if new_value.trim().is_empty() {
        return Err(TransformError::InvalidParams("new_value is empty".into()));
    }
    if let ArgSelector::Range(lo, hi) = selector {
        if *lo == 0 || lo > hi {
            return Err(TransformError::InvalidParams(format!(
                "range {lo}..{hi} is not a 1-based inclusive range"
            )));
        }
    }
    let mut hits = 0;
    for (i, mv) in proc
        .statements
        .iter_mut()
        .filter_map(Statement::as_move_mut)
        .enumerate()
    {
        let index = i + 1;
        let selected = match selector {
            ArgSelector::All => true,
            ArgSelector::Range(lo, hi) => (*lo..=*hi).contains(&index),
            ArgSelector::Target(name) => mv.target.base_name().eq_ignore_ascii_case(name),
        };
        if selected {
            hits += 1;
            let slot = match field {
                ArgField::Speed => &mut mv.speed,
                ArgField::Zone => &mut mv.zone,
                ArgField::Tool => &mut mv.tool,
            };
            *slot = new_value.to_string();
        }
    }
    if hits == 0 {
        return Err(TransformError::SelectorMiss);
    }
    Ok(())
}

fn add_offset(
    proc: &mut ProcAst,
    selector: &MoveSelector,
    delta: [f64; 3],
) -> Result<(), TransformError> {
    let mut moves: Vec<&mut MoveStmt> = proc
        .statements
        .iter_mut()
        .filter_map(Statement::as_move_mut)
        .collect();
    let mv = match selector {
        MoveSelector::Index(i) => {
            if *i == 0 {
                return Err(TransformError::InvalidParams("instruction index is 1-based".into()));
            }
            moves.get_mut(i - 1).ok_or(TransformError::SelectorMiss)?
        }
        MoveSelector::Target(name) => {
            let mut matching = moves
                .iter_mut()
                .filter(|m| m.target.base_name().eq_ignore_ascii_case(name));
            let first = matching.next().ok_or(TransformError::SelectorMiss)?;
            if matching.next().is_some() {
                return Err(TransformError::AmbiguousSelector(name.clone()));
            }
            first
        }
    };
    mv.target = match &mv.target {
        TargetExpr::Named { name } => TargetExpr::offset(name.clone(), delta[0], delta[1], delta[2]),
        TargetExpr::Offset { name, dx, dy, dz } => {
            TargetExpr::offset(name.clone(), dx + delta[0], dy + delta[1], dz + delta[2])
        }
    };
    Ok(())
}

/// Moves with the wait statements that follow them, plus any waits that
/// precede the first move.
fn group_by_move(statements: Vec<Statement>) -> (Vec<Statement>, Vec<(MoveStmt, Vec<Statement>)>) {
    let mut leading = Vec::new();
    let mut groups: Vec<(MoveStmt, Vec<Statement>)> = Vec::new();
    for stmt in statements {
        match stmt {
            Statement::Move(mv) => groups.push((mv, Vec::new())),
            wait @ Statement::Wait(_) => match groups.last_mut() {
                Some((_, waits)) => waits.push(wait),
                None => leading.push(wait),
            },
        }
    }
    (leading, groups)
}

fn reverse_instructions(proc: &mut ProcAst) -> Result<(), TransformError> {
    if proc.moves().any(|m| m.kind == MoveKind::Circular) {
        return Err(TransformError::CircularInInstructionMode);
    }
    let (leading, groups) = group_by_move(std::mem::take(&mut proc.statements));
    let mut out = Vec::with_capacity(leading.len() + groups.len());
    for (mv, waits) in groups.into_iter().rev() {
        out.push(Statement::Move(mv));
        out.extend(waits);
    }
    out.extend(leading);
    proc.statements = out;
    Ok(())
}

// For moves m_1..m_n, output statement j (1..n-1) drives to p_{n-j} using the
// kind, via, speed, tool and work object of m_{n-j+1} and the zone of m_{n-j}.
// Waits stay at the point they were issued at: waits after m_i follow the
// statement arriving at p_i, waits after m_n come first, and waits before m_1
// go last.
fn reverse_segments(proc: &mut ProcAst) {
    let (leading, groups) = group_by_move(std::mem::take(&mut proc.statements));
    let n = groups.len();
    let mut out = Vec::new();
    if let Some((_, final_waits)) = groups.last() {
        out.extend(final_waits.iter().cloned());
    }
    for j in 1..n {
        let (arrive, waits) = &groups[n - j - 1];
        let (traversed, _) = &groups[n - j];
        out.push(Statement::Move(MoveStmt {
            kind: traversed.kind,
            via: traversed.via.clone(),
            target: arrive.target.clone(),
            speed: traversed.speed.clone(),
            zone: arrive.zone.clone(),
            tool: traversed.tool.clone(),
            wobj: traversed.wobj.clone(),
        }));
        out.extend(waits.iter().cloned());
    }
    out.extend(leading);
    proc.statements = out;
}
