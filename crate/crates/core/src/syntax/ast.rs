//! Abstract syntax for the supported RAPID subset.
//!
//! Identifier case is preserved exactly as written. Comparison helpers that
//! need case-insensitive semantics live in [`crate::syntax::canon`].

use serde::{Deserialize, Serialize};

/// Value used in `extax` slots for an unused external axis.
pub const EXTAX_UNUSED: f64 = 9e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleAst {
    pub name: String,
    pub declarations: Vec<TargetDecl>,
    pub procedures: Vec<ProcAst>,
}

impl ModuleAst {
    pub fn procedure(&self, name: &str) -> Option<&ProcAst> {
        self.procedures
            .iter()
            .find(|p| p.name.eq_ignore_ascii_case(name))
    }

    pub fn procedure_mut(&mut self, name: &str) -> Option<&mut ProcAst> {
        self.procedures
            .iter_mut()
            .find(|p| p.name.eq_ignore_ascii_case(name))
    }

    pub fn declaration(&self, name: &str) -> Option<&TargetDecl> {
        self.declarations
            .iter()
            .find(|d| d.name.eq_ignore_ascii_case(name))
    }
}

/// `CONST robtarget <name> := [...];`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDecl {
    pub name: String,
    pub target: RobTarget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobTarget {
    /// Position in millimetres.
    pub trans: [f64; 3],
    /// Orientation quaternion `[q1, q2, q3, q4]`, scalar first.
    pub orient: [f64; 4],
    pub conf: [i32; 4],
    pub extax: [f64; 6],
}

impl RobTarget {
    pub fn at(trans: [f64; 3]) -> Self {
        Self {
            trans,
            orient: [1.0, 0.0, 0.0, 0.0],
            conf: [0, 0, 0, 0],
            extax: [EXTAX_UNUSED; 6],
        }
    }

    pub fn orient_norm(&self) -> f64 {
        self.orient.iter().map(|q| q * q).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcAst {
    pub name: String,
    pub statements: Vec<Statement>,
}

impl ProcAst {
    pub fn moves(&self) -> impl Iterator<Item = &MoveStmt> {
        self.statements.iter().filter_map(Statement::as_move)
    }

    pub fn move_count(&self) -> usize {
        self.moves().count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stmt", rename_all = "snake_case")]
pub enum Statement {
    Move(MoveStmt),
    Wait(WaitStmt),
}

impl Statement {
    pub fn as_move(&self) -> Option<&MoveStmt> {
        match self {
            Statement::Move(m) => Some(m),
            Statement::Wait(_) => None,
        }
    }

    pub fn as_move_mut(&mut self) -> Option<&mut MoveStmt> {
        match self {
            Statement::Move(m) => Some(m),
            Statement::Wait(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    Linear,
    Joint,
    Circular,
}

impl MoveKind {
    pub fn instruction(self) -> &'static str {
        match self {
            MoveKind::Linear => "MoveL",
            MoveKind::Joint => "MoveJ",
            MoveKind::Circular => "MoveC",
        }
    }
}

/// A `MoveL`, `MoveJ` or `MoveC` instruction. `via` is present iff the kind
/// is [`MoveKind::Circular`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveStmt {
    pub kind: MoveKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub via: Option<TargetExpr>,
    pub target: TargetExpr,
    pub speed: String,
    pub zone: String,
    pub tool: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wobj: Option<String>,
}

impl MoveStmt {
    pub fn new(kind: MoveKind, target: TargetExpr, speed: &str, zone: &str, tool: &str) -> Self {
        Self {
            kind,
            via: None,
            target,
            speed: speed.to_string(),
            zone: zone.to_string(),
            tool: tool.to_string(),
            wobj: None,
        }
    }

    pub fn circular(via: TargetExpr, target: TargetExpr, speed: &str, zone: &str, tool: &str) -> Self {
        Self {
            via: Some(via),
            ..Self::new(MoveKind::Circular, target, speed, zone, tool)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaitStmt {
    pub seconds: f64,
}

/// Either a bare target name or `Offs(name, dx, dy, dz)`. Offsets never nest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "expr", rename_all = "snake_case")]
pub enum TargetExpr {
    Named { name: String },
    Offset { name: String, dx: f64, dy: f64, dz: f64 },
}

impl TargetExpr {
    pub fn named(name: impl Into<String>) -> Self {
        TargetExpr::Named { name: name.into() }
    }

    pub fn offset(name: impl Into<String>, dx: f64, dy: f64, dz: f64) -> Self {
        TargetExpr::Offset {
            name: name.into(),
            dx,
            dy,
            dz,
        }
    }

    /// The underlying declared target name.
    pub fn base_name(&self) -> &str {
        match self {
            TargetExpr::Named { name } | TargetExpr::Offset { name, .. } => name,
        }
    }

    pub fn displacement(&self) -> [f64; 3] {
        match self {
            TargetExpr::Named { .. } => [0.0; 3],
            TargetExpr::Offset { dx, dy, dz, .. } => [*dx, *dy, *dz],
        }
    }
}
