//! Configurable coding-standard validator and the two match scorers used for
//! accuracy: strict (canonical AST equality) and functional (trace equality).
//!
//! | rule | checks |
//! |------|--------|
//! | R1 | source parses (on failure nothing else is reported) |
//! | R2 | every referenced target is declared |
//! | R3 | speed identifiers are in `allowed_speeds` |
//! | R4 | zone identifiers are in `allowed_zones`, tools in `allowed_tools` |
//! | R5 | the last move of every procedure uses `fine` |
//! | R6 | procedure names match `proc_name_pattern` |
//! | R7 | at most `max_moves_per_proc` moves per procedure |

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motion::{
    interpret, traces_equal, MotionTables, Pose, DEFAULT_TRACE_TOL_MM, STANDARD_SPEEDS,
    STANDARD_ZONES,
};
use crate::syntax::{ast_equal, parse_module, ModuleAst, DEFAULT_REL_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleId {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Error)]
pub enum RuleSetError {
    #[error("cannot read rule set: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed rule set: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid rule set: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleSet {
    pub allowed_speeds: BTreeSet<String>,
    pub allowed_zones: BTreeSet<String>,
    pub allowed_tools: BTreeSet<String>,
    pub require_final_fine: bool,
    pub proc_name_pattern: String,
    pub max_moves_per_proc: usize,
    pub require_declared_targets: bool,
}

impl Default for RuleSet {
    fn default() -> Self {
        let mut allowed_speeds: BTreeSet<String> =
            STANDARD_SPEEDS.iter().map(|v| format!("v{v}")).collect();
        allowed_speeds.insert("vmax".into());
        let mut allowed_zones: BTreeSet<String> =
            STANDARD_ZONES.iter().map(|z| format!("z{z}")).collect();
        allowed_zones.insert("fine".into());
        Self {
            allowed_speeds,
            allowed_zones,
            allowed_tools: BTreeSet::from(["tool0".to_string()]),
            require_final_fine: true,
            proc_name_pattern: "^[A-Za-z][A-Za-z0-9_]{0,31}$".into(),
            max_moves_per_proc: 64,
            require_declared_targets: true,
        }
    }
}

impl RuleSet {
    /// Parses a TOML rule file. Missing keys keep their default value.
    pub fn from_toml(text: &str) -> Result<Self, RuleSetError> {
        let rules: RuleSet = toml::from_str(text)?;
        rules.check()?;
        Ok(rules)
    }

    pub fn load(path: &Path) -> Result<Self, RuleSetError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("rule set serializes")
    }

    pub fn check(&self) -> Result<(), RuleSetError> {
        for (name, set) in [
            ("allowed_speeds", &self.allowed_speeds),
            ("allowed_zones", &self.allowed_zones),
            ("allowed_tools", &self.allowed_tools),
        ] {
            if set.is_empty() {
                return Err(RuleSetError::Invalid(format!("{name} is empty")));
            }
        }
        if self.max_moves_per_proc == 0 {
            return Err(RuleSetError::Invalid("max_moves_per_proc must be positive".into()));
        }
        Regex::new(&self.proc_name_pattern)
            .map_err(|e| RuleSetError::Invalid(format!("proc_name_pattern: {e}")))?;
        Ok(())
    }

    fn allows(set: &BTreeSet<String>, ident: &str) -> bool {
        set.iter().any(|s| s.eq_ignore_ascii_case(ident))
    }
}

/// Where a violation was found. Source positions (R1) sort before
/// procedure-level findings, which sort by procedure then statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "at", rename_all = "snake_case")]
pub enum Location {
    Source { line: usize, column: usize },
    Procedure { proc_index: usize, proc: String },
    /// `statement` is the 1-based statement index within the procedure.
    Statement {
        proc_index: usize,
        proc: String,
        statement: usize,
    },
}

impl Location {
    fn sort_key(&self) -> (u8, usize, usize) {
        match self {
            Location::Source { line, column } => (0, *line, *column),
            Location::Procedure { proc_index, .. } => (1, *proc_index, 0),
            Location::Statement {
                proc_index,
                statement,
                ..
            } => (1, *proc_index, *statement),
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Source { line, column } => write!(f, "{line}:{column}"),
            Location::Procedure { proc, .. } => write!(f, "PROC {proc}"),
            Location::Statement {
                proc, statement, ..
            } => write!(f, "PROC {proc} statement {statement}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule_id: RuleId,
    pub location: Location,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn new(mut violations: Vec<Violation>) -> Self {
        violations.sort_by(|a, b| {
            a.location
                .sort_key()
                .cmp(&b.location.sort_key())
                .then(a.rule_id.cmp(&b.rule_id))
                .then_with(|| a.message.cmp(&b.message))
        });
        Self {
            pass: violations.is_empty(),
            violations,
        }
    }

    pub fn rule_ids(&self) -> BTreeSet<RuleId> {
        self.violations.iter().map(|v| v.rule_id).collect()
    }

    pub fn to_text(&self) -> String {
        if self.pass {
            return "pass\n".to_string();
        }
        self.violations
            .iter()
            .map(|v| format!("{} {}: {}\n", v.rule_id, v.location, v.message))
            .collect()
    }
}

/// Validates `source` against `rules`.
pub fn validate(source: &str, rules: &RuleSet) -> ValidationReport {
    match parse_module(source) {
        Ok(module) => ValidationReport::new(check_module(&module, rules)),
        Err(err) => {
            let pos = err.position();
            ValidationReport::new(vec![Violation {
                rule_id: RuleId::R1,
                location: Location::Source {
                    line: pos.line,
                    column: pos.column,
                },
                message: err.to_string(),
            }])
        }
    }
}

/// Rules R2 through R7 on an already parsed module.
pub fn check_module(module: &ModuleAst, rules: &RuleSet) -> Vec<Violation> {
    let name_pattern = Regex::new(&rules.proc_name_pattern).ok();
    let mut out = Vec::new();
    for (proc_index, proc) in module.procedures.iter().enumerate() {
        let proc_loc = || Location::Procedure {
            proc_index,
            proc: proc.name.clone(),
        };
        let stmt_loc = |statement: usize| Location::Statement {
            proc_index,
            proc: proc.name.clone(),
            statement,
        };

        match &name_pattern {
            Some(re) if re.is_match(&proc.name) => {}
            Some(_) => out.push(Violation {
                rule_id: RuleId::R6,
                location: proc_loc(),
                message: format!(
                    "procedure name {} does not match {}",
                    proc.name, rules.proc_name_pattern
                ),
            }),
            None => out.push(Violation {
                rule_id: RuleId::R6,
                location: proc_loc(),
                message: format!("invalid procedure name pattern {}", rules.proc_name_pattern),
            }),
        }

        let moves = proc.move_count();
        if moves > rules.max_moves_per_proc {
            out.push(Violation {
                rule_id: RuleId::R7,
                location: proc_loc(),
                message: format!(
                    "{moves} move instructions exceed the limit of {}",
                    rules.max_moves_per_proc
                ),
            });
        }

        let last_move = proc
            .statements
            .iter()
            .rposition(|s| s.as_move().is_some());
        for (i, stmt) in proc.statements.iter().enumerate() {
            let Some(mv) = stmt.as_move() else { continue };
            let loc = stmt_loc(i + 1);
            if rules.require_declared_targets {
                let refs = mv.via.iter().chain(std::iter::once(&mv.target));
                for name in refs.map(|t| t.base_name()) {
                    if module.declaration(name).is_none() {
                        out.push(Violation {
                            rule_id: RuleId::R2,
                            location: loc.clone(),
                            message: format!("target {name} is not declared"),
                        });
                    }
                }
            }
            if !RuleSet::allows(&rules.allowed_speeds, &mv.speed) {
                out.push(Violation {
                    rule_id: RuleId::R3,
                    location: loc.clone(),
                    message: format!("speed {} is not allowed", mv.speed),
                });
            }
            if !RuleSet::allows(&rules.allowed_zones, &mv.zone) {
                out.push(Violation {
                    rule_id: RuleId::R4,
                    location: loc.clone(),
                    message: format!("zone {} is not allowed", mv.zone),
                });
            }
            if !RuleSet::allows(&rules.allowed_tools, &mv.tool) {
                out.push(Violation {
                    rule_id: RuleId::R4,
                    location: loc.clone(),
                    message: format!("tool {} is not allowed", mv.tool),
                });
            }
            if rules.require_final_fine && Some(i) == last_move && !mv.zone.eq_ignore_ascii_case("fine") {
                out.push(Violation {
                    rule_id: RuleId::R5,
                    location: loc,
                    message: format!("last move ends in zone {} instead of fine", mv.zone),
                });
            }
        }
    }
    out
}

/// Candidate parses and equals `expected` structurally within the default tolerance.
pub fn strict_match(candidate: &str, expected: &ModuleAst) -> bool {
    parse_module(candidate).is_ok_and(|m| ast_equal(&m, expected, DEFAULT_REL_TOL))
}

/// Candidate parses, references only declared targets, and produces the same
/// motion trace as `expected` for procedure `proc`.
pub fn functional_match(candidate: &str, expected: &ModuleAst, proc: &str, start: Pose) -> bool {
    functional_match_with(candidate, expected, proc, start, &MotionTables::default())
}

pub fn functional_match_with(
    candidate: &str,
    expected: &ModuleAst,
    proc: &str,
    start: Pose,
    tables: &MotionTables,
) -> bool {
    let Ok(module) = parse_module(candidate) else {
        return false;
    };
    let declared_only = RuleSet {
        require_declared_targets: true,
        ..RuleSet::default()
    };
    if check_module(&module, &declared_only)
        .iter()
        .any(|v| v.rule_id == RuleId::R2)
    {
        return false;
    }
    match (
        interpret(&module, proc, start, tables),
        interpret(expected, proc, start, tables),
    ) {
        (Ok(a), Ok(b)) => traces_equal(&a, &b, DEFAULT_TRACE_TOL_MM),
        _ => false,
    }
}
