//! Canonical rendering and tolerant structural comparison of modules.

use std::fmt;

use super::ast::*;
use super::printer::{render, Style};

/// Default relative tolerance for numeral comparison.
pub const DEFAULT_REL_TOL: f64 = 1e-6;
/// Absolute floor applied near zero when a non-zero relative tolerance is in effect.
pub const ABS_TOL_NEAR_ZERO: f64 = 1e-9;

/// Normalized text of a module: upper-case keywords, lower-case identifiers,
/// no comments or layout whitespace, normalized numerals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalForm(String);

impl CanonicalForm {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn canonicalize(ast: &ModuleAst) -> CanonicalForm {
    CanonicalForm(render(ast, Style::CANONICAL))
}

/// Numeral comparison used by [`ast_equal`]. With `rel_tol == 0` this is exact
/// equality, which keeps the relation transitive.
pub fn numbers_close(a: f64, b: f64, rel_tol: f64) -> bool {
    if a == b {
        return true;
    }
    if rel_tol == 0.0 {
        return false;
    }
    let scale = a.abs().max(b.abs());
    (a - b).abs() <= (rel_tol * scale).max(ABS_TOL_NEAR_ZERO)
}

fn ident_eq(a: &str, b: &str) -> bool {
    a.eq_ignore_ascii_case(b)
}

fn slices_close(a: &[f64], b: &[f64], rel_tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| numbers_close(*x, *y, rel_tol))
}

/// Element-wise structural equality with numerals compared within `rel_tol`
/// and identifiers compared case-insensitively.
pub fn ast_equal(a: &ModuleAst, b: &ModuleAst, rel_tol: f64) -> bool {
    ident_eq(&a.name, &b.name)
        && a.declarations.len() == b.declarations.len()
        && a.declarations
            .iter()
            .zip(&b.declarations)
            .all(|(x, y)| decl_equal(x, y, rel_tol))
        && a.procedures.len() == b.procedures.len()
        && a.procedures
            .iter()
            .zip(&b.procedures)
            .all(|(x, y)| proc_equal(x, y, rel_tol))
}

fn decl_equal(a: &TargetDecl, b: &TargetDecl, rel_tol: f64) -> bool {
    ident_eq(&a.name, &b.name)
        && slices_close(&a.target.trans, &b.target.trans, rel_tol)
        && slices_close(&a.target.orient, &b.target.orient, rel_tol)
        && a.target.conf == b.target.conf
        && slices_close(&a.target.extax, &b.target.extax, rel_tol)
}

fn proc_equal(a: &ProcAst, b: &ProcAst, rel_tol: f64) -> bool {
    ident_eq(&a.name, &b.name)
        && a.statements.len() == b.statements.len()
        && a.statements
            .iter()
            .zip(&b.statements)
            .all(|(x, y)| statement_equal(x, y, rel_tol))
}

fn statement_equal(a: &Statement, b: &Statement, rel_tol: f64) -> bool {
    match (a, b) {
        (Statement::Wait(x), Statement::Wait(y)) => numbers_close(x.seconds, y.seconds, rel_tol),
        (Statement::Move(x), Statement::Move(y)) => {
            x.kind == y.kind
                && match (&x.via, &y.via) {
                    (None, None) => true,
                    (Some(p), Some(q)) => target_equal(p, q, rel_tol),
                    _ => false,
                }
                && target_equal(&x.target, &y.target, rel_tol)
                && ident_eq(&x.speed, &y.speed)
                && ident_eq(&x.zone, &y.zone)
                && ident_eq(&x.tool, &y.tool)
                && match (&x.wobj, &y.wobj) {
                    (None, None) => true,
                    (Some(p), Some(q)) => ident_eq(p, q),
                    _ => false,
                }
        }
        _ => false,
    }
}

fn target_equal(a: &TargetExpr, b: &TargetExpr, rel_tol: f64) -> bool {
    match (a, b) {
        (TargetExpr::Named { name: x }, TargetExpr::Named { name: y }) => ident_eq(x, y),
        (
            TargetExpr::Offset { name: x, dx: ax, dy: ay, dz: az },
            TargetExpr::Offset { name: y, dx: bx, dy: by, dz: bz },
        ) => ident_eq(x, y) && slices_close(&[*ax, *ay, *az], &[*bx, *by, *bz], rel_tol),
        _ => false,
    }
}
