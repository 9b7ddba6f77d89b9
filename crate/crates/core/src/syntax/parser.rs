//! Recursive-descent parser for the RAPID subset.
//!
//! ```text
//! module := MODULE ident decl* proc* ENDMODULE
//! decl   := CONST robtarget ident ":=" "[" pos "," orient "," conf "," extax "]" ";"
//! proc   := PROC ident "(" ")" stmt* ENDPROC
//! stmt   := (MoveL | MoveJ) texpr "," ident "," ident "," ident [wobj] ";"
//!         | MoveC texpr "," texpr "," ident "," ident "," ident [wobj] ";"
//!         | WaitTime num ";"
//! texpr  := ident | Offs "(" ident "," num "," num "," num ")"
//! wobj   := "\WObj" ":=" ident
//! ```

use std::collections::HashSet;

use thiserror::Error;

use super::ast::*;
use super::lexer::{tokenize, Keyword, LexError, Position, Token, TokenKind};

const ORIENT_TOLERANCE: f64 = 1e-6;
const CONF_LIMIT: i32 = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("{pos}: expected {}, found {found}", expected.join(" or "))]
    Unexpected {
        pos: Position,
        found: String,
        expected: Vec<String>,
    },
    #[error("{pos}: {message}")]
    Invalid { pos: Position, message: String },
}

impl ParseError {
    pub fn position(&self) -> Position {
        match self {
            ParseError::Lex(e) => e.position(),
            ParseError::Unexpected { pos, .. } | ParseError::Invalid { pos, .. } => *pos,
        }
    }
}

/// Parses a complete `.mod` source text.
pub fn parse_module(source: &str) -> Result<ModuleAst, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser {
        tokens,
        idx: 0,
        eof: end_position(source),
    };
    let module = parser.module()?;
    if let Some(tok) = parser.tokens.get(parser.idx) {
        return Err(ParseError::Unexpected {
            pos: tok.pos,
            found: tok.kind.to_string(),
            expected: vec!["end of input".into()],
        });
    }
    Ok(module)
}

fn end_position(source: &str) -> Position {
    let line = source.matches('\n').count() + 1;
    let last_line = source.rsplit('\n').next().unwrap_or("");
    Position {
        line,
        column: last_line.chars().count() + 1,
        offset: source.len(),
    }
}

struct Parser {
    tokens: Vec<Token>,
    idx: usize,
    eof: Position,
}

impl Parser {
    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.idx).map(|t| &t.kind)
    }

    fn pos(&self) -> Position {
        self.tokens.get(self.idx).map_or(self.eof, |t| t.pos)
    }

    fn unexpected<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        Err(ParseError::Unexpected {
            pos: self.pos(),
            found: self
                .peek()
                .map_or_else(|| "end of input".to_string(), ToString::to_string),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn at_keyword(&self, kw: Keyword) -> bool {
        self.peek() == Some(&TokenKind::Keyword(kw))
    }

    fn keyword(&mut self, kw: Keyword) -> Result<(), ParseError> {
        if self.at_keyword(kw) {
            self.idx += 1;
            Ok(())
        } else {
            self.unexpected(&[kw.as_str()])
        }
    }

    fn punct(&mut self, kind: TokenKind) -> Result<(), ParseError> {
        if self.peek() == Some(&kind) {
            self.idx += 1;
            Ok(())
        } else {
            self.unexpected(&[&kind.to_string()])
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(TokenKind::Ident(name)) => {
                let name = name.clone();
                self.idx += 1;
                Ok(name)
            }
            _ => self.unexpected(&["identifier"]),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        match self.peek() {
            Some(TokenKind::Number(n)) => {
                let n = *n;
                self.idx += 1;
                Ok(n)
            }
            _ => self.unexpected(&["number"]),
        }
    }

    fn module(&mut self) -> Result<ModuleAst, ParseError> {
        self.keyword(Keyword::Module)?;
        let name = self.ident()?;
        let mut declarations: Vec<TargetDecl> = Vec::new();
        let mut seen = HashSet::new();
        while self.at_keyword(Keyword::Const) {
            let pos = self.pos();
            let decl = self.declaration()?;
            if !seen.insert(decl.name.to_ascii_lowercase()) {
                return Err(ParseError::Invalid {
                    pos,
                    message: format!("duplicate declaration of {}", decl.name),
                });
            }
            declarations.push(decl);
        }
        let mut procedures = Vec::new();
        while self.at_keyword(Keyword::Proc) {
            procedures.push(self.procedure()?);
        }
        if !self.at_keyword(Keyword::EndModule) {
            return self.unexpected(&["CONST", "PROC", "ENDMODULE"]);
        }
        self.idx += 1;
        Ok(ModuleAst {
            name,
            declarations,
            procedures,
        })
    }

    fn declaration(&mut self) -> Result<TargetDecl, ParseError> {
        self.keyword(Keyword::Const)?;
        self.keyword(Keyword::RobTarget)?;
        let name = self.ident()?;
        self.punct(TokenKind::Assign)?;
        let start = self.pos();
        self.punct(TokenKind::LBracket)?;
        let trans = self.number_array::<3>()?;
        self.punct(TokenKind::Comma)?;
        let orient = self.number_array::<4>()?;
        self.punct(TokenKind::Comma)?;
        let conf_pos = self.pos();
        let conf_raw = self.number_array::<4>()?;
        self.punct(TokenKind::Comma)?;
        let extax = self.number_array::<6>()?;
        self.punct(TokenKind::RBracket)?;
        self.punct(TokenKind::Semicolon)?;

        let mut conf = [0i32; 4];
        for (slot, raw) in conf.iter_mut().zip(conf_raw) {
            if raw.fract() != 0.0 || raw.abs() > CONF_LIMIT as f64 {
                return Err(ParseError::Invalid {
                    pos: conf_pos,
                    message: format!(
                        "configuration value {raw} must be an integer in [-{CONF_LIMIT}, {CONF_LIMIT}]"
                    ),
                });
            }
            *slot = raw as i32;
        }
        let target = RobTarget {
            trans,
            orient,
            conf,
            extax,
        };
        if (target.orient_norm() - 1.0).abs() > ORIENT_TOLERANCE {
            return Err(ParseError::Invalid {
                pos: start,
                message: format!("orientation of {name} is not a unit quaternion"),
            });
        }
        Ok(TargetDecl { name, target })
    }

    fn number_array<const N: usize>(&mut self) -> Result<[f64; N], ParseError> {
        self.punct(TokenKind::LBracket)?;
        let mut out = [0.0; N];
        for (i, slot) in out.iter_mut().enumerate() {
            if i > 0 {
                self.punct(TokenKind::Comma)?;
            }
            *slot = self.number()?;
        }
        self.punct(TokenKind::RBracket)?;
        Ok(out)
    }

    fn procedure(&mut self) -> Result<ProcAst, ParseError> {
        self.keyword(Keyword::Proc)?;
        let name = self.ident()?;
        self.punct(TokenKind::LParen)?;
        self.punct(TokenKind::RParen)?;
        let mut statements = Vec::new();
        loop {
            match self.peek() {
                Some(TokenKind::Keyword(Keyword::EndProc)) => {
                    self.idx += 1;
                    break;
                }
                Some(TokenKind::Keyword(Keyword::MoveL)) => {
                    statements.push(self.linear_or_joint(MoveKind::Linear)?)
                }
                Some(TokenKind::Keyword(Keyword::MoveJ)) => {
                    statements.push(self.linear_or_joint(MoveKind::Joint)?)
                }
                Some(TokenKind::Keyword(Keyword::MoveC)) => statements.push(self.circular()?),
                Some(TokenKind::Keyword(Keyword::WaitTime)) => {
                    self.idx += 1;
                    let pos = self.pos();
                    let seconds = self.number()?;
                    if seconds < 0.0 {
                        return Err(ParseError::Invalid {
                            pos,
                            message: "WaitTime must be non-negative".into(),
                        });
                    }
                    self.punct(TokenKind::Semicolon)?;
                    statements.push(Statement::Wait(WaitStmt { seconds }));
                }
                _ => return self.unexpected(&["MoveL", "MoveJ", "MoveC", "WaitTime", "ENDPROC"]),
            }
        }
        Ok(ProcAst { name, statements })
    }

    fn linear_or_joint(&mut self, kind: MoveKind) -> Result<Statement, ParseError> {
        self.idx += 1;
        let target = self.target_expr()?;
        self.punct(TokenKind::Comma)?;
        let (speed, zone, tool, wobj) = self.move_args()?;
        Ok(Statement::Move(MoveStmt {
            kind,
            via: None,
            target,
            speed,
            zone,
            tool,
            wobj,
        }))
    }

    fn circular(&mut self) -> Result<Statement, ParseError> {
        self.idx += 1;
        let via = self.target_expr()?;
        self.punct(TokenKind::Comma)?;
        let target = self.target_expr()?;
        self.punct(TokenKind::Comma)?;
        let (speed, zone, tool, wobj) = self.move_args()?;
        Ok(Statement::Move(MoveStmt {
            kind: MoveKind::Circular,
            via: Some(via),
            target,
            speed,
            zone,
            tool,
            wobj,
        }))
    }

    /// `speed "," zone "," tool [wobj] ";"`
    fn move_args(&mut self) -> Result<(String, String, String, Option<String>), ParseError> {
        let speed = self.ident()?;
        self.punct(TokenKind::Comma)?;
        let zone = self.ident()?;
        self.punct(TokenKind::Comma)?;
        let tool = self.ident()?;
        let wobj = match self.peek() {
            Some(TokenKind::Switch(name)) if name.eq_ignore_ascii_case("WObj") => {
                self.idx += 1;
                Some(self.ident()?)
            }
            Some(TokenKind::Semicolon) => None,
            _ => return self.unexpected(&["\\WObj:=", "';'"]),
        };
        self.punct(TokenKind::Semicolon)?;
        Ok((speed, zone, tool, wobj))
    }

    fn target_expr(&mut self) -> Result<TargetExpr, ParseError> {
        match self.peek() {
            Some(TokenKind::Ident(_)) => Ok(TargetExpr::Named { name: self.ident()? }),
            Some(TokenKind::Keyword(Keyword::Offs)) => {
                self.idx += 1;
                self.punct(TokenKind::LParen)?;
                if self.at_keyword(Keyword::Offs) {
                    return Err(ParseError::Invalid {
                        pos: self.pos(),
                        message: "nested Offs is not supported".into(),
                    });
                }
                let name = self.ident()?;
                let mut d = [0.0; 3];
                for slot in &mut d {
                    self.punct(TokenKind::Comma)?;
                    *slot = self.number()?;
                }
                self.punct(TokenKind::RParen)?;
                Ok(TargetExpr::Offset {
                    name,
                    dx: d[0],
                    dy: d[1],
                    dz: d[2],
                })
            }
            _ => self.unexpected(&["identifier", "Offs"]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const IDENTITY: &str = "[1,0,0,0],[0,0,0,0],[9E9,9E9,9E9,9E9,9E9,9E9]";

    fn module_with(stmts: &str) -> String {
        format!(
            "MODULE M\n  CONST robtarget p10 := [[100,0,0],{IDENTITY}];\n  PROC main()\n{stmts}\n  ENDPROC\nENDMODULE\n"
        )
    }

    #[test]
    fn minimal_module() {
        let m = parse_module(&module_with("MoveL p10, v100, fine, tool0;")).unwrap();
        assert_eq!(m.name, "M");
        assert_eq!(m.declarations.len(), 1);
        assert_eq!(m.declarations[0].target.trans, [100.0, 0.0, 0.0]);
        assert_eq!(m.declarations[0].target.extax, [EXTAX_UNUSED; 6]);
        assert_eq!(m.procedures.len(), 1);
        let stmts = &m.procedures[0].statements;
        assert_eq!(stmts.len(), 1);
        assert_eq!(
            stmts[0],
            Statement::Move(MoveStmt::new(
                MoveKind::Linear,
                TargetExpr::named("p10"),
                "v100",
                "fine",
                "tool0"
            ))
        );
    }

    #[test]
    fn circular_move() {
        let m = parse_module(&module_with("MoveC c1, p2, v200, z10, tool0;")).unwrap();
        let mv = m.procedures[0].statements[0].as_move().unwrap();
        assert_eq!(mv.kind, MoveKind::Circular);
        assert_eq!(mv.via, Some(TargetExpr::named("c1")));
        assert_eq!(mv.target, TargetExpr::named("p2"));
    }

    #[test]
    fn offset_target() {
        let m = parse_module(&module_with("MoveL Offs(p10, 0, 0, 50), v100, fine, tool0;")).unwrap();
        let mv = m.procedures[0].statements[0].as_move().unwrap();
        assert_eq!(mv.target, TargetExpr::offset("p10", 0.0, 0.0, 50.0));
    }

    #[test]
    fn wobj_switch_and_wait() {
        let m = parse_module(&module_with(
            "MoveJ p10, v100, z10, tool0\\WObj:=wobj1;\nWaitTime 1.5;",
        ))
        .unwrap();
        let stmts = &m.procedures[0].statements;
        assert_eq!(stmts[0].as_move().unwrap().wobj.as_deref(), Some("wobj1"));
        assert_eq!(stmts[1], Statement::Wait(WaitStmt { seconds: 1.5 }));
    }

    #[test]
    fn keywords_any_case_identifiers_preserved() {
        let m = parse_module("module Mod1 proc Main() movel P10, V100, FINE, Tool0; endproc endmodule")
            .unwrap();
        assert_eq!(m.procedures[0].name, "Main");
        assert_eq!(m.procedures[0].statements[0].as_move().unwrap().speed, "V100");
    }

    #[test]
    fn undeclared_target_is_not_a_parse_error() {
        assert!(parse_module(&module_with("MoveL nowhere, v100, fine, tool0;")).is_ok());
    }

    #[test]
    fn unknown_instruction_is_rejected() {
        let err = parse_module(&module_with("SetDO do1, 1;")).unwrap_err();
        match err {
            ParseError::Unexpected { expected, pos, .. } => {
                assert!(expected.contains(&"WaitTime".to_string()));
                assert_eq!(pos.line, 4);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn nested_offs_is_rejected() {
        let err = parse_module(&module_with("MoveL Offs(Offs(p10,1,2,3),4,5,6), v100, fine, tool0;"))
            .unwrap_err();
        assert!(matches!(err, ParseError::Invalid { .. }));
    }

    #[test]
    fn duplicate_declarations_differing_in_case() {
        let src = format!(
            "MODULE M CONST robtarget p1 := [[0,0,0],{IDENTITY}]; CONST robtarget P1 := [[0,0,0],{IDENTITY}]; ENDMODULE"
        );
        assert!(matches!(parse_module(&src), Err(ParseError::Invalid { .. })));
    }

    #[test]
    fn robtarget_invariants() {
        let bad_quat = "MODULE M CONST robtarget p := [[0,0,0],[1,1,0,0],[0,0,0,0],[9E9,9E9,9E9,9E9,9E9,9E9]]; ENDMODULE";
        assert!(matches!(parse_module(bad_quat), Err(ParseError::Invalid { .. })));
        let bad_conf = "MODULE M CONST robtarget p := [[0,0,0],[1,0,0,0],[0,5,0,0],[9E9,9E9,9E9,9E9,9E9,9E9]]; ENDMODULE";
        assert!(matches!(parse_module(bad_conf), Err(ParseError::Invalid { .. })));
        let frac_conf = "MODULE M CONST robtarget p := [[0,0,0],[1,0,0,0],[0,0.5,0,0],[9E9,9E9,9E9,9E9,9E9,9E9]]; ENDMODULE";
        assert!(parse_module(frac_conf).is_err());
    }

    #[test]
    fn error_position_never_exceeds_input() {
        for src in ["", "MODULE", "MODULE M PROC p(", "MODULE M Move;", "MODULE M ENDMODULE x"] {
            let err = parse_module(src).unwrap_err();
            assert!(err.position().offset <= src.len(), "{src:?}: {err}");
        }
    }

    #[test]
    fn eof_error_reports_end_position() {
        let err = parse_module("MODULE M\n").unwrap_err();
        assert_eq!(err.position(), Position { line: 2, column: 1, offset: 9 });
    }
}
