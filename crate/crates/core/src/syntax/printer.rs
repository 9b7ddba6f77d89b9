use std::fmt::Write;

use super::ast::*;
use super::lexer::Keyword;

/// Formats a numeral the way the printer and canonical form spell it: the
/// shortest round-tripping decimal, no sign on zero, and `9E9` for the
/// unused-axis sentinel.
pub fn format_number(value: f64) -> String {
    if value == EXTAX_UNUSED {
        "9E9".to_string()
    } else if value == 0.0 {
        "0".to_string()
    } else {
        format!("{value}")
    }
}

#[derive(Clone, Copy)]
pub(crate) struct Style {
    indent: &'static str,
    fold_case: bool,
    blank_lines: bool,
}

impl Style {
    pub(crate) const PRETTY: Style = Style {
        indent: "    ",
        fold_case: false,
        blank_lines: true,
    };
    pub(crate) const CANONICAL: Style = Style {
        indent: "",
        fold_case: true,
        blank_lines: false,
    };
}

/// Renders a module in the subset syntax, one statement per line.
pub fn print_module(ast: &ModuleAst) -> String {
    render(ast, Style::PRETTY)
}

pub(crate) fn render(ast: &ModuleAst, style: Style) -> String {
    let mut w = Writer { out: String::new(), style };
    w.module(ast);
    w.out
}

struct Writer {
    out: String,
    style: Style,
}

impl Writer {
    fn kw(&self, kw: Keyword) -> String {
        if self.style.fold_case {
            kw.as_str().to_ascii_uppercase()
        } else {
            kw.as_str().to_string()
        }
    }

    fn id<'a>(&self, ident: &'a str) -> std::borrow::Cow<'a, str> {
        if self.style.fold_case {
            ident.to_ascii_lowercase().into()
        } else {
            ident.into()
        }
    }

    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str(self.style.indent);
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn module(&mut self, m: &ModuleAst) {
        let header = format!("{} {}", self.kw(Keyword::Module), self.id(&m.name));
        self.line(0, &header);
        for decl in &m.declarations {
            let text = self.declaration(decl);
            self.line(1, &text);
        }
        for (i, proc) in m.procedures.iter().enumerate() {
            if self.style.blank_lines && (i > 0 || !m.declarations.is_empty()) {
                self.out.push('\n');
            }
            self.procedure(proc);
        }
        let footer = self.kw(Keyword::EndModule);
        self.line(0, &footer);
    }

    fn declaration(&self, decl: &TargetDecl) -> String {
        let t = &decl.target;
        let list = |xs: &[f64]| xs.iter().map(|x| format_number(*x)).collect::<Vec<_>>().join(",");
        let conf = t.conf.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
        format!(
            "{} {} {} := [[{}],[{}],[{}],[{}]];",
            self.kw(Keyword::Const),
            self.kw(Keyword::RobTarget),
            self.id(&decl.name),
            list(&t.trans),
            list(&t.orient),
            conf,
            list(&t.extax),
        )
    }

    fn procedure(&mut self, proc: &ProcAst) {
        let header = format!("{} {}()", self.kw(Keyword::Proc), self.id(&proc.name));
        self.line(1, &header);
        for stmt in &proc.statements {
            let text = self.statement(stmt);
            self.line(2, &text);
        }
        let footer = self.kw(Keyword::EndProc);
        self.line(1, &footer);
    }

    fn statement(&self, stmt: &Statement) -> String {
        match stmt {
            Statement::Wait(w) => format!(
                "{} {};",
                self.kw(Keyword::WaitTime),
                format_number(w.seconds)
            ),
            Statement::Move(m) => {
                let kw = match m.kind {
                    MoveKind::Linear => Keyword::MoveL,
                    MoveKind::Joint => Keyword::MoveJ,
                    MoveKind::Circular => Keyword::MoveC,
                };
                let mut s = self.kw(kw);
                s.push(' ');
                if let Some(via) = &m.via {
                    s.push_str(&self.target(via));
                    s.push_str(", ");
                }
                let _ = write!(
                    s,
                    "{}, {}, {}, {}",
                    self.target(&m.target),
                    self.id(&m.speed),
                    self.id(&m.zone),
                    self.id(&m.tool)
                );
                if let Some(wobj) = &m.wobj {
                    let _ = write!(s, "\\WObj:={}", self.id(wobj));
                }
                s.push(';');
                s
            }
        }
    }

    fn target(&self, t: &TargetExpr) -> String {
        match t {
            TargetExpr::Named { name } => self.id(name).into_owned(),
            TargetExpr::Offset { name, dx, dy, dz } => format!(
                "{}({}, {}, {}, {})",
                self.kw(Keyword::Offs),
                self.id(name),
                format_number(*dx),
                format_number(*dy),
                format_number(*dz)
            ),
        }
    }
}
