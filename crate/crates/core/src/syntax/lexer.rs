use std::fmt;

use thiserror::Error;

/// Reserved words of the subset. Matched case-insensitively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Module,
    EndModule,
    Const,
    RobTarget,
    Proc,
    EndProc,
    MoveL,
    MoveJ,
    MoveC,
    WaitTime,
    Offs,
}

impl Keyword {
    const ALL: [Keyword; 11] = [
        Keyword::Module,
        Keyword::EndModule,
        Keyword::Const,
        Keyword::RobTarget,
        Keyword::Proc,
        Keyword::EndProc,
        Keyword::MoveL,
        Keyword::MoveJ,
        Keyword::MoveC,
        Keyword::WaitTime,
        Keyword::Offs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Module => "MODULE",
            Keyword::EndModule => "ENDMODULE",
            Keyword::Const => "CONST",
            Keyword::RobTarget => "robtarget",
            Keyword::Proc => "PROC",
            Keyword::EndProc => "ENDPROC",
            Keyword::MoveL => "MoveL",
            Keyword::MoveJ => "MoveJ",
            Keyword::MoveC => "MoveC",
            Keyword::WaitTime => "WaitTime",
            Keyword::Offs => "Offs",
        }
    }

    pub fn lookup(word: &str) -> Option<Keyword> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(word))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    Number(f64),
    /// `\Name:=` argument switch, carrying `Name`.
    Switch(String),
    Comma,
    Semicolon,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Assign,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => write!(f, "keyword {}", k.as_str()),
            TokenKind::Ident(s) => write!(f, "identifier {s}"),
            TokenKind::Number(n) => write!(f, "number {n}"),
            TokenKind::Switch(s) => write!(f, "switch \\{s}:="),
            TokenKind::Comma => f.write_str("','"),
            TokenKind::Semicolon => f.write_str("';'"),
            TokenKind::LBracket => f.write_str("'['"),
            TokenKind::RBracket => f.write_str("']'"),
            TokenKind::LParen => f.write_str("'('"),
            TokenKind::RParen => f.write_str("')'"),
            TokenKind::Assign => f.write_str("':='"),
        }
    }
}

/// Line and column are 1-based; column counts characters. `offset` is the
/// byte offset into the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Position {
    pub line: usize,
    pub column: usize,
    pub offset: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Position,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LexError {
    #[error("{pos}: unexpected character {ch:?}")]
    UnexpectedChar { ch: char, pos: Position },
    #[error("{pos}: malformed number {text:?}")]
    BadNumber { text: String, pos: Position },
    #[error("{pos}: expected ':=' after argument switch")]
    BadSwitch { pos: Position },
}

impl LexError {
    pub fn position(&self) -> Position {
        match self {
            LexError::UnexpectedChar { pos, .. }
            | LexError::BadNumber { pos, .. }
            | LexError::BadSwitch { pos } => *pos,
        }
    }
}

struct Cursor<'a> {
    src: &'a str,
    offset: usize,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn pos(&self) -> Position {
        Position {
            line: self.line,
            column: self.column,
            offset: self.offset,
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.offset..].chars().next()
    }

    fn peek_nth(&self, n: usize) -> Option<char> {
        self.src[self.offset..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn eat_while(&mut self, pred: impl Fn(char) -> bool) -> &'a str {
        let start = self.offset;
        while self.peek().is_some_and(&pred) {
            self.bump();
        }
        &self.src[start..self.offset]
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('!') => {
                    self.eat_while(|c| c != '\n');
                }
                _ => break,
            }
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits `source` into tokens, dropping whitespace and `!` comments.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor {
        src: source,
        offset: 0,
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();
    loop {
        cur.skip_trivia();
        let pos = cur.pos();
        let Some(c) = cur.peek() else { break };
        let kind = match c {
            ',' => single(&mut cur, TokenKind::Comma),
            ';' => single(&mut cur, TokenKind::Semicolon),
            '[' => single(&mut cur, TokenKind::LBracket),
            ']' => single(&mut cur, TokenKind::RBracket),
            '(' => single(&mut cur, TokenKind::LParen),
            ')' => single(&mut cur, TokenKind::RParen),
            ':' if cur.peek_nth(1) == Some('=') => {
                cur.bump();
                cur.bump();
                TokenKind::Assign
            }
            '\\' => {
                cur.bump();
                if !cur.peek().is_some_and(is_ident_start) {
                    return Err(LexError::UnexpectedChar { ch: '\\', pos });
                }
                let name = cur.eat_while(is_ident_continue).to_string();
                cur.skip_trivia();
                if cur.peek() == Some(':') && cur.peek_nth(1) == Some('=') {
                    cur.bump();
                    cur.bump();
                    TokenKind::Switch(name)
                } else {
                    return Err(LexError::BadSwitch { pos });
                }
            }
            c if is_ident_start(c) => {
                let word = cur.eat_while(is_ident_continue);
                match Keyword::lookup(word) {
                    Some(k) => TokenKind::Keyword(k),
                    None => TokenKind::Ident(word.to_string()),
                }
            }
            c if c.is_ascii_digit()
                || c == '.'
                || ((c == '-' || c == '+')
                    && cur
                        .peek_nth(1)
                        .is_some_and(|d| d.is_ascii_digit() || d == '.')) =>
            {
                TokenKind::Number(number(&mut cur, pos)?)
            }
            other => return Err(LexError::UnexpectedChar { ch: other, pos }),
        };
        tokens.push(Token { kind, pos });
    }
    Ok(tokens)
}

fn single(cur: &mut Cursor<'_>, kind: TokenKind) -> TokenKind {
    cur.bump();
    kind
}

// [+-]? digits? ('.' digits?)? ([eE] [+-]? digits)?
fn number(cur: &mut Cursor<'_>, pos: Position) -> Result<f64, LexError> {
    let start = cur.offset;
    if matches!(cur.peek(), Some('+' | '-')) {
        cur.bump();
    }
    let int_digits = cur.eat_while(|c| c.is_ascii_digit()).len();
    let mut frac_digits = 0;
    if cur.peek() == Some('.') {
        cur.bump();
        frac_digits = cur.eat_while(|c| c.is_ascii_digit()).len();
    }
    let mut bad = int_digits + frac_digits == 0;
    if matches!(cur.peek(), Some('e' | 'E')) {
        cur.bump();
        if matches!(cur.peek(), Some('+' | '-')) {
            cur.bump();
        }
        bad |= cur.eat_while(|c| c.is_ascii_digit()).is_empty();
    }
    // A numeral running straight into an identifier ("12abc") is malformed.
    if cur.peek().is_some_and(is_ident_continue) {
        cur.eat_while(is_ident_continue);
        bad = true;
    }
    let text = &cur.src[start..cur.offset];
    if bad {
        return Err(LexError::BadNumber {
            text: text.to_string(),
            pos,
        });
    }
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(LexError::BadNumber {
            text: text.to_string(),
            pos,
        }),
    }
}
