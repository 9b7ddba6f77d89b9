//! Lexing, parsing, printing and canonical comparison of the RAPID subset.

pub mod ast;
pub mod canon;
pub mod lexer;
pub mod parser;
pub mod printer;

pub use ast::*;
pub use canon::{ast_equal, canonicalize, CanonicalForm, DEFAULT_REL_TOL};
pub use lexer::{tokenize, LexError, Position, Token, TokenKind};
pub use parser::{parse_module, ParseError};
pub use printer::{format_number, print_module};
