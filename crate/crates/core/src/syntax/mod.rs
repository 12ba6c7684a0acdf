//! MiniRuby front end: lexer, recursive-descent parser and canonical printer.
//!
//! The accepted language is deliberately small: class definitions with
//! optional single inheritance, `attr_*` declarations, methods with bare or
//! parenthesized parameter lists, and newline-terminated statements. There
//! are no blocks, modules, operators or string interpolation.

mod ast;
mod lexer;
mod parser;
mod printer;
mod span;

use thiserror::Error;

pub use ast::*;
pub use lexer::{tokenize, unescape_string, Keyword, LexError, Op, Token, TokenKind};
pub use parser::{parse_program, ParseError};
pub use printer::pretty_print;
pub use span::{FileId, Position, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("{} parse error(s)", .0.len())]
    Parse(Vec<ParseError>),
}

impl SyntaxError {
    /// Every (span, message) pair carried by the error.
    pub fn messages(&self) -> Vec<(SourceSpan, String)> {
        match self {
            SyntaxError::Lex(e) => vec![(e.span, e.message.clone())],
            SyntaxError::Parse(errs) => errs.iter().map(|e| (e.span, e.message.clone())).collect(),
        }
    }
}

/// Tokenizes and parses in one step.
pub fn parse_source(source: &str, file_id: FileId) -> Result<SyntaxTree, SyntaxError> {
    let tokens = tokenize(source, file_id)?;
    parse_program(&tokens).map_err(SyntaxError::Parse)
}
