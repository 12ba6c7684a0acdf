use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::span::{FileId, Position, SourceSpan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Keyword {
    Class,
    Def,
    End,
    Super,
    Return,
    SelfKw,
    Nil,
    True,
    False,
}

impl Keyword {
    fn from_word(word: &str) -> Option<Self> {
        Some(match word {
            "class" => Keyword::Class,
            "def" => Keyword::Def,
            "end" => Keyword::End,
            "super" => Keyword::Super,
            "return" => Keyword::Return,
            "self" => Keyword::SelfKw,
            "nil" => Keyword::Nil,
            "true" => Keyword::True,
            "false" => Keyword::False,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Class => "class",
            Keyword::Def => "def",
            Keyword::End => "end",
            Keyword::Super => "super",
            Keyword::Return => "return",
            Keyword::SelfKw => "self",
            Keyword::Nil => "nil",
            Keyword::True => "true",
            Keyword::False => "false",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Assign,
    Lt,
    Dot,
    Comma,
    LParen,
    RParen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Keyword(Keyword),
    Const,
    Ident,
    IVar,
    Symbol,
    StringLit,
    IntLit,
    Op(Op),
    Newline,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => write!(f, "`{}`", k.as_str()),
            TokenKind::Const => f.write_str("constant"),
            TokenKind::Ident => f.write_str("identifier"),
            TokenKind::IVar => f.write_str("instance variable"),
            TokenKind::Symbol => f.write_str("symbol"),
            TokenKind::StringLit => f.write_str("string literal"),
            TokenKind::IntLit => f.write_str("integer literal"),
            TokenKind::Op(op) => {
                let s = match op {
                    Op::Assign => "=",
                    Op::Lt => "<",
                    Op::Dot => ".",
                    Op::Comma => ",",
                    Op::LParen => "(",
                    Op::RParen => ")",
                };
                write!(f, "`{s}`")
            }
            TokenKind::Newline => f.write_str("newline"),
            TokenKind::Eof => f.write_str("end of file"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    /// Raw source text of the token (string literals keep their quotes).
    pub lexeme: String,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct LexError {
    pub message: String,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    src: &'a str,
    offset: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.offset..].chars().next()
    }

    fn peek_second(&self) -> Option<char> {
        let mut it = self.src[self.offset..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Position {
        Position::new(self.line, self.col)
    }

    fn eat_while(&mut self, pred: impl Fn(char) -> bool) {
        while self.peek().is_some_and(&pred) {
            self.bump();
        }
    }
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits MiniRuby source into tokens. Spaces, tabs, carriage returns and
/// `#` comments are trivia and produce no token; every newline does.
pub fn tokenize(source: &str, file_id: FileId) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor {
        src: source,
        offset: 0,
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        let start = cur.pos();
        let start_offset = cur.offset;
        let kind = match c {
            ' ' | '\t' | '\r' => {
                cur.bump();
                continue;
            }
            '#' => {
                cur.eat_while(|c| c != '\n');
                continue;
            }
            '\n' => {
                cur.bump();
                TokenKind::Newline
            }
            '=' => {
                cur.bump();
                TokenKind::Op(Op::Assign)
            }
            '<' => {
                cur.bump();
                TokenKind::Op(Op::Lt)
            }
            '.' => {
                cur.bump();
                TokenKind::Op(Op::Dot)
            }
            ',' => {
                cur.bump();
                TokenKind::Op(Op::Comma)
            }
            '(' => {
                cur.bump();
                TokenKind::Op(Op::LParen)
            }
            ')' => {
                cur.bump();
                TokenKind::Op(Op::RParen)
            }
            '"' | '\'' => {
                lex_string(&mut cur, c, file_id)?;
                TokenKind::StringLit
            }
            '@' => {
                cur.bump();
                if !cur.peek().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
                    return Err(illegal(file_id, start, cur.pos(), '@'));
                }
                cur.eat_while(is_word_char);
                TokenKind::IVar
            }
            ':' => {
                cur.bump();
                if !cur.peek().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
                    return Err(illegal(file_id, start, cur.pos(), ':'));
                }
                cur.eat_while(is_word_char);
                TokenKind::Symbol
            }
            '0'..='9' => {
                cur.eat_while(|c| c.is_ascii_digit());
                TokenKind::IntLit
            }
            c if c.is_ascii_uppercase() => {
                cur.eat_while(is_word_char);
                TokenKind::Const
            }
            c if c.is_ascii_lowercase() || c == '_' => {
                cur.eat_while(is_word_char);
                // predicate / bang method names such as `frozen?`
                if matches!(cur.peek(), Some('?') | Some('!')) && cur.peek_second() != Some('=') {
                    cur.bump();
                }
                match Keyword::from_word(&source[start_offset..cur.offset]) {
                    Some(kw) => TokenKind::Keyword(kw),
                    None => TokenKind::Ident,
                }
            }
            other => {
                cur.bump();
                return Err(illegal(file_id, start, cur.pos(), other));
            }
        };
        tokens.push(Token {
            kind,
            lexeme: source[start_offset..cur.offset].to_string(),
            span: SourceSpan::new(file_id, start, cur.pos()),
        });
    }

    let end = cur.pos();
    tokens.push(Token {
        kind: TokenKind::Eof,
        lexeme: String::new(),
        span: SourceSpan::new(file_id, end, end),
    });
    Ok(tokens)
}

fn illegal(file_id: FileId, start: Position, end: Position, c: char) -> LexError {
    LexError {
        message: format!("illegal character {c:?}"),
        span: SourceSpan::new(file_id, start, end),
    }
}

fn lex_string(cur: &mut Cursor<'_>, quote: char, file_id: FileId) -> Result<(), LexError> {
    let start = cur.pos();
    cur.bump();
    loop {
        match cur.peek() {
            None | Some('\n') => {
                return Err(LexError {
                    message: "unterminated string literal".to_string(),
                    span: SourceSpan::new(file_id, start, cur.pos()),
                })
            }
            Some('\\') => {
                cur.bump();
                if cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            }
            Some(c) if c == quote => {
                cur.bump();
                return Ok(());
            }
            Some(_) => {
                cur.bump();
            }
        }
    }
}

/// Decodes the text of a string literal lexeme, quotes included.
pub fn unescape_string(lexeme: &str) -> String {
    let quote = lexeme.chars().next().unwrap_or('"');
    let inner = &lexeme[quote.len_utf8()..lexeme.len() - quote.len_utf8()];
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') if quote == '"' => out.push('\n'),
            Some('t') if quote == '"' => out.push('\t'),
            Some(c @ ('\\' | '"' | '\'')) => out.push(c),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}
