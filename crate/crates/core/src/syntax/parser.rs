use thiserror::Error;

use super::ast::*;
use super::lexer::{unescape_string, Keyword, Op, Token, TokenKind};
use super::span::SourceSpan;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub message: String,
    pub span: SourceSpan,
}

type PResult<T> = Result<T, ParseError>;

/// Parses a token stream (ending in `Eof`) into a syntax tree.
///
/// Errors do not stop the parse. A bad statement or header line is skipped
/// up to the end of the line or the next `class`/`def`/`end`, whichever
/// comes first, and a malformed class or method still consumes its body so
/// one run reports every independent problem.
pub fn parse_program(tokens: &[Token]) -> Result<SyntaxTree, Vec<ParseError>> {
    if tokens.last().map(|t| t.kind) != Some(TokenKind::Eof) {
        let span = tokens.last().map(|t| t.span).unwrap_or_default();
        return Err(vec![ParseError {
            message: "token stream does not end with end-of-file".into(),
            span,
        }]);
    }
    let mut p = Parser {
        tokens,
        pos: 0,
        errors: Vec::new(),
    };
    let tree = p.program();
    if p.errors.is_empty() {
        Ok(tree)
    } else {
        Err(p.errors)
    }
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    errors: Vec<ParseError>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Context {
    TopLevel,
    Method,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> &'t Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, n: usize) -> &'t Token {
        let idx = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[idx]
    }

    fn kind(&self) -> TokenKind {
        self.peek().kind
    }

    fn at_op(&self, op: Op) -> bool {
        self.kind() == TokenKind::Op(op)
    }

    fn bump(&mut self) -> &'t Token {
        let tok = &self.tokens[self.pos];
        if tok.kind != TokenKind::Eof {
            self.pos += 1;
        }
        tok
    }

    fn prev_span(&self) -> SourceSpan {
        if self.pos == 0 {
            self.tokens[0].span
        } else {
            self.tokens[self.pos - 1].span
        }
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            message: message.into(),
            span: self.peek().span,
        }
    }

    fn expect_op(&mut self, op: Op, what: &str) -> PResult<&'t Token> {
        if self.at_op(op) {
            Ok(self.bump())
        } else {
            Err(self.error_here(format!("expected {what}, found {}", self.kind())))
        }
    }

    fn skip_newlines(&mut self) {
        while self.kind() == TokenKind::Newline {
            self.bump();
        }
    }

    fn at_boundary(&self) -> bool {
        matches!(
            self.kind(),
            TokenKind::Keyword(Keyword::Class | Keyword::Def | Keyword::End) | TokenKind::Eof
        )
    }

    fn sync_to_line_end(&mut self) {
        while !matches!(self.kind(), TokenKind::Newline) && !self.at_boundary() {
            self.bump();
        }
    }

    fn end_of_statement(&mut self) -> PResult<()> {
        match self.kind() {
            TokenKind::Newline => {
                self.bump();
                Ok(())
            }
            TokenKind::Eof => Ok(()),
            other => Err(self.error_here(format!("expected end of line, found {other}"))),
        }
    }

    fn program(&mut self) -> SyntaxTree {
        let mut items = Vec::new();
        loop {
            self.skip_newlines();
            match self.kind() {
                TokenKind::Eof => break,
                TokenKind::Keyword(Keyword::Class) => {
                    if let Some(c) = self.class_def() {
                        items.push(Item::Class(c));
                    }
                }
                TokenKind::Keyword(Keyword::Def) => {
                    self.errors
                        .push(self.error_here("method definition outside of a class"));
                    let _ = self.method_def();
                }
                TokenKind::Keyword(Keyword::End) => {
                    self.errors.push(self.error_here("unexpected `end`"));
                    self.bump();
                }
                _ => match self.statement(Context::TopLevel) {
                    Ok(s) => items.push(Item::Stmt(s)),
                    Err(e) => {
                        self.errors.push(e);
                        self.sync_to_line_end();
                    }
                },
            }
        }
        SyntaxTree { items }
    }

    /// Returns `None` when the header was malformed; the body is still
    /// consumed so its `end` does not produce a second error.
    fn class_def(&mut self) -> Option<ClassDef> {
        let start = self.bump().span;
        let header = self.class_header();
        if let Err(e) = &header {
            self.errors.push(e.clone());
            self.sync_to_line_end();
        }

        let mut members = Vec::new();
        loop {
            self.skip_newlines();
            match self.kind() {
                TokenKind::Keyword(Keyword::End) => {
                    self.bump();
                    break;
                }
                TokenKind::Keyword(Keyword::Def) => {
                    if let Some(m) = self.method_def() {
                        members.push(Member::Method(m));
                    }
                }
                TokenKind::Ident if AttrKind::from_keyword(&self.peek().lexeme).is_some() => {
                    match self.attr_decl() {
                        Ok(a) => members.push(Member::Attr(a)),
                        Err(e) => {
                            self.errors.push(e);
                            self.sync_to_line_end();
                        }
                    }
                }
                TokenKind::Keyword(Keyword::Class) | TokenKind::Eof => {
                    self.errors.push(ParseError {
                        message: "missing `end` for class".into(),
                        span: start,
                    });
                    break;
                }
                _ => {
                    self.errors.push(self.error_here(
                        "expected attribute declaration, method definition or `end` in class body",
                    ));
                    self.sync_to_line_end();
                }
            }
        }

        let (name, superclass) = header.ok()?;
        Some(ClassDef {
            name,
            superclass,
            members,
            span: start.to(self.prev_span()),
        })
    }

    fn class_header(&mut self) -> PResult<(Name, Option<Name>)> {
        let tok = self.peek();
        if tok.kind != TokenKind::Const {
            return Err(self.error_here("class name must be a constant"));
        }
        self.bump();
        let name = Name {
            text: tok.lexeme.clone(),
            span: tok.span,
        };
        let mut superclass = None;
        if self.at_op(Op::Lt) {
            self.bump();
            let tok = self.peek();
            if tok.kind != TokenKind::Const {
                return Err(self.error_here("superclass name must be a constant"));
            }
            self.bump();
            superclass = Some(Name {
                text: tok.lexeme.clone(),
                span: tok.span,
            });
        }
        self.end_of_statement()?;
        Ok((name, superclass))
    }

    fn attr_decl(&mut self) -> PResult<AttrDecl> {
        let kw = self.bump();
        let kind = AttrKind::from_keyword(&kw.lexeme).expect("caller checked attr keyword");
        let mut names = Vec::new();
        loop {
            let tok = self.peek();
            if tok.kind != TokenKind::Symbol {
                return Err(self.error_here(format!("expected symbol, found {}", tok.kind)));
            }
            self.bump();
            names.push(Name {
                text: tok.lexeme[1..].to_string(),
                span: tok.span,
            });
            if self.at_op(Op::Comma) {
                self.bump();
            } else {
                break;
            }
        }
        let span = kw.span.to(self.prev_span());
        self.end_of_statement()?;
        Ok(AttrDecl { kind, names, span })
    }

    fn method_def(&mut self) -> Option<MethodDef> {
        let start = self.bump().span;
        let header = self.method_header();
        if let Err(e) = &header {
            self.errors.push(e.clone());
            self.sync_to_line_end();
        }

        let mut body = Vec::new();
        loop {
            self.skip_newlines();
            match self.kind() {
                TokenKind::Keyword(Keyword::End) => {
                    self.bump();
                    break;
                }
                TokenKind::Keyword(Keyword::Def | Keyword::Class) | TokenKind::Eof => {
                    self.errors.push(ParseError {
                        message: "missing `end` for method".into(),
                        span: start,
                    });
                    break;
                }
                _ => match self.statement(Context::Method) {
                    Ok(s) => body.push(s),
                    Err(e) => {
                        self.errors.push(e);
                        self.sync_to_line_end();
                    }
                },
            }
        }

        let (name, params) = header.ok()?;
        Some(MethodDef {
            name,
            params,
            body,
            span: start.to(self.prev_span()),
        })
    }

    fn method_header(&mut self) -> PResult<(Name, Vec<Name>)> {
        let tok = self.peek();
        if tok.kind != TokenKind::Ident {
            return Err(self.error_here(format!(
                "expected method name, found {}",
                tok.kind
            )));
        }
        self.bump();
        let name = Name {
            text: tok.lexeme.clone(),
            span: tok.span,
        };
        let mut params = Vec::new();
        if self.at_op(Op::LParen) {
            self.bump();
            if !self.at_op(Op::RParen) {
                params = self.param_list()?;
            }
            self.expect_op(Op::RParen, "`)`")?;
        } else if self.kind() == TokenKind::Ident {
            params = self.param_list()?;
        }
        self.end_of_statement()?;
        Ok((name, params))
    }

    fn param_list(&mut self) -> PResult<Vec<Name>> {
        let mut params: Vec<Name> = Vec::new();
        loop {
            let tok = self.peek();
            if tok.kind != TokenKind::Ident {
                return Err(self.error_here(format!("expected parameter name, found {}", tok.kind)));
            }
            if params.iter().any(|p| p.text == tok.lexeme) {
                return Err(self.error_here(format!("duplicate parameter `{}`", tok.lexeme)));
            }
            self.bump();
            params.push(Name {
                text: tok.lexeme.clone(),
                span: tok.span,
            });
            if self.at_op(Op::Comma) {
                self.bump();
            } else {
                return Ok(params);
            }
        }
    }

    fn statement(&mut self, ctx: Context) -> PResult<Stmt> {
        let start = self.peek().span;
        let kind = self.statement_kind(ctx)?;
        let span = start.to(self.prev_span());
        self.end_of_statement()?;
        Ok(Stmt { kind, span })
    }

    fn statement_kind(&mut self, ctx: Context) -> PResult<StmtKind> {
        let tok = self.peek();
        let next = self.peek_at(1);
        match tok.kind {
            TokenKind::IVar if next.kind == TokenKind::Op(Op::Assign) => {
                if ctx != Context::Method {
                    return Err(self.error_here(
                        "instance variable assignment is only allowed inside a method",
                    ));
                }
                self.bump();
                self.bump();
                let value = self.expr()?;
                Ok(StmtKind::IVarAssign {
                    name: Name {
                        text: tok.lexeme.clone(),
                        span: tok.span,
                    },
                    value,
                })
            }
            TokenKind::Ident if next.kind == TokenKind::Op(Op::Assign) => {
                self.bump();
                self.bump();
                let value = self.expr()?;
                Ok(StmtKind::LocalAssign {
                    name: Name {
                        text: tok.lexeme.clone(),
                        span: tok.span,
                    },
                    value,
                })
            }
            TokenKind::Ident
                if tok.lexeme == "puts" && next.kind != TokenKind::Op(Op::Dot) =>
            {
                self.bump();
                let value = self.expr()?;
                Ok(StmtKind::Puts { value })
            }
            TokenKind::Keyword(Keyword::Return) => {
                self.bump();
                let value = self.expr()?;
                Ok(StmtKind::Return { value })
            }
            TokenKind::Keyword(Keyword::Super) => {
                if ctx != Context::Method {
                    return Err(self.error_here("`super` is only allowed inside a method"));
                }
                self.bump();
                let args = if self.at_op(Op::LParen) {
                    self.paren_args()?
                } else if self.starts_expr() {
                    self.args()?
                } else {
                    Vec::new()
                };
                Ok(StmtKind::Super { args })
            }
            _ => {
                let expr = self.expr()?;
                if !self.at_op(Op::Assign) {
                    return Ok(StmtKind::Expr { expr });
                }
                match expr.kind {
                    ExprKind::Call {
                        receiver,
                        name,
                        args,
                    } if args.is_empty() => {
                        self.bump();
                        let value = self.expr()?;
                        Ok(StmtKind::AttrWrite {
                            receiver: *receiver,
                            attr: name,
                            value,
                        })
                    }
                    _ => Err(self.error_here("invalid assignment target")),
                }
            }
        }
    }

    fn starts_expr(&self) -> bool {
        matches!(
            self.kind(),
            TokenKind::StringLit
                | TokenKind::IntLit
                | TokenKind::IVar
                | TokenKind::Ident
                | TokenKind::Const
                | TokenKind::Keyword(Keyword::Nil | Keyword::True | Keyword::False | Keyword::SelfKw)
        )
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut expr = self.primary()?;
        while self.at_op(Op::Dot) {
            self.bump();
            let tok = self.peek();
            if tok.kind != TokenKind::Ident {
                return Err(self.error_here(format!("expected method name after `.`, found {}", tok.kind)));
            }
            self.bump();
            let name = Name {
                text: tok.lexeme.clone(),
                span: tok.span,
            };
            let args = if self.at_op(Op::LParen) {
                self.paren_args()?
            } else if self.starts_expr() {
                // command-call style: `Person.new name, address`
                self.args()?
            } else {
                Vec::new()
            };
            let span = expr.span.to(self.prev_span());
            expr = Expr {
                kind: ExprKind::Call {
                    receiver: Box::new(expr),
                    name,
                    args,
                },
                span,
            };
        }
        Ok(expr)
    }

    fn paren_args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_op(Op::LParen, "`(`")?;
        let args = if self.at_op(Op::RParen) {
            Vec::new()
        } else {
            self.args()?
        };
        self.expect_op(Op::RParen, "`)`")?;
        Ok(args)
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        let mut args = vec![self.expr()?];
        while self.at_op(Op::Comma) {
            self.bump();
            args.push(self.expr()?);
        }
        Ok(args)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let tok = self.peek();
        let kind = match tok.kind {
            TokenKind::StringLit => ExprKind::Str(unescape_string(&tok.lexeme)),
            TokenKind::IntLit => match tok.lexeme.parse::<i64>() {
                Ok(n) => ExprKind::Int(n),
                Err(_) => return Err(self.error_here("integer literal out of range")),
            },
            TokenKind::Keyword(Keyword::Nil) => ExprKind::Nil,
            TokenKind::Keyword(Keyword::True) => ExprKind::Bool(true),
            TokenKind::Keyword(Keyword::False) => ExprKind::Bool(false),
            TokenKind::Keyword(Keyword::SelfKw) => ExprKind::SelfRef,
            TokenKind::IVar => ExprKind::IVar(tok.lexeme.clone()),
            TokenKind::Ident => ExprKind::Local(tok.lexeme.clone()),
            TokenKind::Const => ExprKind::Const(tok.lexeme.clone()),
            other => return Err(self.error_here(format!("expected expression, found {other}"))),
        };
        self.bump();
        Ok(Expr {
            kind,
            span: tok.span,
        })
    }
}
