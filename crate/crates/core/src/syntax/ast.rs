use std::fmt;

use serde::Serialize;

use super::span::SourceSpan;

/// An identifier-like token together with where it was written.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Name {
    pub text: String,
    pub span: SourceSpan,
}

impl Name {
    pub fn as_str(&self) -> &str {
        &self.text
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct SyntaxTree {
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "item", rename_all = "snake_case")]
pub enum Item {
    Class(ClassDef),
    Stmt(Stmt),
}

impl Item {
    pub fn span(&self) -> SourceSpan {
        match self {
            Item::Class(c) => c.span,
            Item::Stmt(s) => s.span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassDef {
    pub name: Name,
    pub superclass: Option<Name>,
    pub members: Vec<Member>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "member", rename_all = "snake_case")]
pub enum Member {
    Attr(AttrDecl),
    Method(MethodDef),
}

impl Member {
    pub fn span(&self) -> SourceSpan {
        match self {
            Member::Attr(a) => a.span,
            Member::Method(m) => m.span,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AttrKind {
    Reader,
    Writer,
    Accessor,
}

impl AttrKind {
    pub fn keyword(self) -> &'static str {
        match self {
            AttrKind::Reader => "attr_reader",
            AttrKind::Writer => "attr_writer",
            AttrKind::Accessor => "attr_accessor",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        match word {
            "attr_reader" => Some(AttrKind::Reader),
            "attr_writer" => Some(AttrKind::Writer),
            "attr_accessor" => Some(AttrKind::Accessor),
            _ => None,
        }
    }

    pub fn has_reader(self) -> bool {
        matches!(self, AttrKind::Reader | AttrKind::Accessor)
    }

    pub fn has_writer(self) -> bool {
        matches!(self, AttrKind::Writer | AttrKind::Accessor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttrDecl {
    pub kind: AttrKind,
    /// Attribute names without the leading `:`.
    pub names: Vec<Name>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MethodDef {
    pub name: Name,
    pub params: Vec<Name>,
    pub body: Vec<Stmt>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "stmt", rename_all = "snake_case")]
pub enum StmtKind {
    /// `@name = value`; the name keeps its `@`.
    IVarAssign { name: Name, value: Expr },
    LocalAssign { name: Name, value: Expr },
    /// `receiver.attr = value`, dispatched to the `attr=` writer.
    AttrWrite { receiver: Expr, attr: Name, value: Expr },
    Expr { expr: Expr },
    Return { value: Expr },
    Puts { value: Expr },
    Super { args: Vec<Expr> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "expr", content = "value", rename_all = "snake_case")]
pub enum ExprKind {
    Str(String),
    Int(i64),
    Nil,
    Bool(bool),
    SelfRef,
    IVar(String),
    Local(String),
    Const(String),
    Call {
        receiver: Box<Expr>,
        name: Name,
        args: Vec<Expr>,
    },
}

impl Expr {
    pub fn is_literal(&self) -> bool {
        matches!(
            self.kind,
            ExprKind::Str(_) | ExprKind::Int(_) | ExprKind::Nil | ExprKind::Bool(_)
        )
    }

    /// `Const.new(...)`: returns the constant name and the arguments.
    pub fn as_constructor_call(&self) -> Option<(&str, &[Expr])> {
        match &self.kind {
            ExprKind::Call {
                receiver,
                name,
                args,
            } if name.text == "new" => match &receiver.kind {
                ExprKind::Const(c) => Some((c.as_str(), args.as_slice())),
                _ => None,
            },
            _ => None,
        }
    }

    /// `receiver.name(args)` split into its parts.
    pub fn as_call(&self) -> Option<(&Expr, &str, &[Expr])> {
        match &self.kind {
            ExprKind::Call {
                receiver,
                name,
                args,
            } => Some((receiver, name.text.as_str(), args.as_slice())),
            _ => None,
        }
    }

    /// The instance variable at the root of a call chain such as `@a.b.c`.
    pub fn root_ivar(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::IVar(name) => Some(name),
            ExprKind::Call { receiver, .. } => receiver.root_ivar(),
            _ => None,
        }
    }
}

/// Structural visitor over every span in a tree; used to compare trees
/// modulo source positions.
pub trait SpanVisitor {
    fn visit(&mut self, span: &mut SourceSpan);
}

impl SyntaxTree {
    pub fn walk_spans(&mut self, v: &mut impl SpanVisitor) {
        for item in &mut self.items {
            match item {
                Item::Class(c) => walk_class(c, v),
                Item::Stmt(s) => walk_stmt(s, v),
            }
        }
    }

    /// Copy of the tree with every span reset, for shape comparisons.
    pub fn without_spans(&self) -> SyntaxTree {
        struct Clear;
        impl SpanVisitor for Clear {
            fn visit(&mut self, span: &mut SourceSpan) {
                *span = SourceSpan::default();
            }
        }
        let mut t = self.clone();
        t.walk_spans(&mut Clear);
        t
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassDef> {
        self.items.iter().filter_map(|i| match i {
            Item::Class(c) => Some(c),
            Item::Stmt(_) => None,
        })
    }
}

fn walk_class(c: &mut ClassDef, v: &mut impl SpanVisitor) {
    v.visit(&mut c.span);
    v.visit(&mut c.name.span);
    if let Some(s) = &mut c.superclass {
        v.visit(&mut s.span);
    }
    for m in &mut c.members {
        match m {
            Member::Attr(a) => {
                v.visit(&mut a.span);
                for n in &mut a.names {
                    v.visit(&mut n.span);
                }
            }
            Member::Method(m) => {
                v.visit(&mut m.span);
                v.visit(&mut m.name.span);
                for p in &mut m.params {
                    v.visit(&mut p.span);
                }
                for s in &mut m.body {
                    walk_stmt(s, v);
                }
            }
        }
    }
}

fn walk_stmt(s: &mut Stmt, v: &mut impl SpanVisitor) {
    v.visit(&mut s.span);
    match &mut s.kind {
        StmtKind::IVarAssign { name, value } | StmtKind::LocalAssign { name, value } => {
            v.visit(&mut name.span);
            walk_expr(value, v);
        }
        StmtKind::AttrWrite {
            receiver,
            attr,
            value,
        } => {
            walk_expr(receiver, v);
            v.visit(&mut attr.span);
            walk_expr(value, v);
        }
        StmtKind::Expr { expr: e } | StmtKind::Return { value: e } | StmtKind::Puts { value: e } => {
            walk_expr(e, v)
        }
        StmtKind::Super { args } => {
            for a in args {
                walk_expr(a, v);
            }
        }
    }
}

fn walk_expr(e: &mut Expr, v: &mut impl SpanVisitor) {
    v.visit(&mut e.span);
    if let ExprKind::Call {
        receiver,
        name,
        args,
    } = &mut e.kind
    {
        walk_expr(receiver, v);
        v.visit(&mut name.span);
        for a in args {
            walk_expr(a, v);
        }
    }
}
