use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::syntax::{
    AttrKind, ClassDef, Expr, ExprKind, Item, Member, MethodDef, SourceSpan, Stmt, StmtKind,
    SyntaxTree,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("inheritance cycle: {}", .cycle.join(" -> "))]
    InheritanceCycle { cycle: Vec<String>, span: SourceSpan },
}

impl ModelError {
    pub fn span(&self) -> SourceSpan {
        match self {
            ModelError::InheritanceCycle { span, .. } => *span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttrInfo {
    pub kind: AttrKind,
    pub span: SourceSpan,
}

/// What a selector resolves to inside one class, after later definitions
/// have replaced earlier ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Dispatch {
    /// Synthesized `attr_reader`/`attr_accessor` reader of `@attr`.
    Reader { attr: String, span: SourceSpan },
    /// Synthesized `attr_writer`/`attr_accessor` writer `attr=`.
    Writer { attr: String, span: SourceSpan },
    /// Explicit `def`, keyed into [`ClassInfo::methods`].
    Method,
}

/// A statement index inside a method body plus the statement's span.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StmtRef {
    pub position: usize,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IvarWrite {
    pub ivar: String,
    pub position: usize,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReturnShape {
    /// `@x`
    RawIVar(String),
    /// `@x.clone`
    ClonedIVar(String),
    /// `@x.m`, or `@x.m.clone` when `cloned` is set.
    Delegated {
        ivar: String,
        method: String,
        cloned: bool,
    },
    Literal,
    SelfRef,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodInfo {
    pub name: String,
    pub params: Vec<String>,
    pub span: SourceSpan,
    pub name_span: SourceSpan,
    pub body: Vec<Stmt>,
    /// Assignments to the receiver's own instance variables, including
    /// `self.x = v` which goes through the `x=` writer.
    pub ivar_writes: Vec<IvarWrite>,
    /// Attribute writes on objects held in instance variables (`@a.b = v`).
    pub nested_writes: Vec<StmtRef>,
    pub calls_self_freeze: Option<StmtRef>,
    pub calls_super: Option<StmtRef>,
    pub frozen_ivars: BTreeSet<String>,
    /// `(ivar, attr)` pairs frozen through `@ivar.attr.freeze`.
    pub frozen_wrapped_attrs: BTreeSet<(String, String)>,
    pub return_shape: ReturnShape,
    /// Expression whose value the method returns, if any.
    pub return_expr: Option<Expr>,
}

impl MethodInfo {
    fn from_def(def: &MethodDef) -> Self {
        let mut info = MethodInfo {
            name: def.name.text.clone(),
            params: def.params.iter().map(|p| p.text.clone()).collect(),
            span: def.span,
            name_span: def.name.span,
            body: def.body.clone(),
            ivar_writes: Vec::new(),
            nested_writes: Vec::new(),
            calls_self_freeze: None,
            calls_super: None,
            frozen_ivars: BTreeSet::new(),
            frozen_wrapped_attrs: BTreeSet::new(),
            return_shape: ReturnShape::Literal,
            return_expr: None,
        };

        for (position, stmt) in def.body.iter().enumerate() {
            let here = StmtRef {
                position,
                span: stmt.span,
            };
            match &stmt.kind {
                StmtKind::IVarAssign { name, .. } => info.ivar_writes.push(IvarWrite {
                    ivar: name.text.clone(),
                    position,
                    span: stmt.span,
                }),
                StmtKind::AttrWrite { receiver, attr, .. } => match &receiver.kind {
                    ExprKind::SelfRef => info.ivar_writes.push(IvarWrite {
                        ivar: format!("@{}", attr.text),
                        position,
                        span: stmt.span,
                    }),
                    _ if receiver.root_ivar().is_some() => info.nested_writes.push(here),
                    _ => {}
                },
                StmtKind::Super { .. } => {
                    info.calls_super.get_or_insert(here);
                }
                StmtKind::Expr { expr } => {
                    if let Some((recv, "freeze", [])) = expr.as_call() {
                        match &recv.kind {
                            ExprKind::SelfRef => {
                                info.calls_self_freeze.get_or_insert(here);
                            }
                            ExprKind::IVar(iv) => {
                                info.frozen_ivars.insert(iv.clone());
                            }
                            _ => {
                                if let Some((inner, attr, [])) = recv.as_call() {
                                    if let ExprKind::IVar(iv) = &inner.kind {
                                        info.frozen_wrapped_attrs
                                            .insert((iv.clone(), attr.to_string()));
                                    }
                                }
                            }
                        }
                    }
                }
                StmtKind::LocalAssign { .. } | StmtKind::Return { .. } | StmtKind::Puts { .. } => {}
            }
        }

        let returned = def
            .body
            .iter()
            .find(|s| matches!(s.kind, StmtKind::Return { .. }))
            .or_else(|| def.body.last());
        if let Some(stmt) = returned {
            let expr = match &stmt.kind {
                StmtKind::Return { value }
                | StmtKind::Expr { expr: value }
                | StmtKind::IVarAssign { value, .. }
                | StmtKind::LocalAssign { value, .. }
                | StmtKind::AttrWrite { value, .. } => Some(value.clone()),
                StmtKind::Puts { .. } => None,
                StmtKind::Super { .. } => {
                    info.return_shape = ReturnShape::Other;
                    None
                }
            };
            if let Some(e) = expr {
                info.return_shape = return_shape(&e);
                info.return_expr = Some(e);
            }
        }
        info
    }

    pub fn is_constructor(&self) -> bool {
        self.name == "initialize"
    }

    /// True when calling the method can change state reachable from the
    /// receiver's instance variables.
    pub fn writes_state(&self) -> bool {
        !self.ivar_writes.is_empty() || !self.nested_writes.is_empty()
    }

    pub fn first_state_write_span(&self) -> Option<SourceSpan> {
        let a = self.ivar_writes.first().map(|w| (w.position, w.span));
        let b = self.nested_writes.first().map(|w| (w.position, w.span));
        match (a, b) {
            (Some(x), Some(y)) => Some(x.min(y).1),
            (x, y) => x.or(y).map(|p| p.1),
        }
    }
}

pub(crate) fn return_shape(e: &Expr) -> ReturnShape {
    if e.is_literal() {
        return ReturnShape::Literal;
    }
    match &e.kind {
        ExprKind::IVar(iv) => ReturnShape::RawIVar(iv.clone()),
        ExprKind::SelfRef => ReturnShape::SelfRef,
        ExprKind::Call {
            receiver,
            name,
            args,
        } if args.is_empty() => match (&receiver.kind, name.text.as_str()) {
            (_, "frozen?") => ReturnShape::Literal,
            (ExprKind::IVar(iv), "clone") => ReturnShape::ClonedIVar(iv.clone()),
            (ExprKind::IVar(_), "freeze") => ReturnShape::Other,
            (ExprKind::IVar(iv), m) => ReturnShape::Delegated {
                ivar: iv.clone(),
                method: m.to_string(),
                cloned: false,
            },
            (_, "clone") => match return_shape(receiver) {
                ReturnShape::Delegated {
                    ivar,
                    method,
                    cloned: false,
                } => ReturnShape::Delegated {
                    ivar,
                    method,
                    cloned: true,
                },
                _ => ReturnShape::Other,
            },
            _ => ReturnShape::Other,
        },
        _ => ReturnShape::Other,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassInfo {
    pub name: String,
    pub name_span: SourceSpan,
    pub superclass: Option<String>,
    pub attrs: BTreeMap<String, AttrInfo>,
    pub methods: BTreeMap<String, MethodInfo>,
    /// Selector → effective definition; a later definition replaces an
    /// earlier one regardless of whether it came from `attr_*` or `def`.
    pub dispatch: BTreeMap<String, Dispatch>,
    pub definition_spans: Vec<SourceSpan>,
    pub reopened: bool,
}

impl ClassInfo {
    fn new(def: &ClassDef) -> Self {
        ClassInfo {
            name: def.name.text.clone(),
            name_span: def.name.span,
            superclass: None,
            attrs: BTreeMap::new(),
            methods: BTreeMap::new(),
            dispatch: BTreeMap::new(),
            definition_spans: Vec::new(),
            reopened: false,
        }
    }

    fn merge(&mut self, def: &ClassDef) {
        self.definition_spans.push(def.span);
        self.reopened = self.definition_spans.len() > 1;
        if self.superclass.is_none() {
            self.superclass = def.superclass.as_ref().map(|s| s.text.clone());
        }
        for member in &def.members {
            match member {
                Member::Attr(decl) => {
                    for name in &decl.names {
                        self.attrs.insert(
                            name.text.clone(),
                            AttrInfo {
                                kind: decl.kind,
                                span: decl.span,
                            },
                        );
                        if decl.kind.has_reader() {
                            self.methods.remove(&name.text);
                            self.dispatch.insert(
                                name.text.clone(),
                                Dispatch::Reader {
                                    attr: name.text.clone(),
                                    span: decl.span,
                                },
                            );
                        }
                        if decl.kind.has_writer() {
                            self.dispatch.insert(
                                format!("{}=", name.text),
                                Dispatch::Writer {
                                    attr: name.text.clone(),
                                    span: decl.span,
                                },
                            );
                        }
                    }
                }
                Member::Method(def) => {
                    let info = MethodInfo::from_def(def);
                    self.dispatch.insert(info.name.clone(), Dispatch::Method);
                    self.methods.insert(info.name.clone(), info);
                }
            }
        }
    }

    pub fn constructor(&self) -> Option<&MethodInfo> {
        self.methods.get("initialize")
    }

    pub fn span(&self) -> SourceSpan {
        self.definition_spans[0]
    }
}

/// Where a `Const.new(...)` or `super(...)` call appears.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SiteContext {
    TopLevel,
    Method { class: String, method: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallSite {
    pub args: Vec<Expr>,
    pub context: SiteContext,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClassGraph {
    pub classes: BTreeMap<String, ClassInfo>,
    /// (subclass, superclass) pairs, in class-name order.
    pub edges: Vec<(String, String)>,
    pub unresolved: BTreeSet<String>,
    /// Class name → every `Name.new(...)` in the program.
    pub new_sites: BTreeMap<String, Vec<CallSite>>,
    /// Class name → `super(...)` calls made from that class's constructor.
    pub super_sites: BTreeMap<String, Vec<CallSite>>,
    /// Top-level statements, in order (the program's driver script).
    pub top_level: Vec<Stmt>,
}

impl ClassGraph {
    pub fn get(&self, name: &str) -> Option<&ClassInfo> {
        self.classes.get(name)
    }

    /// The class followed by its resolved ancestors, nearest first.
    pub fn ancestors<'a>(&'a self, name: &str) -> Vec<&'a ClassInfo> {
        let mut out = Vec::new();
        let mut cur = self.classes.get(name);
        while let Some(c) = cur {
            out.push(c);
            cur = c.superclass.as_deref().and_then(|s| self.classes.get(s));
            if out.len() > self.classes.len() {
                break;
            }
        }
        out
    }

    /// Resolves a selector starting at `class`, returning the defining class.
    pub fn lookup<'a>(&'a self, class: &str, selector: &str) -> Option<(&'a ClassInfo, &'a Dispatch)> {
        self.ancestors(class)
            .into_iter()
            .find_map(|c| c.dispatch.get(selector).map(|d| (c, d)))
    }

    pub fn lookup_method<'a>(&'a self, class: &str, name: &str) -> Option<(&'a ClassInfo, &'a MethodInfo)> {
        match self.lookup(class, name)? {
            (c, Dispatch::Method) => c.methods.get(name).map(|m| (c, m)),
            _ => None,
        }
    }

    /// Nearest class (self included) that defines `initialize`.
    pub fn constructor_owner<'a>(&'a self, class: &str) -> Option<&'a ClassInfo> {
        self.ancestors(class)
            .into_iter()
            .find(|c| c.constructor().is_some())
    }

    /// Every selector visible on `class` with its defining class, sorted.
    pub fn visible_selectors<'a>(&'a self, class: &str) -> BTreeMap<&'a str, (&'a ClassInfo, &'a Dispatch)> {
        let mut out = BTreeMap::new();
        for c in self.ancestors(class) {
            for (sel, d) in &c.dispatch {
                out.entry(sel.as_str()).or_insert((c, d));
            }
        }
        out
    }
}

/// Builds the class graph. Reopened classes are merged in source order.
pub fn build_model(tree: &SyntaxTree) -> Result<ClassGraph, ModelError> {
    let mut graph = ClassGraph::default();
    for item in &tree.items {
        match item {
            Item::Class(def) => {
                graph
                    .classes
                    .entry(def.name.text.clone())
                    .or_insert_with(|| ClassInfo::new(def))
                    .merge(def);
                for member in &def.members {
                    if let Member::Method(m) = member {
                        let ctx = SiteContext::Method {
                            class: def.name.text.clone(),
                            method: m.name.text.clone(),
                        };
                        for stmt in &m.body {
                            collect_sites(stmt, &ctx, &mut graph);
                        }
                    }
                }
            }
            Item::Stmt(stmt) => {
                collect_sites(stmt, &SiteContext::TopLevel, &mut graph);
                graph.top_level.push(stmt.clone());
            }
        }
    }

    for c in graph.classes.values() {
        if let Some(sup) = &c.superclass {
            if graph.classes.contains_key(sup) {
                graph.edges.push((c.name.clone(), sup.clone()));
            } else {
                graph.unresolved.insert(sup.clone());
            }
        }
    }
    check_cycles(&graph)?;
    Ok(graph)
}

fn check_cycles(graph: &ClassGraph) -> Result<(), ModelError> {
    for start in graph.classes.values() {
        let mut path = vec![start.name.clone()];
        let mut cur = start;
        while let Some(sup) = cur.superclass.as_deref().and_then(|s| graph.classes.get(s)) {
            if sup.name == start.name {
                path.push(sup.name.clone());
                return Err(ModelError::InheritanceCycle {
                    cycle: path,
                    span: start.name_span,
                });
            }
            if path.contains(&sup.name) {
                // cycle not through `start`; reported when its members are visited
                break;
            }
            path.push(sup.name.clone());
            cur = sup;
        }
    }
    Ok(())
}

fn collect_sites(stmt: &Stmt, ctx: &SiteContext, graph: &mut ClassGraph) {
    match &stmt.kind {
        StmtKind::IVarAssign { value, .. }
        | StmtKind::LocalAssign { value, .. }
        | StmtKind::Return { value }
        | StmtKind::Puts { value }
        | StmtKind::Expr { expr: value } => collect_expr_sites(value, ctx, graph),
        StmtKind::AttrWrite {
            receiver, value, ..
        } => {
            collect_expr_sites(receiver, ctx, graph);
            collect_expr_sites(value, ctx, graph);
        }
        StmtKind::Super { args } => {
            for a in args {
                collect_expr_sites(a, ctx, graph);
            }
            if let SiteContext::Method { class, method } = ctx {
                if method == "initialize" {
                    graph
                        .super_sites
                        .entry(class.clone())
                        .or_default()
                        .push(CallSite {
                            args: args.clone(),
                            context: ctx.clone(),
                        });
                }
            }
        }
    }
}

fn collect_expr_sites(e: &Expr, ctx: &SiteContext, graph: &mut ClassGraph) {
    if let ExprKind::Call { receiver, args, .. } = &e.kind {
        collect_expr_sites(receiver, ctx, graph);
        for a in args {
            collect_expr_sites(a, ctx, graph);
        }
    }
    if let Some((class, args)) = e.as_constructor_call() {
        graph
            .new_sites
            .entry(class.to_string())
            .or_default()
            .push(CallSite {
                args: args.to_vec(),
                context: ctx.clone(),
            });
    }
}
