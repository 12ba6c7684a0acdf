//! Syntactic value-origin analysis.
//!
//! Every value is abstracted to either a value type (string, integer, nil,
//! boolean: immutable by construction) or a possibly-mutable object. Values
//! of constructor parameters are traced back to the `Const.new(...)` and
//! `super(...)` call sites that supply them; anything else that is not a
//! literal is treated as a possibly-mutable object. A constructor parameter
//! with no call site at all is assumed value-typed.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::rc::Rc;

use crate::syntax::{Expr, ExprKind, StmtKind};

use super::graph::{CallSite, ClassGraph, Dispatch, SiteContext};

/// Nested constructions deeper than this are not summarized.
const MAX_DEPTH: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AbstractValue {
    Value,
    Object {
        class: Option<String>,
        /// Field summary when the object is constructed in place.
        summary: Option<Rc<ObjectSummary>>,
    },
}

impl AbstractValue {
    pub fn unknown_object() -> Self {
        AbstractValue::Object {
            class: None,
            summary: None,
        }
    }

    fn object_of(class: &str) -> Self {
        AbstractValue::Object {
            class: Some(class.to_string()),
            summary: None,
        }
    }

    pub fn is_value(&self) -> bool {
        matches!(self, AbstractValue::Value)
    }

    pub fn class(&self) -> Option<&str> {
        match self {
            AbstractValue::Object { class, .. } => class.as_deref(),
            AbstractValue::Value => None,
        }
    }

    pub fn summary(&self) -> Option<&ObjectSummary> {
        match self {
            AbstractValue::Object { summary, .. } => summary.as_deref(),
            AbstractValue::Value => None,
        }
    }

    /// Least upper bound: objects absorb values, disagreeing classes widen.
    pub fn join(self, other: AbstractValue) -> AbstractValue {
        match (self, other) {
            (AbstractValue::Value, v) | (v, AbstractValue::Value) => match v {
                AbstractValue::Value => AbstractValue::Value,
                AbstractValue::Object { class, .. } => AbstractValue::Object {
                    class,
                    summary: None,
                },
            },
            (a, b) if a == b => a,
            (AbstractValue::Object { class: ca, .. }, AbstractValue::Object { class: cb, .. }) => {
                AbstractValue::Object {
                    class: if ca == cb { ca } else { None },
                    summary: None,
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IvarState {
    pub value: AbstractValue,
    pub frozen: bool,
    /// Attributes of the held object frozen via `@ivar.attr.freeze`.
    pub frozen_attrs: BTreeSet<String>,
}

impl IvarState {
    fn assigned(value: AbstractValue) -> Self {
        IvarState {
            frozen: value.is_value(),
            value,
            frozen_attrs: BTreeSet::new(),
        }
    }

    pub fn nil() -> Self {
        Self::assigned(AbstractValue::Value)
    }
}

/// Abstract state of an instance right after its constructor chain ran.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ObjectSummary {
    pub class: String,
    pub ivars: BTreeMap<String, IvarState>,
    pub self_frozen: bool,
}

impl ObjectSummary {
    /// State of an instance variable; unassigned ones hold nil.
    pub fn ivar(&self, name: &str) -> IvarState {
        self.ivars.get(name).cloned().unwrap_or_else(IvarState::nil)
    }
}

/// Memoizing analyzer over one class graph.
pub struct FlowAnalysis<'g> {
    graph: &'g ClassGraph,
    /// `new` and `super` sites grouped by the class whose `initialize` they reach.
    sites_by_owner: HashMap<&'g str, Vec<&'g CallSite>>,
    memo: HashMap<FlowKey, AbstractValue>,
    /// Keys under evaluation, with the approximation recursive uses see.
    in_progress: HashMap<FlowKey, AbstractValue>,
    /// Set when a result depended on an in-progress approximation.
    used_approximation: bool,
    summary_memo: HashMap<String, Rc<ObjectSummary>>,
    top_locals: HashMap<String, AbstractValue>,
}

/// A flow variable: a constructor parameter, or an instance variable as
/// seen from methods of a class.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum FlowKey {
    Param(String, usize),
    Ivar(String, String),
}

/// Rounds of refinement before a recursive flow gives up on precision.
const MAX_ROUNDS: usize = 8;

struct Frame<'a> {
    /// Class whose `initialize` is executing.
    owner: &'a str,
    params: &'a [String],
    bindings: Vec<AbstractValue>,
    locals: HashMap<String, AbstractValue>,
}

impl<'g> FlowAnalysis<'g> {
    pub fn new(graph: &'g ClassGraph) -> Self {
        let mut top_locals: HashMap<String, AbstractValue> = HashMap::new();
        for stmt in &graph.top_level {
            if let StmtKind::LocalAssign { name, value } = &stmt.kind {
                let v = shallow_eval(value);
                let joined = match top_locals.remove(&name.text) {
                    Some(prev) => prev.join(v),
                    None => v,
                };
                top_locals.insert(name.text.clone(), joined);
            }
        }
        let mut sites_by_owner: HashMap<&'g str, Vec<&'g CallSite>> = HashMap::new();
        for (class, class_sites) in &graph.new_sites {
            if let Some(owner) = graph.constructor_owner(class) {
                sites_by_owner.entry(owner.name.as_str()).or_default().extend(class_sites);
            }
        }
        for (class, class_sites) in &graph.super_sites {
            let parent_owner = graph
                .get(class)
                .and_then(|c| c.superclass.as_deref())
                .and_then(|s| graph.constructor_owner(s));
            if let Some(owner) = parent_owner {
                sites_by_owner.entry(owner.name.as_str()).or_default().extend(class_sites);
            }
        }
        FlowAnalysis {
            graph,
            sites_by_owner,
            memo: HashMap::new(),
            in_progress: HashMap::new(),
            used_approximation: false,
            summary_memo: HashMap::new(),
            top_locals,
        }
    }

    pub fn graph(&self) -> &'g ClassGraph {
        self.graph
    }

    /// Abstract state of a `class` instance built through any of its
    /// `class.new(...)` call sites.
    pub fn instance_summary(&mut self, class: &str) -> Rc<ObjectSummary> {
        if let Some(s) = self.summary_memo.get(class) {
            return s.clone();
        }
        let arity = self
            .graph
            .constructor_owner(class)
            .and_then(|c| c.constructor())
            .map_or(0, |m| m.params.len());
        let graph = self.graph;
        let sites: Vec<&CallSite> = graph.new_sites.get(class).map(|v| v.iter().collect()).unwrap_or_default();
        let bindings = (0..arity)
            .map(|i| self.join_sites(&sites, i))
            .collect();
        let summary = Rc::new(self.construct(class, bindings, 0));
        self.summary_memo.insert(class.to_string(), summary.clone());
        summary
    }

    /// Abstract value a constructor parameter of `owner` can receive, over
    /// every `new` and `super` call site that reaches that constructor.
    pub fn param_flow(&mut self, owner: &str, index: usize) -> AbstractValue {
        self.solve(FlowKey::Param(owner.to_string(), index))
    }

    /// Least solution for `key`. Recursive uses see the current
    /// approximation (starting from value-typed) and the key is re-evaluated
    /// until it stops growing. Results that leaned on an enclosing key's
    /// approximation are not memoized.
    fn solve(&mut self, key: FlowKey) -> AbstractValue {
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        if let Some(v) = self.in_progress.get(&key) {
            self.used_approximation = true;
            return v.clone();
        }
        let outer = std::mem::replace(&mut self.used_approximation, false);
        self.in_progress.insert(key.clone(), AbstractValue::Value);
        let mut rounds = 0;
        let v = loop {
            self.used_approximation = false;
            let v = self.evaluate(&key);
            if !self.used_approximation || self.in_progress[&key] == v {
                break v;
            }
            rounds += 1;
            if rounds == MAX_ROUNDS {
                break AbstractValue::unknown_object();
            }
            self.in_progress.insert(key.clone(), v);
        };
        self.in_progress.remove(&key);
        // only a dependency on some other, still-open key taints the result
        let tainted = self.used_approximation && !self.in_progress.is_empty();
        if !tainted {
            self.memo.insert(key, v.clone());
        }
        self.used_approximation = outer || tainted;
        v
    }

    fn evaluate(&mut self, key: &FlowKey) -> AbstractValue {
        match key {
            FlowKey::Param(owner, index) => {
                let sites = self.sites_by_owner.get(owner.as_str()).cloned().unwrap_or_default();
                self.join_sites(&sites, *index)
            }
            FlowKey::Ivar(class, ivar) => self.ivar_values(class, ivar),
        }
    }

    /// What `ivar` can hold when read by a method defined in `class`: the
    /// receiver is an instance of `class` or of one of its descendants.
    fn ivar_values(&mut self, class: &str, ivar: &str) -> AbstractValue {
        let graph = self.graph;
        let attr = ivar.trim_start_matches('@');
        let mut acc = AbstractValue::Value;
        let mut seen = HashSet::new();
        for sub in graph.classes.values() {
            let chain = graph.ancestors(&sub.name);
            if !chain.iter().any(|c| c.name == class) {
                continue;
            }
            for c in chain {
                if !seen.insert(c.name.as_str()) {
                    continue;
                }
                for (selector, d) in &c.dispatch {
                    let rebinds = match d {
                        Dispatch::Writer { attr: a, .. } => a == attr,
                        Dispatch::Reader { .. } => false,
                        Dispatch::Method => c.methods[selector].ivar_writes.iter().any(|w| w.ivar == ivar),
                    };
                    if rebinds && selector != "initialize" {
                        return AbstractValue::unknown_object();
                    }
                }
                let Some(init) = c.constructor() else { continue };
                let ctx = SiteContext::Method {
                    class: c.name.clone(),
                    method: "initialize".to_string(),
                };
                for stmt in &init.body {
                    if let StmtKind::IVarAssign { name, value } = &stmt.kind {
                        if name.text == ivar {
                            let v = self.eval_at_site(value, &ctx);
                            acc = acc.join(v);
                        }
                    }
                }
            }
        }
        acc
    }

    fn join_sites(&mut self, sites: &[&CallSite], index: usize) -> AbstractValue {
        let mut acc: Option<AbstractValue> = None;
        for site in sites {
            // arity mismatches fault at runtime, so no value flows
            let Some(arg) = site.args.get(index) else { continue };
            let v = self.eval_at_site(arg, &site.context);
            acc = Some(match acc {
                Some(a) => a.join(v),
                None => v,
            });
        }
        acc.unwrap_or(AbstractValue::Value)
    }

    fn eval_at_site(&mut self, e: &Expr, ctx: &SiteContext) -> AbstractValue {
        match &e.kind {
            ExprKind::Local(name) => match ctx {
                SiteContext::TopLevel => self
                    .top_locals
                    .get(name)
                    .cloned()
                    .unwrap_or_else(AbstractValue::unknown_object),
                SiteContext::Method { class, method } => {
                    let graph = self.graph;
                    let Some(m) = graph.get(class).and_then(|c| c.methods.get(method)) else {
                        return AbstractValue::unknown_object();
                    };
                    if let Some(i) = m.params.iter().position(|p| p == name) {
                        if m.is_constructor() {
                            return self.param_flow(class, i);
                        }
                        return AbstractValue::unknown_object();
                    }
                    let mut acc: Option<AbstractValue> = None;
                    for stmt in &m.body {
                        if let StmtKind::LocalAssign { name: n, value } = &stmt.kind {
                            if n.text == *name {
                                let v = shallow_eval(value);
                                acc = Some(match acc {
                                    Some(a) => a.join(v),
                                    None => v,
                                });
                            }
                        }
                    }
                    acc.unwrap_or_else(AbstractValue::unknown_object)
                }
            },
            ExprKind::IVar(iv) => match ctx {
                SiteContext::Method { class, .. } => self.solve(FlowKey::Ivar(class.clone(), iv.clone())),
                SiteContext::TopLevel => AbstractValue::unknown_object(),
            },
            _ => shallow_eval(e),
        }
    }

    fn construct(&mut self, class: &str, bindings: Vec<AbstractValue>, depth: usize) -> ObjectSummary {
        let mut summary = ObjectSummary {
            class: class.to_string(),
            ..ObjectSummary::default()
        };
        if let Some(owner) = self.graph.constructor_owner(class) {
            self.run_constructor(&owner.name, bindings, &mut summary, depth);
        }
        summary
    }

    fn run_constructor(
        &mut self,
        owner: &str,
        bindings: Vec<AbstractValue>,
        state: &mut ObjectSummary,
        depth: usize,
    ) {
        let graph = self.graph;
        let Some(init) = graph.get(owner).and_then(|c| c.constructor()) else {
            return;
        };
        let mut frame = Frame {
            owner,
            params: &init.params,
            bindings,
            locals: HashMap::new(),
        };
        for stmt in &init.body {
            match &stmt.kind {
                StmtKind::IVarAssign { name, value } => {
                    let v = self.eval_in_frame(value, &frame, state, depth);
                    state.ivars.insert(name.text.clone(), IvarState::assigned(v));
                }
                StmtKind::LocalAssign { name, value } => {
                    let v = self.eval_in_frame(value, &frame, state, depth);
                    frame.locals.insert(name.text.clone(), v);
                }
                StmtKind::AttrWrite {
                    receiver,
                    attr,
                    value,
                } if receiver.kind == ExprKind::SelfRef => {
                    let v = self.eval_in_frame(value, &frame, state, depth);
                    state
                        .ivars
                        .insert(format!("@{}", attr.text), IvarState::assigned(v));
                }
                StmtKind::Expr { expr } => {
                    if let Some((recv, "freeze", [])) = expr.as_call() {
                        match &recv.kind {
                            ExprKind::SelfRef => state.self_frozen = true,
                            ExprKind::IVar(iv) => {
                                state
                                    .ivars
                                    .entry(iv.clone())
                                    .or_insert_with(IvarState::nil)
                                    .frozen = true;
                            }
                            _ => {
                                if let Some((inner, attr, [])) = recv.as_call() {
                                    if let ExprKind::IVar(iv) = &inner.kind {
                                        state
                                            .ivars
                                            .entry(iv.clone())
                                            .or_insert_with(IvarState::nil)
                                            .frozen_attrs
                                            .insert(attr.to_string());
                                    }
                                }
                            }
                        }
                    }
                }
                StmtKind::Super { args } => {
                    let parent = graph
                        .get(frame.owner)
                        .and_then(|c| c.superclass.as_deref())
                        .and_then(|s| graph.constructor_owner(s));
                    if let Some(parent) = parent {
                        let values = args
                            .iter()
                            .map(|a| self.eval_in_frame(a, &frame, state, depth))
                            .collect();
                        self.run_constructor(&parent.name, values, state, depth);
                    }
                }
                StmtKind::Return { .. } => break,
                StmtKind::AttrWrite { .. } | StmtKind::Puts { .. } => {}
            }
        }
    }

    fn eval_in_frame(
        &mut self,
        e: &Expr,
        frame: &Frame<'_>,
        state: &ObjectSummary,
        depth: usize,
    ) -> AbstractValue {
        if e.is_literal() {
            return AbstractValue::Value;
        }
        match &e.kind {
            ExprKind::Local(name) => {
                if let Some(v) = frame.locals.get(name) {
                    return v.clone();
                }
                match frame.params.iter().position(|p| p == name) {
                    Some(i) => frame
                        .bindings
                        .get(i)
                        .cloned()
                        .unwrap_or(AbstractValue::Value),
                    None => AbstractValue::unknown_object(),
                }
            }
            ExprKind::IVar(iv) => state.ivar(iv).value,
            ExprKind::Call { receiver, name, args } => {
                if let ExprKind::Const(class) = &receiver.kind {
                    if name.text == "new" {
                        if depth >= MAX_DEPTH || self.graph.get(class).is_none() {
                            return AbstractValue::object_of(class);
                        }
                        let values = args
                            .iter()
                            .map(|a| self.eval_in_frame(a, frame, state, depth))
                            .collect();
                        let summary = self.construct(class, values, depth + 1);
                        return AbstractValue::Object {
                            class: Some(class.clone()),
                            summary: Some(Rc::new(summary)),
                        };
                    }
                }
                match name.text.as_str() {
                    "frozen?" => AbstractValue::Value,
                    "clone" => match self.eval_in_frame(receiver, frame, state, depth) {
                        AbstractValue::Value => AbstractValue::Value,
                        AbstractValue::Object { class, .. } => AbstractValue::Object {
                            class,
                            summary: None,
                        },
                    },
                    _ => AbstractValue::unknown_object(),
                }
            }
            _ => AbstractValue::unknown_object(),
        }
    }
}

/// Context-free evaluation: literals are values, `K.new` is a `K` object,
/// everything else is an unknown object.
fn shallow_eval(e: &Expr) -> AbstractValue {
    if e.is_literal() {
        return AbstractValue::Value;
    }
    if let Some((class, _)) = e.as_constructor_call() {
        return AbstractValue::object_of(class);
    }
    match e.as_call() {
        Some((_, "frozen?", _)) => AbstractValue::Value,
        _ => AbstractValue::unknown_object(),
    }
}
