use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::syntax::{Expr, ExprKind, SourceSpan, StmtKind};

use super::flow::{AbstractValue, FlowAnalysis, IvarState, ObjectSummary};
use super::graph::{return_shape as return_shape_of, ClassGraph, ClassInfo, Dispatch, ReturnShape, StmtRef};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wrap {
    pub ivar: String,
    pub class: String,
    pub span: SourceSpan,
}

/// Construction-time behavior of a class, taken from its own `initialize`
/// or, when it has none, from the nearest ancestor's.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructorFacts {
    /// Class whose `initialize` supplied these facts.
    pub owner: Option<String>,
    pub inherited: bool,
    pub span: Option<SourceSpan>,
    /// Every parameter is stored into an instance variable or passed on to
    /// `super`.
    pub assigns_param_ivars: bool,
    pub self_freeze: Option<StmtRef>,
    pub super_call: Option<StmtRef>,
    /// No instance-variable write and no `super` call follows `self.freeze`.
    pub freeze_is_final: bool,
    /// Statements that write state after `self.freeze`.
    pub writes_after_freeze: Vec<SourceSpan>,
    pub frozen_ivars: BTreeSet<String>,
    pub frozen_wrapped_attrs: BTreeSet<(String, String)>,
    pub wraps: Option<Wrap>,
}

impl ConstructorFacts {
    fn absent() -> Self {
        ConstructorFacts {
            owner: None,
            inherited: false,
            span: None,
            assigns_param_ivars: false,
            self_freeze: None,
            super_call: None,
            freeze_is_final: false,
            writes_after_freeze: Vec::new(),
            frozen_ivars: BTreeSet::new(),
            frozen_wrapped_attrs: BTreeSet::new(),
            wraps: None,
        }
    }

    pub fn calls_freeze(&self) -> bool {
        self.self_freeze.is_some()
    }

    /// `super` is called and `self.freeze` comes after it.
    pub fn freeze_follows_super(&self) -> bool {
        matches!((self.super_call, self.self_freeze), (Some(s), Some(f)) if f.position > s.position)
    }
}

pub fn constructor_facts(class: &ClassInfo, graph: &ClassGraph) -> ConstructorFacts {
    let Some(owner) = graph.constructor_owner(&class.name) else {
        return ConstructorFacts::absent();
    };
    let init = owner.constructor().expect("owner defines initialize");

    let mut assigned: BTreeSet<&str> = BTreeSet::new();
    let mut assigned_ivars: Vec<(&str, &crate::syntax::Expr, SourceSpan)> = Vec::new();
    for stmt in &init.body {
        match &stmt.kind {
            StmtKind::IVarAssign { name, value } => {
                if let ExprKind::Local(l) = &value.kind {
                    assigned.insert(l);
                }
                assigned_ivars.push((&name.text, value, stmt.span));
            }
            StmtKind::Super { args } => {
                for a in args {
                    if let ExprKind::Local(l) = &a.kind {
                        assigned.insert(l);
                    }
                }
            }
            _ => {}
        }
    }
    let assigns_param_ivars = init.params.iter().all(|p| assigned.contains(p.as_str()));

    let writes_after_freeze: Vec<SourceSpan> = match init.calls_self_freeze {
        Some(f) => init
            .ivar_writes
            .iter()
            .filter(|w| w.position > f.position)
            .map(|w| w.span)
            .chain(
                init.body
                    .iter()
                    .enumerate()
                    .filter(|(i, s)| *i > f.position && matches!(s.kind, StmtKind::Super { .. }))
                    .map(|(_, s)| s.span),
            )
            .collect(),
        None => Vec::new(),
    };

    let distinct: BTreeSet<&str> = assigned_ivars.iter().map(|(n, _, _)| *n).collect();
    let wraps = match assigned_ivars.as_slice() {
        [(ivar, value, span)] if distinct.len() == 1 => value
            .as_constructor_call()
            .map(|(class, _)| Wrap {
                ivar: ivar.to_string(),
                class: class.to_string(),
                span: *span,
            }),
        _ => None,
    };

    ConstructorFacts {
        owner: Some(owner.name.clone()),
        inherited: owner.name != class.name,
        span: Some(init.span),
        assigns_param_ivars,
        self_freeze: init.calls_self_freeze,
        super_call: init.calls_super,
        freeze_is_final: writes_after_freeze.is_empty(),
        writes_after_freeze,
        frozen_ivars: init.frozen_ivars.clone(),
        frozen_wrapped_attrs: init.frozen_wrapped_attrs.clone(),
        wraps,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exposure {
    ValueTyped,
    ClonedReference,
    FrozenReference,
    RawMutableReference,
}

impl Exposure {
    pub fn is_safe(self) -> bool {
        self != Exposure::RawMutableReference
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Exposure::ValueTyped => "value",
            Exposure::ClonedReference => "cloned reference",
            Exposure::FrozenReference => "frozen reference",
            Exposure::RawMutableReference => "raw mutable reference",
        }
    }
}

impl fmt::Display for Exposure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessorFact {
    pub class_name: String,
    /// Reader selector (attribute or method name).
    pub name: String,
    /// Class that defines the reader; differs from `class_name` when inherited.
    pub defined_in: String,
    pub synthesized: bool,
    pub exposure: Exposure,
    pub return_shape: ReturnShape,
    pub span: SourceSpan,
}

impl AccessorFact {
    pub fn inherited(&self) -> bool {
        self.defined_in != self.class_name
    }
}

/// One fact per public reader visible on `class` (own and inherited,
/// excluding writers and `initialize`), sorted by name.
pub fn accessor_facts(class: &ClassInfo, graph: &ClassGraph) -> Vec<AccessorFact> {
    let mut flow = FlowAnalysis::new(graph);
    accessor_facts_with(class, &mut flow)
}

pub fn accessor_facts_with(class: &ClassInfo, flow: &mut FlowAnalysis<'_>) -> Vec<AccessorFact> {
    let graph = flow.graph();
    let state = flow.instance_summary(&class.name);
    let mut facts = Vec::new();
    for (selector, (owner, dispatch)) in graph.visible_selectors(&class.name) {
        let (shape, span, synthesized) = match dispatch {
            Dispatch::Writer { .. } => continue,
            Dispatch::Reader { attr, span } => (ReturnShape::RawIVar(format!("@{attr}")), *span, true),
            Dispatch::Method => {
                let m = &owner.methods[selector];
                if m.is_constructor() {
                    continue;
                }
                (m.return_shape.clone(), m.span, false)
            }
        };
        let exposure = match (&shape, dispatch) {
            (ReturnShape::Other, Dispatch::Method) => {
                let m = &owner.methods[selector];
                other_exposure(m.return_expr.as_ref(), &m.params, &state, graph)
            }
            _ => shape_exposure(&shape, &state, graph),
        };
        facts.push(AccessorFact {
            class_name: class.name.clone(),
            name: selector.to_string(),
            defined_in: owner.name.clone(),
            synthesized,
            exposure,
            return_shape: shape,
            span,
        });
    }
    facts
}

fn ivar_exposure(state: &IvarState) -> Exposure {
    if state.value.is_value() {
        Exposure::ValueTyped
    } else if state.frozen {
        Exposure::FrozenReference
    } else {
        Exposure::RawMutableReference
    }
}

pub(crate) fn shape_exposure(shape: &ReturnShape, state: &ObjectSummary, graph: &ClassGraph) -> Exposure {
    match shape {
        ReturnShape::Literal | ReturnShape::SelfRef => Exposure::ValueTyped,
        ReturnShape::RawIVar(iv) => ivar_exposure(&state.ivar(iv)),
        ReturnShape::ClonedIVar(iv) => {
            if state.ivar(iv).value.is_value() {
                Exposure::ValueTyped
            } else {
                Exposure::ClonedReference
            }
        }
        ReturnShape::Delegated {
            ivar,
            method,
            cloned,
        } => {
            let holder = state.ivar(ivar);
            let field = delegated_field(&holder, method, graph);
            match field {
                Some(f) if f.value.is_value() => Exposure::ValueTyped,
                _ if *cloned => Exposure::ClonedReference,
                Some(f) if f.frozen => Exposure::FrozenReference,
                _ if holder.frozen_attrs.contains(method) => Exposure::FrozenReference,
                _ => Exposure::RawMutableReference,
            }
        }
        ReturnShape::Other => Exposure::RawMutableReference,
    }
}

/// State of the field that `@holder.method` reads, when the held object was
/// constructed in place and `method` is a plain reader of one of its fields.
fn delegated_field(holder: &IvarState, method: &str, graph: &ClassGraph) -> Option<IvarState> {
    let summary = holder.value.summary()?;
    let field = match graph.lookup(&summary.class, method)? {
        (_, Dispatch::Reader { attr, .. }) => format!("@{attr}"),
        (c, Dispatch::Method) => match &c.methods[method].return_shape {
            ReturnShape::RawIVar(iv) => iv.clone(),
            ReturnShape::Literal => return Some(IvarState::nil()),
            _ => return None,
        },
        (_, Dispatch::Writer { .. }) => return None,
    };
    Some(summary.ivar(&field))
}

fn other_exposure(expr: Option<&Expr>, params: &[String], state: &ObjectSummary, graph: &ClassGraph) -> Exposure {
    let Some(e) = expr else {
        return Exposure::ValueTyped;
    };
    if e.is_literal() {
        return Exposure::ValueTyped;
    }
    if let Some(("frozen?", _)) = e.as_call().map(|(_, m, a)| (m, a)) {
        return Exposure::ValueTyped;
    }
    // A freshly constructed object is not receiver state; it only leaks
    // what the receiver hands it.
    if let Some((_, args)) = e.as_constructor_call() {
        let hands_over_state = args.iter().any(|a| !argument_is_safe(a, params, state, graph));
        return if hands_over_state {
            Exposure::RawMutableReference
        } else {
            Exposure::ClonedReference
        };
    }
    Exposure::RawMutableReference
}

fn argument_is_safe(a: &Expr, params: &[String], state: &ObjectSummary, graph: &ClassGraph) -> bool {
    match &a.kind {
        ExprKind::Local(name) => params.contains(name),
        ExprKind::Call { .. } if a.as_constructor_call().is_some() => {
            other_exposure(Some(a), params, state, graph).is_safe()
        }
        _ => match return_shape_of(a) {
            ReturnShape::Other => false,
            shape => shape_exposure(&shape, state, graph).is_safe(),
        },
    }
}

/// A member that can change instance state after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mutator {
    /// Selector, e.g. `line1=` for a synthesized writer.
    pub selector: String,
    pub defined_in: String,
    pub span: SourceSpan,
}

/// Mutators visible on `class`; `own_only` restricts to members the class
/// itself defines.
pub fn mutators(class: &ClassInfo, graph: &ClassGraph, own_only: bool) -> Vec<Mutator> {
    let mut out = Vec::new();
    for (selector, (owner, dispatch)) in graph.visible_selectors(&class.name) {
        if own_only && owner.name != class.name {
            continue;
        }
        let span = match dispatch {
            Dispatch::Writer { span, .. } => *span,
            Dispatch::Method => {
                let m = &owner.methods[selector];
                if m.is_constructor() || !m.writes_state() {
                    continue;
                }
                m.span
            }
            Dispatch::Reader { .. } => continue,
        };
        out.push(Mutator {
            selector: selector.to_string(),
            defined_in: owner.name.clone(),
            span,
        });
    }
    out
}

impl AbstractValue {
    pub fn describe(&self) -> String {
        match self {
            AbstractValue::Value => "value".into(),
            AbstractValue::Object { class: Some(c), .. } => format!("{c} object"),
            AbstractValue::Object { class: None, .. } => "object".into(),
        }
    }
}
