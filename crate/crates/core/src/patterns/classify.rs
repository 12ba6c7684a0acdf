use std::fmt;

use serde::Serialize;

use crate::model::{
    accessor_facts_with, constructor_facts, mutators, AccessorFact, ClassGraph, ClassInfo,
    ConstructorFacts, Exposure, FlowAnalysis, Mutator, ReturnShape,
};
use crate::syntax::SourceSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    ImmutableObject,
    ImmutableSubclass,
    ImmutableAdapter,
    Mutable,
}

impl Pattern {
    pub fn as_str(self) -> &'static str {
        match self {
            Pattern::ImmutableObject => "immutable_object",
            Pattern::ImmutableSubclass => "immutable_subclass",
            Pattern::ImmutableAdapter => "immutable_adapter",
            Pattern::Mutable => "mutable",
        }
    }

    pub fn is_immutable(self) -> bool {
        self != Pattern::Mutable
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Checklist entries consulted by the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionId {
    HasSuperclass,
    CallsSuper,
    OwnConstructor,
    AssignsAllParams,
    WrapsObject,
    FreezesSelf,
    FreezeAfterSuper,
    WrappedFrozen,
    FreezeIsFinal,
    NoMutators,
    ReadersSafe,
    MethodsDelegate,
}

impl CriterionId {
    pub fn as_str(self) -> &'static str {
        match self {
            CriterionId::HasSuperclass => "has_superclass",
            CriterionId::CallsSuper => "calls_super",
            CriterionId::OwnConstructor => "own_constructor",
            CriterionId::AssignsAllParams => "assigns_all_params",
            CriterionId::WrapsObject => "wraps_object",
            CriterionId::FreezesSelf => "freezes_self",
            CriterionId::FreezeAfterSuper => "freeze_after_super",
            CriterionId::WrappedFrozen => "wrapped_frozen",
            CriterionId::FreezeIsFinal => "freeze_is_final",
            CriterionId::NoMutators => "no_mutators",
            CriterionId::ReadersSafe => "readers_safe",
            CriterionId::MethodsDelegate => "methods_delegate",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CriterionId::HasSuperclass => "has a superclass",
            CriterionId::CallsSuper => "constructor calls super",
            CriterionId::OwnConstructor => "defines its own constructor",
            CriterionId::AssignsAllParams => "constructor takes all values",
            CriterionId::WrapsObject => "wraps a constructed object",
            CriterionId::FreezesSelf => "constructor calls freeze",
            CriterionId::FreezeAfterSuper => "freeze follows super",
            CriterionId::WrappedFrozen => "wrapped object frozen",
            CriterionId::FreezeIsFinal => "no state writes after freeze",
            CriterionId::NoMutators => "no mutator methods",
            CriterionId::ReadersSafe => "readers expose no mutable state",
            CriterionId::MethodsDelegate => "methods delegate to wrapped object",
        }
    }
}

impl fmt::Display for CriterionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A member that fails a criterion, e.g. a leaking reader.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Offender {
    pub name: String,
    pub span: SourceSpan,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Criterion {
    pub id: CriterionId,
    pub satisfied: bool,
    /// Where the criterion was decided (e.g. the `self.freeze` statement).
    pub span: Option<SourceSpan>,
    pub offenders: Vec<Offender>,
}

impl Criterion {
    fn check(id: CriterionId, satisfied: bool, span: Option<SourceSpan>) -> Self {
        Criterion {
            id,
            satisfied,
            span,
            offenders: Vec::new(),
        }
    }

    fn from_offenders(id: CriterionId, offenders: Vec<Offender>) -> Self {
        Criterion {
            id,
            satisfied: offenders.is_empty(),
            span: None,
            offenders,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatternClassification {
    pub class_name: String,
    pub class_span: SourceSpan,
    pub pattern: Pattern,
    /// Pattern whose checklist `criteria` records. Equal to `pattern` for
    /// the immutable patterns; for `Mutable` it is the closest structural
    /// match (super call → subclass, wrapped object → adapter, else object).
    pub checked: Pattern,
    pub criteria: Vec<Criterion>,
    /// Selectors of own mutators (writers and state-writing methods).
    pub mutators: Vec<String>,
    /// `(ivar, class)` when the constructor wraps a constructed object.
    pub wrapped: Option<(String, String)>,
    /// The class shows immutability intent: it freezes itself or an
    /// instance variable, clones on read, or wraps a frozen object.
    pub intends_immutability: bool,
}

impl PatternClassification {
    pub fn criterion(&self, id: CriterionId) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.id == id)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Criterion> {
        self.criteria.iter().filter(|c| !c.satisfied)
    }
}

/// Everything the checklists need about one class.
pub(crate) struct ClassFacts<'g> {
    pub class: &'g ClassInfo,
    pub ctor: ConstructorFacts,
    pub own_ctor: bool,
    pub readers: Vec<AccessorFact>,
    pub own_mutators: Vec<Mutator>,
    pub all_mutators: Vec<Mutator>,
    pub self_frozen_at_end: bool,
}

impl<'g> ClassFacts<'g> {
    pub fn gather(class: &'g ClassInfo, flow: &mut FlowAnalysis<'g>) -> Self {
        let graph = flow.graph();
        let ctor = constructor_facts(class, graph);
        let summary = flow.instance_summary(&class.name);
        let all_mutators = mutators(class, graph, false);
        // a state-writing method is reported as a mutator, not a reader
        let readers = accessor_facts_with(class, flow)
            .into_iter()
            .filter(|r| !all_mutators.iter().any(|m| m.selector == r.name))
            .collect();
        ClassFacts {
            class,
            own_ctor: class.constructor().is_some(),
            readers,
            own_mutators: mutators(class, graph, true),
            all_mutators,
            self_frozen_at_end: summary.self_frozen,
            ctor,
        }
    }

    fn leaking_readers(&self) -> Vec<Offender> {
        self.readers
            .iter()
            .filter(|r| !r.exposure.is_safe())
            .map(|r| Offender {
                name: r.name.clone(),
                span: r.span,
                detail: reader_detail(r),
            })
            .collect()
    }

    fn mutator_offenders(&self, list: &[Mutator]) -> Vec<Offender> {
        list.iter()
            .map(|m| Offender {
                name: m.selector.clone(),
                span: m.span,
                detail: if m.defined_in == self.class.name {
                    String::new()
                } else {
                    format!("inherited from {}", m.defined_in)
                },
            })
            .collect()
    }

    fn freeze_is_final(&self) -> Criterion {
        let mut c = Criterion::check(
            CriterionId::FreezeIsFinal,
            self.ctor.freeze_is_final,
            self.ctor.self_freeze.map(|f| f.span),
        );
        c.offenders = self
            .ctor
            .writes_after_freeze
            .iter()
            .map(|span| Offender {
                name: "initialize".into(),
                span: *span,
                detail: if self.ctor.super_call.is_some_and(|s| s.span == *span) {
                    "super is called after self.freeze".into()
                } else {
                    "state written after self.freeze".into()
                },
            })
            .collect();
        c
    }

    fn freezes_self(&self) -> Criterion {
        Criterion::check(
            CriterionId::FreezesSelf,
            self.own_ctor && self.ctor.calls_freeze(),
            self.ctor.self_freeze.map(|f| f.span).or(self.ctor.span),
        )
    }

    pub fn subclass_checklist(&self) -> Vec<Criterion> {
        let has_super = self.class.superclass.is_some();
        let calls_super = self.own_ctor && self.ctor.super_call.is_some();
        vec![
            Criterion::check(CriterionId::HasSuperclass, has_super, None),
            Criterion::check(
                CriterionId::CallsSuper,
                calls_super,
                self.ctor.super_call.map(|s| s.span).or(self.ctor.span),
            ),
            self.freezes_self(),
            Criterion::check(
                CriterionId::FreezeAfterSuper,
                calls_super && self.ctor.freeze_follows_super(),
                self.ctor.self_freeze.map(|f| f.span),
            ),
            self.freeze_is_final(),
            Criterion::from_offenders(CriterionId::NoMutators, self.mutator_offenders(&self.own_mutators)),
            Criterion::from_offenders(CriterionId::ReadersSafe, self.leaking_readers()),
        ]
    }

    pub fn adapter_checklist(&self) -> Vec<Criterion> {
        let wraps = self.ctor.wraps.as_ref().filter(|_| self.own_ctor);
        let wrapped_frozen = wraps.is_some_and(|w| self.ctor.frozen_ivars.contains(&w.ivar));
        // inherited writers are harmless only while the receiver is frozen
        let relevant_mutators = if self.self_frozen_at_end {
            &self.own_mutators
        } else {
            &self.all_mutators
        };
        let mut non_delegating = Vec::new();
        let mut leaking = Vec::new();
        if let Some(w) = wraps {
            for r in &self.readers {
                let delegated = matches!(&r.return_shape, ReturnShape::Delegated { ivar, .. } if *ivar == w.ivar);
                if delegated && !r.exposure.is_safe() {
                    leaking.push(Offender {
                        name: r.name.clone(),
                        span: r.span,
                        detail: format!("{} of the wrapped {}", reader_detail(r), w.class),
                    });
                } else if !delegated && !delegates_safely(r) {
                    non_delegating.push(Offender {
                        name: r.name.clone(),
                        span: r.span,
                        detail: format!("does not delegate to {}; {}", w.ivar, reader_detail(r)),
                    });
                }
            }
        }
        vec![
            Criterion::check(CriterionId::WrapsObject, wraps.is_some(), wraps.map(|w| w.span)),
            Criterion::check(CriterionId::WrappedFrozen, wrapped_frozen, wraps.map(|w| w.span)),
            self.freeze_is_final(),
            Criterion::from_offenders(CriterionId::NoMutators, self.mutator_offenders(relevant_mutators)),
            Criterion::from_offenders(CriterionId::ReadersSafe, leaking),
            Criterion {
                id: CriterionId::MethodsDelegate,
                satisfied: wraps.is_some() && non_delegating.is_empty(),
                span: None,
                offenders: non_delegating,
            },
        ]
    }

    pub fn object_checklist(&self) -> Vec<Criterion> {
        vec![
            Criterion::check(CriterionId::OwnConstructor, self.own_ctor, self.ctor.span),
            Criterion::check(
                CriterionId::AssignsAllParams,
                self.own_ctor && self.ctor.assigns_param_ivars,
                self.ctor.span,
            ),
            self.freezes_self(),
            self.freeze_is_final(),
            Criterion::from_offenders(CriterionId::NoMutators, self.mutator_offenders(&self.own_mutators)),
            Criterion::from_offenders(CriterionId::ReadersSafe, self.leaking_readers()),
        ]
    }

    pub fn intends_immutability(&self) -> bool {
        let own_init = self.class.constructor();
        let freezes = own_init.is_some_and(|m| {
            m.calls_self_freeze.is_some()
                || !m.frozen_ivars.is_empty()
                || !m.frozen_wrapped_attrs.is_empty()
        });
        let clones = self.class.methods.values().any(|m| {
            matches!(
                m.return_shape,
                ReturnShape::ClonedIVar(_) | ReturnShape::Delegated { cloned: true, .. }
            )
        });
        freezes || clones
    }
}

/// A non-delegating public method is tolerated when it returns a value.
fn delegates_safely(r: &AccessorFact) -> bool {
    match &r.return_shape {
        ReturnShape::Literal | ReturnShape::SelfRef => true,
        _ => r.exposure == Exposure::ValueTyped,
    }
}

fn reader_detail(r: &AccessorFact) -> String {
    let mut s = match &r.return_shape {
        ReturnShape::RawIVar(iv) => format!("returns {iv} as a {}", r.exposure),
        ReturnShape::Delegated { ivar, method, .. } => format!("returns {ivar}.{method} as a {}", r.exposure),
        _ => format!("returns a {}", r.exposure),
    };
    if r.inherited() {
        s.push_str(&format!(" (inherited from {})", r.defined_in));
    }
    s
}

/// Classifies one class. Checklists are tried in precedence order
/// subclass, adapter, object; the first fully satisfied one wins.
pub fn classify(class_name: &str, graph: &ClassGraph) -> Option<PatternClassification> {
    let mut flow = FlowAnalysis::new(graph);
    classify_with(class_name, &mut flow)
}

pub fn classify_with<'g>(class_name: &str, flow: &mut FlowAnalysis<'g>) -> Option<PatternClassification> {
    let class = flow.graph().get(class_name)?;
    let facts = ClassFacts::gather(class, flow);
    Some(classify_facts(&facts))
}

pub(crate) fn classify_facts(facts: &ClassFacts<'_>) -> PatternClassification {
    let subclass = facts.subclass_checklist();
    let adapter = facts.adapter_checklist();
    let object = facts.object_checklist();
    let all = |c: &[Criterion]| c.iter().all(|c| c.satisfied);

    let (pattern, checked, criteria) = if all(&subclass) {
        (Pattern::ImmutableSubclass, Pattern::ImmutableSubclass, subclass)
    } else if all(&adapter) {
        (Pattern::ImmutableAdapter, Pattern::ImmutableAdapter, adapter)
    } else if all(&object) {
        (Pattern::ImmutableObject, Pattern::ImmutableObject, object)
    } else if facts.own_ctor && facts.ctor.super_call.is_some() && facts.class.superclass.is_some() {
        (Pattern::Mutable, Pattern::ImmutableSubclass, subclass)
    } else if facts.own_ctor && facts.ctor.wraps.is_some() {
        (Pattern::Mutable, Pattern::ImmutableAdapter, adapter)
    } else {
        (Pattern::Mutable, Pattern::ImmutableObject, object)
    };

    PatternClassification {
        class_name: facts.class.name.clone(),
        class_span: facts.class.name_span,
        pattern,
        checked,
        criteria,
        mutators: facts.own_mutators.iter().map(|m| m.selector.clone()).collect(),
        wrapped: facts
            .ctor
            .wraps
            .as_ref()
            .filter(|_| facts.own_ctor)
            .map(|w| (w.ivar.clone(), w.class.clone())),
        intends_immutability: facts.intends_immutability(),
    }
}

/// All three immutable checklists for a class, in precedence order.
pub fn checklists(class_name: &str, graph: &ClassGraph) -> Option<[(Pattern, Vec<Criterion>); 3]> {
    let mut flow = FlowAnalysis::new(graph);
    let class = graph.get(class_name)?;
    let facts = ClassFacts::gather(class, &mut flow);
    Some([
        (Pattern::ImmutableSubclass, facts.subclass_checklist()),
        (Pattern::ImmutableAdapter, facts.adapter_checklist()),
        (Pattern::ImmutableObject, facts.object_checklist()),
    ])
}

/// Classifies every class in the graph, in class-name order.
pub fn classify_all(graph: &ClassGraph) -> Vec<PatternClassification> {
    let mut flow = FlowAnalysis::new(graph);
    graph
        .classes
        .keys()
        .filter_map(|name| classify_with(name, &mut flow))
        .collect()
}
