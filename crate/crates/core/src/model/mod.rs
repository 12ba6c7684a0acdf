//! Per-class semantic facts derived from a syntax tree.

mod facts;
mod flow;
mod graph;

pub use facts::{
    accessor_facts, accessor_facts_with, constructor_facts, mutators, AccessorFact,
    ConstructorFacts, Exposure, Mutator, Wrap,
};
pub use flow::{AbstractValue, FlowAnalysis, IvarState, ObjectSummary};
pub use graph::{
    build_model, AttrInfo, CallSite, ClassGraph, ClassInfo, Dispatch, IvarWrite, MethodInfo,
    ModelError, ReturnShape, SiteContext, StmtRef,
};
