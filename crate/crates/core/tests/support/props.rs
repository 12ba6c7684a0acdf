//! Property bodies shared by the proptest suites and the acceptance target.

use std::collections::BTreeMap;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use frozencheck_core::model::build_model;
use frozencheck_core::patterns::{checklists, classify, lint, LintConfig, RuleId};
use frozencheck_core::runtime::{FaultKind, Interpreter, ObjId, Value};
use frozencheck_core::syntax::{parse_source, pretty_print, FileId};

use super::fuzz;

const FIELDS: [&str; 3] = ["@a", "@b", "@c"];

#[derive(Debug, Clone)]
pub enum HeapOp {
    Freeze(usize),
    Write(usize, usize, i64),
    Clone(usize),
}

pub fn heap_ops() -> impl Strategy<Value = Vec<HeapOp>> {
    let op = prop_oneof![
        (0usize..8).prop_map(HeapOp::Freeze),
        (0usize..8, 0usize..3, -50i64..50).prop_map(|(o, f, v)| HeapOp::Write(o, f, v)),
        (0usize..8).prop_map(HeapOp::Clone),
    ];
    prop::collection::vec(op, 1..40)
}

/// Reference model of the heap: ivar tables and frozen flags.
#[derive(Debug, Clone, Default)]
struct Model {
    objects: Vec<(BTreeMap<&'static str, i64>, bool)>,
}

struct World {
    interp: Interpreter,
    ids: Vec<ObjId>,
    model: Model,
}

impl World {
    fn new() -> World {
        let mut interp = Interpreter::new();
        let tree = parse_source("class T\n  attr_accessor :a, :b, :c\nend\n", FileId(0)).unwrap();
        interp.run(&tree).unwrap();
        let mut w = World {
            interp,
            ids: Vec::new(),
            model: Model::default(),
        };
        for _ in 0..3 {
            let id = w.interp.allocate("T").unwrap();
            w.ids.push(id);
            w.model.objects.push((BTreeMap::new(), false));
        }
        w
    }

    fn pick(&self, i: usize) -> usize {
        i % self.ids.len()
    }

    fn state(&self) -> Vec<(BTreeMap<String, Value>, bool)> {
        self.ids
            .iter()
            .map(|id| {
                let inst = self.interp.instance(*id);
                (inst.ivars.clone(), inst.is_frozen())
            })
            .collect()
    }

    fn check_model(&self) -> Result<(), TestCaseError> {
        for (id, (ivars, frozen)) in self.ids.iter().zip(&self.model.objects) {
            let inst = self.interp.instance(*id);
            prop_assert_eq!(inst.is_frozen(), *frozen);
            let expect: BTreeMap<String, Value> = ivars.iter().map(|(k, v)| (k.to_string(), Value::Int(*v))).collect();
            prop_assert_eq!(&inst.ivars, &expect);
        }
        Ok(())
    }

    /// Applies one op to both interpreter and model; returns the write result.
    fn apply(&mut self, op: &HeapOp) -> Result<Option<Result<(), FaultKind>>, TestCaseError> {
        match *op {
            HeapOp::Freeze(i) => {
                let i = self.pick(i);
                self.interp.freeze_object(&Value::Obj(self.ids[i]));
                self.model.objects[i].1 = true;
                Ok(None)
            }
            HeapOp::Write(i, f, v) => {
                let i = self.pick(i);
                let r = self.interp.set_ivar(self.ids[i], FIELDS[f], Value::Int(v));
                if !self.model.objects[i].1 {
                    self.model.objects[i].0.insert(FIELDS[f], v);
                }
                Ok(Some(r.map_err(|e| e.kind)))
            }
            HeapOp::Clone(i) => {
                let i = self.pick(i);
                let copy = self.interp.clone_object(&Value::Obj(self.ids[i]));
                let Value::Obj(cid) = copy else {
                    return Err(TestCaseError::fail("clone of an object is not an object"));
                };
                prop_assert!(!self.ids.contains(&cid), "clone reused an identity");
                self.ids.push(cid);
                let m = self.model.objects[i].clone();
                self.model.objects.push(m);
                Ok(None)
            }
        }
    }
}

/// Once frozen, always frozen; freezing twice equals freezing once.
pub fn freeze_idempotent_monotonic(ops: &[HeapOp]) -> Result<(), TestCaseError> {
    let mut w = World::new();
    let mut ever_frozen = vec![false; 3];
    for op in ops {
        let src = match op {
            HeapOp::Clone(i) => w.pick(*i),
            _ => 0,
        };
        w.apply(op)?;
        ever_frozen.resize(w.ids.len(), false);
        if let HeapOp::Clone(_) = op {
            let last = ever_frozen.len() - 1;
            ever_frozen[last] = w.interp.instance(w.ids[src]).is_frozen();
        }
        for (k, id) in w.ids.iter().enumerate() {
            let f = w.interp.instance(*id).is_frozen();
            prop_assert!(f || !ever_frozen[k], "object {} was unfrozen", k);
            ever_frozen[k] |= f;
        }
        if let HeapOp::Freeze(i) = op {
            let before = w.state();
            let target = Value::Obj(w.ids[w.pick(*i)]);
            w.interp.freeze_object(&target);
            prop_assert_eq!(before, w.state(), "second freeze changed state");
        }
    }
    Ok(())
}

/// A write to a frozen instance faults with FrozenError and changes nothing.
pub fn failed_write_is_atomic(ops: &[HeapOp]) -> Result<(), TestCaseError> {
    let mut w = World::new();
    for op in ops {
        let before = w.state();
        let target_frozen = match op {
            HeapOp::Write(i, _, _) => Some(w.interp.instance(w.ids[w.pick(*i)]).is_frozen()),
            _ => None,
        };
        let result = w.apply(op)?;
        if let (Some(frozen), Some(r)) = (target_frozen, result) {
            if frozen {
                prop_assert_eq!(r, Err(FaultKind::FrozenError));
                prop_assert_eq!(&before, &w.state());
            } else {
                prop_assert_eq!(r, Ok(()));
            }
        }
    }
    w.check_model()
}

/// Clones get a fresh identity, equal contents and the source's frozen
/// flag; afterwards writes to one never show through the other.
pub fn clone_is_independent(ops: &[HeapOp]) -> Result<(), TestCaseError> {
    let mut w = World::new();
    for op in ops {
        let src = match op {
            HeapOp::Clone(i) => w.ids[w.pick(*i)],
            _ => w.ids[0],
        };
        w.apply(op)?;
        if let HeapOp::Clone(_) = op {
            let copy = *w.ids.last().unwrap();
            prop_assert_ne!(src, copy);
            let (a, b) = (w.interp.instance(src), w.interp.instance(copy));
            prop_assert_eq!(&a.ivars, &b.ivars);
            prop_assert_eq!(a.is_frozen(), b.is_frozen());
        }
        // the model treats every object independently, so any sharing
        // between a clone and its source shows up as a mismatch
        w.check_model()?;
    }
    Ok(())
}

/// Parse, print, re-parse: same tree; printing is a fixpoint.
pub fn round_trip(src: &str) -> Result<(), TestCaseError> {
    let tree = parse_source(src, FileId(0)).map_err(|e| TestCaseError::fail(format!("{:?}", e.messages())))?;
    let printed = pretty_print(&tree);
    let again = parse_source(&printed, FileId(0))
        .map_err(|e| TestCaseError::fail(format!("reprint does not parse: {:?}\n{printed}", e.messages())))?;
    prop_assert_eq!(tree.without_spans(), again.without_spans());
    prop_assert_eq!(&printed, &pretty_print(&again));
    Ok(())
}

pub fn round_trip_generated(seed: u64) -> Result<(), TestCaseError> {
    round_trip(&fuzz::generate(seed).source)
}

/// A class that meets an earlier checklist never gets a later pattern,
/// and classification is deterministic.
pub fn precedence_sound(seed: u64) -> Result<(), TestCaseError> {
    let program = fuzz::generate(seed);
    let tree = parse_source(&program.source, FileId(0)).unwrap();
    let graph = build_model(&tree).unwrap();
    for name in graph.classes.keys() {
        let c = classify(name, &graph).unwrap();
        prop_assert_eq!(&c, &classify(name, &graph).unwrap());
        let lists = checklists(name, &graph).unwrap();
        let first_full = lists
            .iter()
            .find(|(_, crit)| crit.iter().all(|k| k.satisfied))
            .map(|(p, _)| *p);
        match first_full {
            Some(p) => prop_assert_eq!(c.pattern, p, "{}", name),
            None => prop_assert!(!c.pattern.is_immutable()),
        }
    }
    Ok(())
}

/// Immutable* classes never carry IMM001–IMM004.
pub fn lint_coherent(seed: u64) -> Result<(), TestCaseError> {
    let program = fuzz::generate(seed);
    let tree = parse_source(&program.source, FileId(0)).unwrap();
    let graph = build_model(&tree).unwrap();
    let report = lint(&tree, &graph, &LintConfig::default());
    for c in report.classifications.iter().filter(|c| c.pattern.is_immutable()) {
        let bad = report.diagnostics.iter().any(|d| {
            d.class_name == c.class_name
                && matches!(d.rule, RuleId::Imm001 | RuleId::Imm002 | RuleId::Imm003 | RuleId::Imm004)
        });
        prop_assert!(!bad, "{} is {} but has pattern diagnostics", c.class_name, c.pattern);
    }
    Ok(())
}
