//! Random MiniRuby programs plus mutation scripts for differential testing
//! of the classifier against the interpreter.
//!
//! Scope: mutation attempts go through the subject object only (writers,
//! methods taking an argument, and writes on objects its readers return).
//! References the script still holds after passing them to a constructor
//! are never mutated; the static layer does not track that aliasing.

use std::fmt::Write;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use frozencheck_core::model::{build_model, ClassGraph, Dispatch};
use frozencheck_core::patterns::{classify_all, Pattern};
use frozencheck_core::runtime::{FaultKind, Interpreter, Value};
use frozencheck_core::syntax::{parse_source, FileId, Item};

/// Mutable helper class every program declares; its fields hold values.
const BOX_CLASS: &str = "class Box\n  attr_accessor :v, :w\n\n  def initialize(v, w)\n    @v = v\n    @w = w\n  end\nend\n";

#[derive(Debug, Clone, Copy, PartialEq)]
enum Source {
    Param,
    NewBox,
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum FreezeAt {
    None,
    Start,
    End,
    BeforeSuper,
}

#[derive(Debug, Clone)]
pub struct FuzzProgram {
    pub seed: u64,
    pub source: String,
    /// `(local, class)` for each constructed subject.
    pub subjects: Vec<(String, String)>,
}

struct Gen {
    rng: StdRng,
    locals: usize,
}

impl Gen {
    fn lit(&mut self) -> String {
        match self.rng.gen_range(0..3) {
            0 => format!("\"s{}\"", self.rng.gen_range(0..100)),
            1 => self.rng.gen_range(0..100).to_string(),
            _ => "nil".to_string(),
        }
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    /// An argument expression for the script; may allocate a Box local.
    fn arg(&mut self, setup: &mut String) -> String {
        if self.chance(0.5) {
            let name = format!("b{}", self.locals);
            self.locals += 1;
            let (a, b) = (self.lit(), self.lit());
            let _ = writeln!(setup, "{name} = Box.new({a}, {b})");
            name
        } else {
            self.lit()
        }
    }
}

struct BaseShape {
    fields: Vec<String>,
}

fn gen_base(g: &mut Gen, out: &mut String) -> BaseShape {
    let fields: Vec<String> = (0..g.rng.gen_range(1..=2)).map(|i| format!("b{i}")).collect();
    out.push_str("class Base\n");
    let kind = ["attr_reader", "attr_accessor"].choose(&mut g.rng).unwrap();
    let syms: Vec<String> = fields.iter().map(|f| format!(":{f}")).collect();
    let _ = writeln!(out, "  {kind} {}\n", syms.join(", "));
    let _ = writeln!(out, "  def initialize({})", fields.join(", "));
    for f in &fields {
        let _ = writeln!(out, "    @{f} = {f}");
    }
    out.push_str("  end\nend\n\n");
    BaseShape { fields }
}

/// Appends one subject class and returns the argument count of `new`.
///
/// A disciplined subject follows one of the immutable recipes (readers
/// only, freeze last, fields mostly frozen) so the campaign reaches every
/// pattern often; the remaining randomness still injects defects.
fn gen_subject(g: &mut Gen, name: &str, base: Option<&BaseShape>, out: &mut String) -> usize {
    let disciplined = g.chance(0.5);
    let inherits = base.is_some() && g.chance(0.5);
    let adapter = !inherits && g.chance(0.25);
    let nfields = if adapter { 1 } else { g.rng.gen_range(1..=3) };
    let fields: Vec<String> = (0..nfields).map(|i| format!("f{i}")).collect();
    let sources: Vec<Source> = fields
        .iter()
        .map(|_| {
            if adapter {
                Source::NewBox
            } else {
                *[Source::Param, Source::Param, Source::NewBox, Source::Literal]
                    .choose(&mut g.rng)
                    .unwrap()
            }
        })
        .collect();

    match (inherits, base) {
        (true, Some(_)) => {
            let _ = writeln!(out, "class {name} < Base");
        }
        _ => {
            let _ = writeln!(out, "class {name}");
        }
    }

    // attribute declarations
    for f in &fields {
        let pick = if disciplined { g.rng.gen_range(0..2) * 3 } else { g.rng.gen_range(0..6) };
        match pick {
            0 => {
                let _ = writeln!(out, "  attr_reader :{f}");
            }
            1 => {
                let _ = writeln!(out, "  attr_writer :{f}");
            }
            2 => {
                let _ = writeln!(out, "  attr_accessor :{f}");
            }
            _ => {}
        }
    }
    out.push('\n');

    let own_ctor = !inherits || g.chance(0.8);
    let mut arity = 0;
    let mut ctor_params: Vec<String> = Vec::new();
    if own_ctor {
        let mut params: Vec<String> = Vec::new();
        let call_super = inherits && (disciplined || g.chance(0.85));
        let super_params: Vec<String> = match (call_super, base) {
            (true, Some(b)) => b.fields.iter().map(|f| format!("p_{f}")).collect(),
            _ => Vec::new(),
        };
        params.extend(super_params.iter().cloned());
        let mut body: Vec<String> = Vec::new();
        for (f, s) in fields.iter().zip(&sources) {
            let rhs = match s {
                Source::Param => {
                    params.push(format!("p_{f}"));
                    format!("p_{f}")
                }
                Source::NewBox => {
                    if adapter && g.chance(0.7) {
                        params.push("pa".into());
                        params.push("pb".into());
                        "Box.new(pa, pb)".to_string()
                    } else {
                        let (a, b) = (g.lit(), g.lit());
                        format!("Box.new({a}, {b})")
                    }
                }
                Source::Literal => g.lit(),
            };
            body.push(format!("@{f} = {rhs}"));
        }
        let freeze_wrapped = adapter && g.chance(0.8);
        if freeze_wrapped {
            body.push("@f0.freeze".into());
        }
        let p_freeze = if disciplined { 0.7 } else { 0.35 };
        for f in &fields {
            if !adapter && g.chance(p_freeze) {
                body.push(format!("@{f}.freeze"));
            }
        }
        if let (true, Some(b)) = (inherits, base) {
            for f in &b.fields {
                if g.chance(if disciplined { 0.8 } else { 0.3 }) {
                    body.push(format!("@{f}.freeze"));
                }
            }
        }
        body.shuffle(&mut g.rng);
        if call_super {
            let pos = g.rng.gen_range(0..=body.len().min(1));
            body.insert(pos, format!("super {}", super_params.join(", ")));
        }
        let freeze_at = *[
            FreezeAt::None,
            FreezeAt::End,
            FreezeAt::End,
            FreezeAt::End,
            FreezeAt::Start,
            FreezeAt::BeforeSuper,
        ]
        .choose(&mut g.rng)
        .unwrap();
        let freeze_at = if adapter && g.chance(0.6) {
            FreezeAt::None
        } else if disciplined {
            FreezeAt::End
        } else {
            freeze_at
        };
        match freeze_at {
            FreezeAt::None => {}
            FreezeAt::End => body.push("self.freeze".into()),
            FreezeAt::Start => body.insert(0, "self.freeze".into()),
            FreezeAt::BeforeSuper => {
                let pos = body.iter().position(|s| s.starts_with("super")).unwrap_or(body.len());
                body.insert(pos, "self.freeze".into());
            }
        }
        arity = params.len();
        ctor_params = params.clone();
        let _ = writeln!(out, "  def initialize({})", params.join(", "));
        for stmt in body {
            let _ = writeln!(out, "    {stmt}");
        }
        out.push_str("  end\n\n");
    } else if let Some(b) = base {
        arity = b.fields.len();
    }

    // methods
    let mut readable: Vec<String> = fields.clone();
    if inherits {
        readable.extend(base.unwrap().fields.iter().cloned());
    }
    for (i, f) in readable.iter().enumerate() {
        let m = if disciplined {
            *[0, 1, 2, 4, 7, 8, 9].choose(&mut g.rng).unwrap()
        } else {
            g.rng.gen_range(0..11)
        };
        let body = match m {
            0 => format!("  def get{i}\n    return @{f}\n  end\n"),
            1 | 2 => format!("  def get{i}\n    return @{f}.clone\n  end\n"),
            3 => format!("  def get{i}\n    return @{f}.v\n  end\n"),
            4 => format!("  def get{i}\n    return @{f}.v.clone\n  end\n"),
            5 => format!("  def set{i}(x)\n    @{f} = x\n  end\n"),
            6 => format!("  def poke{i}(x)\n    @{f}.v = x\n  end\n"),
            7 => format!("  def lit{i}\n    return 7\n  end\n"),
            9 => format!("  def wrap{i}\n    return Box.new(@{f}, 1)\n  end\n"),
            _ => String::new(),
        };
        if !body.is_empty() {
            out.push_str(&body);
            out.push('\n');
        }
    }
    // a copy built from the receiver's own fields feeds them back into
    // this class's constructor
    if own_ctor && g.chance(0.4) {
        let args: Vec<String> = ctor_params
            .iter()
            .map(|p| match p.strip_prefix("p_") {
                Some(field) if g.chance(0.85) => format!("@{field}"),
                _ if g.chance(0.5) => format!("@{}", readable.choose(&mut g.rng).unwrap()),
                _ => g.lit(),
            })
            .collect();
        let _ = writeln!(out, "  def copy\n    return {name}.new({})\n  end\n", args.join(", "));
    }
    out.push_str("end\n\n");
    arity
}

pub fn generate(seed: u64) -> FuzzProgram {
    let mut g = Gen {
        rng: StdRng::seed_from_u64(seed),
        locals: 0,
    };
    let mut classes = String::from(BOX_CLASS);
    classes.push('\n');
    let base = if g.chance(0.6) {
        Some(gen_base(&mut g, &mut classes))
    } else {
        None
    };
    let n = g.rng.gen_range(1..=3);
    let mut setup = String::new();
    let mut subjects = Vec::new();
    for i in 0..n {
        let name = format!("S{i}");
        let arity = gen_subject(&mut g, &name, base.as_ref(), &mut classes);
        let args: Vec<String> = (0..arity).map(|_| g.arg(&mut setup)).collect();
        let local = format!("s{i}");
        let _ = writeln!(setup, "{local} = {name}.new({})", args.join(", "));
        subjects.push((local, name));
    }
    FuzzProgram {
        seed,
        source: classes + &setup,
        subjects,
    }
}

#[derive(Debug, Default, Clone)]
pub struct FuzzStats {
    pub programs: usize,
    pub subjects: usize,
    pub immutable: [usize; 3],
    pub attempts: usize,
    pub immutable_attempts: usize,
    pub frozen_errors: usize,
    /// Mutable subjects whose observed state did change: evidence the
    /// mutation scripts have teeth.
    pub mutable_changed: usize,
}

impl FuzzStats {
    pub fn merge(&mut self, o: &FuzzStats) {
        self.programs += o.programs;
        self.subjects += o.subjects;
        for i in 0..3 {
            self.immutable[i] += o.immutable[i];
        }
        self.attempts += o.attempts;
        self.immutable_attempts += o.immutable_attempts;
        self.frozen_errors += o.frozen_errors;
        self.mutable_changed += o.mutable_changed;
    }
}

fn observers(graph: &ClassGraph, class: &str) -> Vec<String> {
    graph
        .visible_selectors(class)
        .into_iter()
        .filter_map(|(sel, (owner, d))| match d {
            Dispatch::Reader { .. } => Some(sel.to_string()),
            Dispatch::Method if sel != "initialize" && owner.methods[sel].params.is_empty() => Some(sel.to_string()),
            _ => None,
        })
        .collect()
}

fn attempts(graph: &ClassGraph, class: &str, subject: &str) -> Vec<String> {
    let mut out = Vec::new();
    for (sel, (owner, d)) in graph.visible_selectors(class) {
        match d {
            Dispatch::Writer { .. } => {
                let attr = sel.trim_end_matches('=');
                out.push(format!("{subject}.{attr} = \"zz\""));
                out.push(format!("{subject}.{attr} = Box.new(\"zz\", 9)"));
            }
            Dispatch::Method if sel == "initialize" => {
                out.push(format!("{subject}.initialize(\"zz\")"));
            }
            Dispatch::Method if !owner.methods[sel].params.is_empty() => {
                let n = owner.methods[sel].params.len();
                let args = vec!["\"zz\""; n].join(", ");
                out.push(format!("{subject}.{sel}({args})"));
            }
            _ => {
                out.push(format!("{subject}.{sel}.v = \"zz\""));
                out.push(format!("{subject}.{sel}.w = 99"));
                out.push(format!("{subject}.{sel}.v.v = \"zz\""));
            }
        }
    }
    out
}

fn observe(interp: &mut Interpreter, subject: &Value, readers: &[String]) -> Vec<String> {
    readers
        .iter()
        .map(|r| match interp.call_method(subject.clone(), r, Vec::new()) {
            Ok(v) => format!("{r}={}", interp.snapshot(&v, 3)),
            Err(e) => format!("{r}!{:?}", e.kind),
        })
        .collect()
}

/// Runs one program; `Err` describes a soundness counterexample.
pub fn check(program: &FuzzProgram) -> Result<FuzzStats, String> {
    let tree = parse_source(&program.source, FileId(0))
        .map_err(|e| format!("seed {}: generated program does not parse: {:?}\n{}", program.seed, e.messages(), program.source))?;
    let graph = build_model(&tree).map_err(|e| format!("seed {}: {e}", program.seed))?;
    let classes = classify_all(&graph);

    let mut interp = Interpreter::new();
    let mut stats = FuzzStats {
        programs: 1,
        ..Default::default()
    };
    // run statement by statement so a constructor fault only skips that subject
    for item in &tree.items {
        let single = frozencheck_core::syntax::SyntaxTree {
            items: vec![item.clone()],
        };
        match item {
            Item::Class(_) => interp.run(&single).map_err(|e| format!("seed {}: {e}", program.seed))?,
            Item::Stmt(s) => {
                let _ = interp.exec_statement(s);
            }
        }
    }

    for (local, class) in &program.subjects {
        let pattern = classes
            .iter()
            .find(|c| &c.class_name == class)
            .map(|c| c.pattern)
            .unwrap_or(Pattern::Mutable);
        let Some(subject) = interp.local(local).cloned() else {
            if pattern.is_immutable() {
                return Err(format!(
                    "seed {}: {class} classified {pattern} but its construction faulted\n{}",
                    program.seed, program.source
                ));
            }
            continue;
        };
        stats.subjects += 1;
        match pattern {
            Pattern::ImmutableObject => stats.immutable[0] += 1,
            Pattern::ImmutableSubclass => stats.immutable[1] += 1,
            Pattern::ImmutableAdapter => stats.immutable[2] += 1,
            Pattern::Mutable => {}
        }
        let readers = observers(&graph, class);
        let baseline = observe(&mut interp, &subject, &readers);
        let mut changed = false;
        for attempt in attempts(&graph, class, local) {
            let stmt_tree = parse_source(&attempt, FileId(1)).map_err(|e| format!("bad attempt {attempt}: {e}"))?;
            let Some(Item::Stmt(stmt)) = stmt_tree.items.first() else {
                return Err(format!("attempt {attempt} is not a statement"));
            };
            stats.attempts += 1;
            let outcome = interp.exec_statement(stmt);
            let after = observe(&mut interp, &subject, &readers);
            let frozen_error = matches!(&outcome, Err(f) if f.kind == FaultKind::FrozenError);
            if frozen_error {
                stats.frozen_errors += 1;
            }
            if pattern.is_immutable() {
                stats.immutable_attempts += 1;
                if after != baseline {
                    return Err(format!(
                        "seed {}: {class} classified {pattern} but `{attempt}` changed observed state\n  before: {baseline:?}\n  after:  {after:?}\n  outcome: {outcome:?}\n{}",
                        program.seed, program.source
                    ));
                }
            } else if after != baseline {
                changed = true;
            }
        }
        if changed {
            stats.mutable_changed += 1;
        }
    }
    Ok(stats)
}

/// Generates and checks `count` programs starting at `first_seed`.
pub fn campaign(first_seed: u64, count: usize) -> Result<FuzzStats, String> {
    let mut total = FuzzStats::default();
    for seed in first_seed..first_seed + count as u64 {
        total.merge(&check(&generate(seed))?);
    }
    Ok(total)
}
