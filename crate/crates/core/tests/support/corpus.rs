use std::path::PathBuf;

use frozencheck_core::model::{build_model, ClassGraph};
use frozencheck_core::syntax::{parse_source, FileId, SyntaxTree};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn read(name: &str) -> String {
    let path = corpus_dir().join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn parse(src: &str) -> (SyntaxTree, ClassGraph) {
    let tree = parse_source(src, FileId(0)).expect("fixture parses");
    let graph = build_model(&tree).expect("fixture models");
    (tree, graph)
}

pub const LISTINGS: [&str; 6] = [
    "listing1.mrb",
    "listing2.mrb",
    "listing3.mrb",
    "listing4.mrb",
    "listing5.mrb",
    "listing6.mrb",
];

/// One seeded-defect fixture and the diagnostics it must produce.
#[derive(Debug, Clone)]
pub struct Mutant {
    pub file: String,
    /// `(rule, line, col)` in sorted order.
    pub expected: Vec<(String, u32, u32)>,
}

pub fn mutants() -> Vec<Mutant> {
    read("mutants/expected.txt")
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|line| {
            let mut parts = line.split_whitespace();
            let file = parts.next().unwrap().to_string();
            let expected = parts
                .map(|p| {
                    let (rule, pos) = p.split_once('@').unwrap();
                    let (l, c) = pos.split_once(':').unwrap();
                    (rule.to_string(), l.parse().unwrap(), c.parse().unwrap())
                })
                .collect();
            Mutant { file, expected }
        })
        .collect()
}

/// Every `.mrb` fixture in the corpus, mutants included.
pub fn all_fixtures() -> Vec<String> {
    let mut out: Vec<String> = LISTINGS.iter().map(|s| s.to_string()).collect();
    out.extend(mutants().into_iter().map(|m| format!("mutants/{}", m.file)));
    out
}

use frozencheck_core::runtime::{evaluate, FaultKind, Interpreter, RuntimeFault, Value};
use frozencheck_core::syntax::Item;

/// Runs `src` (a fault just stops the program), then executes `probe`.
pub fn probe(src: &str, probe: &str) -> (Interpreter, Result<Value, RuntimeFault>) {
    let (tree, _) = parse(src);
    let mut interp = Interpreter::new();
    let _ = interp.run(&tree);
    let stmt_tree = parse_source(probe, FileId(1)).expect("probe parses");
    let Some(Item::Stmt(stmt)) = stmt_tree.items.first() else {
        panic!("probe is not a statement");
    };
    let r = interp.exec_statement(stmt);
    (interp, r)
}

fn kind(r: &Result<Value, RuntimeFault>) -> Option<FaultKind> {
    r.as_ref().err().map(|e| e.kind)
}

fn ivar_write_allowed(src: &str, local: &str, path: &[&str]) -> bool {
    let (tree, _) = parse(src);
    let mut interp = Interpreter::new();
    let _ = interp.run(&tree);
    let mut v = interp.local(local).cloned().expect("local exists");
    for ivar in path {
        let id = v.as_obj().expect("object");
        v = interp.instance(id).ivar(ivar);
    }
    let id = v.as_obj().expect("object");
    interp.set_ivar(id, "@probe", Value::Int(1)).is_ok()
}

/// Confirms a mutant's defect at runtime by contrasting it with the
/// listing it was derived from. `Ok` carries a one-line explanation.
pub fn runtime_oracle(file: &str) -> Result<String, String> {
    let mutant = read(&format!("mutants/{file}"));
    let l2 = read("listing2.mrb");
    let l4 = read("listing4.mrb");
    let l6 = read("listing6.mrb");
    let expect = |ok: bool, what: &str| if ok { Ok(what.to_string()) } else { Err(format!("{file}: {what} did not hold")) };
    let out = |src: &str| evaluate(&parse(src).0);

    match file {
        "m01_object_missing_freeze.mrb" => expect(
            ivar_write_allowed(&mutant, "person", &[]) && !ivar_write_allowed(&l2, "person", &[]),
            "post-construction ivar write succeeds (listing raises FrozenError)",
        ),
        "m02_object_reader_returns_raw_ivar.mrb" | "m11_object_attr_reader_leaks.mrb" => {
            let m = out(&mutant);
            let o = out(&l2);
            expect(
                m.stdout_lines == ["Foo Street", "Bar Street"] && o.stdout_lines == ["Foo Street", "Foo Street"],
                "caller's write through the reader becomes visible",
            )
        }
        "m03_subclass_shallow_freeze.mrb" | "m09_adapter_attribute_not_frozen.mrb" => {
            let original = if file.starts_with("m03") { &l4 } else { &l6 };
            let m = out(&mutant);
            let o = out(original);
            expect(
                m.error.is_none() && o.error.as_ref().is_some_and(|e| e.kind == FaultKind::FrozenError),
                "person2.address.line1 = ... succeeds (listing raises FrozenError)",
            )
        }
        "m10_object_reopened.mrb" => {
            let (mi, m) = probe(&mutant, "puts person.name");
            let (oi, o) = probe(&l2, "puts person.name");
            let last = |i: &Interpreter| i.stdout().last().cloned();
            expect(
                m.is_ok() && o.is_ok() && last(&mi).as_deref() == Some("Impostor") && last(&oi).as_deref() == Some("Foo McBar"),
                "the reopening silently replaces what name returns",
            )
        }
        "m04_object_own_writer.mrb" => {
            let (_, m) = probe(&mutant, "person.name = \"Other\"");
            let (_, o) = probe(&l2, "person.name = \"Other\"");
            expect(
                kind(&m) == Some(FaultKind::FrozenError) && kind(&o) == Some(FaultKind::NoMethodError),
                "the added writer exists and raises FrozenError when called",
            )
        }
        "m05_object_mutator_method.mrb" => {
            let (_, m) = probe(&mutant, "person.move(\"x\")");
            let (_, o) = probe(&l2, "person.move(\"x\")");
            expect(
                kind(&m) == Some(FaultKind::FrozenError) && kind(&o) == Some(FaultKind::NoMethodError),
                "the added mutator raises FrozenError when called",
            )
        }
        "m12_subclass_own_mutator.mrb" => {
            let (_, m) = probe(&mutant, "person2.move(\"x\")");
            let (_, o) = probe(&l4, "person2.move(\"x\")");
            expect(
                kind(&m) == Some(FaultKind::FrozenError) && kind(&o) == Some(FaultKind::NoMethodError),
                "the added mutator raises FrozenError when called",
            )
        }
        "m06_subclass_freeze_before_super.mrb" | "m07_object_write_after_freeze.mrb" => {
            let m = out(&mutant);
            let faulted_in_ctor = m
                .error
                .as_ref()
                .is_some_and(|e| e.kind == FaultKind::FrozenError && e.message.contains("ImmutablePerson"));
            let original = if file.starts_with("m06") { &l4 } else { &l2 };
            let o = out(original);
            let original_ok = o.error.as_ref().is_none_or(|e| !e.message.contains("ImmutablePerson"));
            expect(faulted_in_ctor && original_ok, "construction itself raises FrozenError")
        }
        "m08_adapter_wrapped_not_frozen.mrb" => expect(
            ivar_write_allowed(&mutant, "person2", &["@mutable_person"])
                && !ivar_write_allowed(&l6, "person2", &["@mutable_person"]),
            "the wrapped Person accepts writes (listing raises FrozenError)",
        ),
        "m13_adapter_non_delegating_method.mrb" => {
            let (interp, m) = probe(&mutant, "leaked = person2.person");
            let (_, o) = probe(&l6, "leaked = person2.person");
            let wrapped = interp
                .local("person2")
                .and_then(|p| p.as_obj())
                .map(|id| interp.instance(id).ivar("@mutable_person"));
            expect(
                m.is_ok() && wrapped.as_ref() == m.as_ref().ok() && kind(&o) == Some(FaultKind::NoMethodError),
                "callers obtain the adapter's internal object itself (identity leak; its state stays frozen)",
            )
        }
        other => Err(format!("no runtime oracle for {other}")),
    }
}

/// A program with `n` classes (about 20 lines each) cycling through the
/// listing shapes, plus a construction site for each immutable class.
pub fn synth_program(n: usize) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let mut script = String::new();
    for i in 0..n {
        match i % 4 {
            0 => {
                let _ = write!(
                    s,
                    "class Address{i}\n  attr_accessor :line1, :line2, :line3\n\n  def initialize(line1, line2, line3)\n    @line1 = line1\n    @line2 = line2\n    @line3 = line3\n  end\n\n  def label\n    return \"a{i}\"\n  end\nend\n\n"
                );
                let _ = writeln!(script, "a{i} = Address{i}.new(\"x\", \"y\", \"z\")");
            }
            1 => {
                let a = i - 1;
                let _ = write!(
                    s,
                    "class Person{i}\n  attr_reader :name\n\n  def initialize(name, address)\n    @name = name\n    @address = address\n    self.freeze\n  end\n\n  def address\n    return @address.clone\n  end\n\n  def tag\n    return {i}\n  end\nend\n\n"
                );
                let _ = writeln!(script, "p{i} = Person{i}.new(\"n\", a{a})");
            }
            2 => {
                let p = i - 1;
                let _ = write!(
                    s,
                    "class Frozen{i} < Person{p}\n  def initialize(name, address)\n    super name, address\n    self.freeze\n  end\n\n  def address\n    return @address.clone\n  end\n\n  def kind\n    return \"subclass\"\n  end\n\n  def size\n    return 2\n  end\nend\n\n"
                );
                let _ = writeln!(script, "f{i} = Frozen{i}.new(\"m\", a{})", i - 2);
            }
            _ => {
                let _ = write!(
                    s,
                    "class Wrapper{i}\n  def initialize(l1, l2, l3)\n    @inner = Address{}.new(l1, l2, l3)\n    @inner.freeze\n  end\n\n  def line1\n    return @inner.line1\n  end\n\n  def line2\n    return @inner.line2\n  end\n\n  def line3\n    return @inner.line3\n  end\nend\n\n",
                    i - 3
                );
                let _ = writeln!(script, "w{i} = Wrapper{i}.new(\"1\", \"2\", \"3\")");
            }
        }
    }
    s + &script
}
