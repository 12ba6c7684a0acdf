//! Tree-walking evaluator with faithful freeze/clone semantics.
//!
//! Instances live in a [`Heap`] arena and are referenced by identity.
//! Freezing is per-instance and monotonic; any instance-variable write to a
//! frozen instance (direct, or through a synthesized writer) faults with
//! `FrozenError` and leaves the instance untouched. `clone` is shallow and
//! copies the frozen flag.

mod value;

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use serde::Serialize;
use thiserror::Error;

use crate::syntax::{ClassDef, Expr, ExprKind, Item, Member, MethodDef, SourceSpan, Stmt, StmtKind, SyntaxTree};

pub use value::{Heap, Instance, ObjId, Value};

/// Nested method calls beyond this depth fault with `SystemStackError`.
pub const MAX_CALL_DEPTH: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FaultKind {
    FrozenError,
    NoMethodError,
    ArgumentError,
    NameError,
    SystemStackError,
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind}: {message}")]
pub struct RuntimeFault {
    pub kind: FaultKind,
    pub message: String,
    pub span: SourceSpan,
}

impl RuntimeFault {
    fn new(kind: FaultKind, message: impl Into<String>, span: SourceSpan) -> Self {
        RuntimeFault {
            kind,
            message: message.into(),
            span,
        }
    }

    pub fn is_frozen_error(&self) -> bool {
        self.kind == FaultKind::FrozenError
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExecutionResult {
    pub stdout_lines: Vec<String>,
    pub error: Option<RuntimeFault>,
}

impl ExecutionResult {
    /// Stdout as printed, one `\n` after each line.
    pub fn stdout(&self) -> String {
        self.stdout_lines.iter().map(|l| format!("{l}\n")).collect()
    }
}

/// Runs a whole program top to bottom, stopping at the first fault.
pub fn evaluate(tree: &SyntaxTree) -> ExecutionResult {
    let mut interp = Interpreter::new();
    let error = interp.run(tree).err();
    ExecutionResult {
        stdout_lines: interp.take_stdout(),
        error,
    }
}

#[derive(Debug, Clone)]
enum RtMember {
    Reader(String),
    Writer(String),
    Method(Rc<MethodDef>),
}

#[derive(Debug, Clone)]
struct RtClass {
    name: Rc<str>,
    superclass: Option<Rc<str>>,
    members: HashMap<String, RtMember>,
}

struct Frame {
    receiver: Option<Value>,
    locals: HashMap<String, Value>,
    /// Defining class and name of the executing method, for `super`.
    method: Option<(Rc<str>, String)>,
}

impl Frame {
    fn top_level() -> Self {
        Frame {
            receiver: None,
            locals: HashMap::new(),
            method: None,
        }
    }
}

enum Flow {
    Normal(Value),
    Return(Value),
}

type RtResult<T> = Result<T, RuntimeFault>;

/// Interpreter state. Top-level locals persist across [`Interpreter::run`]
/// and [`Interpreter::exec_statement`] calls, so a harness can build state
/// with one program and then probe it statement by statement.
pub struct Interpreter {
    classes: HashMap<String, RtClass>,
    heap: Heap,
    top: Frame,
    stdout: Vec<String>,
    depth: usize,
}

impl Default for Interpreter {
    fn default() -> Self {
        Self::new()
    }
}

impl Interpreter {
    pub fn new() -> Self {
        Interpreter {
            classes: HashMap::new(),
            heap: Heap::default(),
            top: Frame::top_level(),
            stdout: Vec::new(),
            depth: 0,
        }
    }

    pub fn run(&mut self, tree: &SyntaxTree) -> RtResult<()> {
        for item in &tree.items {
            match item {
                Item::Class(def) => self.define_class(def)?,
                Item::Stmt(stmt) => {
                    self.exec_statement(stmt)?;
                }
            }
        }
        Ok(())
    }

    /// Executes one top-level statement.
    pub fn exec_statement(&mut self, stmt: &Stmt) -> RtResult<Value> {
        let mut top = std::mem::replace(&mut self.top, Frame::top_level());
        let result = self.exec(stmt, &mut top);
        self.top = top;
        match result? {
            Flow::Normal(v) | Flow::Return(v) => Ok(v),
        }
    }

    pub fn stdout(&self) -> &[String] {
        &self.stdout
    }

    pub fn take_stdout(&mut self) -> Vec<String> {
        std::mem::take(&mut self.stdout)
    }

    pub fn heap(&self) -> &Heap {
        &self.heap
    }

    pub fn instance(&self, id: ObjId) -> &Instance {
        self.heap.get(id)
    }

    pub fn local(&self, name: &str) -> Option<&Value> {
        self.top.locals.get(name)
    }

    pub fn set_local(&mut self, name: &str, value: Value) {
        self.top.locals.insert(name.to_string(), value);
    }

    pub fn has_class(&self, name: &str) -> bool {
        self.classes.contains_key(name)
    }

    /// Allocates a bare, unfrozen instance without running `initialize`.
    pub fn allocate(&mut self, class: &str) -> RtResult<ObjId> {
        let cls = self.classes.get(class).ok_or_else(|| {
            RuntimeFault::new(
                FaultKind::NameError,
                format!("uninitialized constant {class}"),
                SourceSpan::default(),
            )
        })?;
        Ok(self.heap.alloc(Instance::new(cls.name.clone())))
    }

    fn define_class(&mut self, def: &ClassDef) -> RtResult<()> {
        let name = def.name.text.as_str();
        if !self.classes.contains_key(name) {
            let superclass = match &def.superclass {
                Some(sup) => match self.classes.get(&sup.text) {
                    Some(c) => Some(c.name.clone()),
                    None => {
                        return Err(RuntimeFault::new(
                            FaultKind::NameError,
                            format!("uninitialized constant {}", sup.text),
                            sup.span,
                        ))
                    }
                },
                None => None,
            };
            self.classes.insert(
                name.to_string(),
                RtClass {
                    name: Rc::from(name),
                    superclass,
                    members: HashMap::new(),
                },
            );
        }
        let cls = self.classes.get_mut(name).expect("inserted above");
        for member in &def.members {
            match member {
                Member::Attr(decl) => {
                    for attr in &decl.names {
                        let ivar = format!("@{}", attr.text);
                        if decl.kind.has_reader() {
                            cls.members
                                .insert(attr.text.clone(), RtMember::Reader(ivar.clone()));
                        }
                        if decl.kind.has_writer() {
                            cls.members
                                .insert(format!("{}=", attr.text), RtMember::Writer(ivar));
                        }
                    }
                }
                Member::Method(m) => {
                    cls.members
                        .insert(m.name.text.clone(), RtMember::Method(Rc::new(m.clone())));
                }
            }
        }
        Ok(())
    }

    /// Finds `selector` starting at `class`, returning the defining class.
    fn find_member(&self, class: &str, selector: &str) -> Option<(Rc<str>, RtMember)> {
        let mut cur = self.classes.get(class);
        let mut hops = 0;
        while let Some(c) = cur {
            if let Some(m) = c.members.get(selector) {
                return Some((c.name.clone(), m.clone()));
            }
            cur = c.superclass.as_deref().and_then(|s| self.classes.get(s));
            hops += 1;
            if hops > self.classes.len() {
                break;
            }
        }
        None
    }

    // ---- primitive operations ----

    /// Marks an instance frozen; value types are already immutable.
    pub fn freeze_object(&mut self, v: &Value) -> Value {
        if let Value::Obj(id) = v {
            self.heap.get_mut(*id).freeze();
        }
        v.clone()
    }

    pub fn is_frozen(&self, v: &Value) -> bool {
        match v {
            Value::Obj(id) => self.heap.get(*id).is_frozen(),
            _ => true,
        }
    }

    /// Shallow copy with a new identity; the frozen flag is copied.
    pub fn clone_object(&mut self, v: &Value) -> Value {
        match v {
            Value::Obj(id) => {
                let copy = self.heap.get(*id).shallow_clone();
                Value::Obj(self.heap.alloc(copy))
            }
            other => other.clone(),
        }
    }

    /// Writes an instance variable, faulting (and changing nothing) when the
    /// target is frozen.
    pub fn set_ivar(&mut self, target: ObjId, name: &str, value: Value) -> RtResult<()> {
        self.set_ivar_at(target, name, value, SourceSpan::default())
    }

    fn set_ivar_at(&mut self, target: ObjId, name: &str, value: Value, span: SourceSpan) -> RtResult<()> {
        let inst = self.heap.get_mut(target);
        if inst.is_frozen() {
            return Err(RuntimeFault::new(
                FaultKind::FrozenError,
                format!("can't modify frozen {}", inst.class_name),
                span,
            ));
        }
        inst.ivars.insert(name.to_string(), value);
        Ok(())
    }

    /// Text `puts` prints for a value.
    pub fn render(&self, v: &Value) -> String {
        match v {
            Value::Obj(id) => format!("#<{}>", self.heap.get(*id).class_name),
            other => other.to_string(),
        }
    }

    /// Structural rendering that follows object references up to `depth`
    /// levels; identity is not part of the output.
    pub fn snapshot(&self, v: &Value, depth: usize) -> String {
        match v {
            Value::Nil => "nil".into(),
            Value::Bool(b) => b.to_string(),
            Value::Int(n) => n.to_string(),
            Value::Str(s) => format!("{s:?}"),
            Value::Obj(id) => {
                let inst = self.heap.get(*id);
                if depth == 0 {
                    return format!("#<{}>", inst.class_name);
                }
                let fields: Vec<String> = inst
                    .ivars
                    .iter()
                    .map(|(k, v)| format!("{k}={}", self.snapshot(v, depth - 1)))
                    .collect();
                format!("{}{{{}}}", inst.class_name, fields.join(", "))
            }
        }
    }

    fn class_label(&self, v: &Value) -> String {
        match v {
            Value::Nil => "nil".into(),
            Value::Bool(_) => "Boolean".into(),
            Value::Int(_) => "Integer".into(),
            Value::Str(_) => "String".into(),
            Value::Obj(id) => format!("an instance of {}", self.heap.get(*id).class_name),
        }
    }

    // ---- evaluation ----

    /// Invokes `selector` on `receiver`, as `receiver.selector(args)` would.
    /// `initialize` is private, as in the host language.
    pub fn call_method(&mut self, receiver: Value, selector: &str, args: Vec<Value>) -> RtResult<Value> {
        if selector == "initialize" {
            return Err(private_initialize(&self.class_label(&receiver), SourceSpan::default()));
        }
        self.call(receiver, selector, args, SourceSpan::default())
    }

    fn call(&mut self, receiver: Value, selector: &str, args: Vec<Value>, span: SourceSpan) -> RtResult<Value> {
        if let Value::Obj(id) = &receiver {
            let class = self.heap.get(*id).class_name.clone();
            if let Some((owner, member)) = self.find_member(&class, selector) {
                return self.invoke(receiver, owner, member, selector, args, span);
            }
        }
        match selector {
            "freeze" | "frozen?" | "clone" => {
                check_arity(selector, args.len(), 0, span)?;
                Ok(match selector {
                    "freeze" => self.freeze_object(&receiver),
                    "frozen?" => Value::Bool(self.is_frozen(&receiver)),
                    _ => self.clone_object(&receiver),
                })
            }
            _ => Err(RuntimeFault::new(
                FaultKind::NoMethodError,
                format!(
                    "undefined method '{selector}' for {}",
                    self.class_label(&receiver)
                ),
                span,
            )),
        }
    }

    fn invoke(
        &mut self,
        receiver: Value,
        owner: Rc<str>,
        member: RtMember,
        selector: &str,
        args: Vec<Value>,
        span: SourceSpan,
    ) -> RtResult<Value> {
        let id = receiver.as_obj().expect("members are only found on instances");
        match member {
            RtMember::Reader(ivar) => {
                check_arity(selector, args.len(), 0, span)?;
                Ok(self.heap.get(id).ivar(&ivar))
            }
            RtMember::Writer(ivar) => {
                check_arity(selector, args.len(), 1, span)?;
                let v = args.into_iter().next().expect("arity checked");
                self.set_ivar_at(id, &ivar, v.clone(), span)?;
                Ok(v)
            }
            RtMember::Method(def) => {
                check_arity(selector, args.len(), def.params.len(), span)?;
                if self.depth >= MAX_CALL_DEPTH {
                    return Err(RuntimeFault::new(
                        FaultKind::SystemStackError,
                        "stack level too deep",
                        span,
                    ));
                }
                let mut frame = Frame {
                    receiver: Some(receiver),
                    locals: def
                        .params
                        .iter()
                        .map(|p| p.text.clone())
                        .zip(args)
                        .collect(),
                    method: Some((owner, def.name.text.clone())),
                };
                self.depth += 1;
                let result = self.exec_body(&def.body, &mut frame);
                self.depth -= 1;
                result
            }
        }
    }

    fn exec_body(&mut self, body: &[Stmt], frame: &mut Frame) -> RtResult<Value> {
        let mut last = Value::Nil;
        for stmt in body {
            match self.exec(stmt, frame)? {
                Flow::Normal(v) => last = v,
                Flow::Return(v) => return Ok(v),
            }
        }
        Ok(last)
    }

    fn exec(&mut self, stmt: &Stmt, frame: &mut Frame) -> RtResult<Flow> {
        let value = match &stmt.kind {
            StmtKind::IVarAssign { name, value } => {
                let v = self.eval(value, frame)?;
                match frame.receiver.as_ref().and_then(Value::as_obj) {
                    Some(id) => self.set_ivar_at(id, &name.text, v.clone(), stmt.span)?,
                    None => {
                        return Err(RuntimeFault::new(
                            FaultKind::NameError,
                            format!("no receiver for instance variable {}", name.text),
                            stmt.span,
                        ))
                    }
                }
                v
            }
            StmtKind::LocalAssign { name, value } => {
                let v = self.eval(value, frame)?;
                frame.locals.insert(name.text.clone(), v.clone());
                v
            }
            StmtKind::AttrWrite {
                receiver,
                attr,
                value,
            } => {
                let recv = self.eval(receiver, frame)?;
                let v = self.eval(value, frame)?;
                self.call(recv, &format!("{}=", attr.text), vec![v.clone()], stmt.span)?;
                v
            }
            StmtKind::Expr { expr } => self.eval(expr, frame)?,
            StmtKind::Return { value } => {
                let v = self.eval(value, frame)?;
                return Ok(Flow::Return(v));
            }
            StmtKind::Puts { value } => {
                let v = self.eval(value, frame)?;
                let line = self.render(&v);
                self.stdout.push(line);
                Value::Nil
            }
            StmtKind::Super { args } => {
                let values = self.eval_args(args, frame)?;
                self.call_super(frame, values, stmt.span)?
            }
        };
        Ok(Flow::Normal(value))
    }

    fn call_super(&mut self, frame: &Frame, args: Vec<Value>, span: SourceSpan) -> RtResult<Value> {
        let (Some(receiver), Some((owner, name))) = (&frame.receiver, &frame.method) else {
            return Err(RuntimeFault::new(
                FaultKind::NoMethodError,
                "super called outside of method",
                span,
            ));
        };
        let parent = self
            .classes
            .get(&**owner)
            .and_then(|c| c.superclass.clone());
        let found = parent.and_then(|p| self.find_member(&p, name));
        match found {
            Some((def_owner, member)) => {
                self.invoke(receiver.clone(), def_owner, member, name, args, span)
            }
            // the implicit root `initialize` takes no arguments
            None if name == "initialize" => {
                check_arity(name, args.len(), 0, span)?;
                Ok(Value::Nil)
            }
            None => Err(RuntimeFault::new(
                FaultKind::NoMethodError,
                format!("super: no superclass method '{name}'"),
                span,
            )),
        }
    }

    fn eval_args(&mut self, args: &[Expr], frame: &mut Frame) -> RtResult<Vec<Value>> {
        args.iter().map(|a| self.eval(a, frame)).collect()
    }

    fn eval(&mut self, expr: &Expr, frame: &mut Frame) -> RtResult<Value> {
        Ok(match &expr.kind {
            ExprKind::Str(s) => Value::str(s),
            ExprKind::Int(n) => Value::Int(*n),
            ExprKind::Nil => Value::Nil,
            ExprKind::Bool(b) => Value::Bool(*b),
            ExprKind::SelfRef => match &frame.receiver {
                Some(v) => v.clone(),
                None => {
                    return Err(RuntimeFault::new(
                        FaultKind::NameError,
                        "self is not available at top level",
                        expr.span,
                    ))
                }
            },
            ExprKind::IVar(name) => match frame.receiver.as_ref().and_then(Value::as_obj) {
                Some(id) => self.heap.get(id).ivar(name),
                None => Value::Nil,
            },
            ExprKind::Local(name) => {
                if let Some(v) = frame.locals.get(name) {
                    v.clone()
                } else if let Some(recv) = frame.receiver.clone() {
                    // a bare identifier that is not a local is a self call
                    let class = recv.as_obj().map(|id| self.heap.get(id).class_name.clone());
                    let known = class.is_some_and(|c| self.find_member(&c, name).is_some())
                        || matches!(name.as_str(), "freeze" | "frozen?" | "clone");
                    if !known {
                        return Err(undefined_name(name, expr.span));
                    }
                    self.call(recv, name, Vec::new(), expr.span)?
                } else {
                    return Err(undefined_name(name, expr.span));
                }
            }
            ExprKind::Const(name) => {
                let message = if self.classes.contains_key(name) {
                    format!("class {name} cannot be used as a value")
                } else {
                    format!("uninitialized constant {name}")
                };
                return Err(RuntimeFault::new(FaultKind::NameError, message, expr.span));
            }
            ExprKind::Call {
                receiver,
                name,
                args,
            } => {
                if let ExprKind::Const(class) = &receiver.kind {
                    let values = self.eval_args(args, frame)?;
                    return self.call_class_method(class, &name.text, values, receiver.span, name.span);
                }
                let recv = self.eval(receiver, frame)?;
                let values = self.eval_args(args, frame)?;
                if name.text == "initialize" && !matches!(receiver.kind, ExprKind::SelfRef) {
                    return Err(private_initialize(&self.class_label(&recv), name.span));
                }
                self.call(recv, &name.text, values, name.span)?
            }
        })
    }

    fn call_class_method(
        &mut self,
        class: &str,
        selector: &str,
        args: Vec<Value>,
        class_span: SourceSpan,
        span: SourceSpan,
    ) -> RtResult<Value> {
        if !self.classes.contains_key(class) {
            return Err(RuntimeFault::new(
                FaultKind::NameError,
                format!("uninitialized constant {class}"),
                class_span,
            ));
        }
        if selector != "new" {
            return Err(RuntimeFault::new(
                FaultKind::NoMethodError,
                format!("undefined method '{selector}' for class {class}"),
                span,
            ));
        }
        self.instantiate(class, args, span)
    }

    /// `Class.new(args)`: allocate, then run the nearest `initialize`.
    pub fn instantiate(&mut self, class: &str, args: Vec<Value>, span: SourceSpan) -> RtResult<Value> {
        let id = self.allocate(class).map_err(|mut f| {
            f.span = span;
            f
        })?;
        let obj = Value::Obj(id);
        match self.find_member(class, "initialize") {
            Some((owner, member)) => {
                self.invoke(obj.clone(), owner, member, "initialize", args, span)?;
            }
            None => check_arity("initialize", args.len(), 0, span)?,
        }
        Ok(obj)
    }
}

fn check_arity(selector: &str, given: usize, expected: usize, span: SourceSpan) -> RtResult<()> {
    if given == expected {
        Ok(())
    } else {
        Err(RuntimeFault::new(
            FaultKind::ArgumentError,
            format!("wrong number of arguments calling '{selector}' (given {given}, expected {expected})"),
            span,
        ))
    }
}

fn private_initialize(receiver: &str, span: SourceSpan) -> RuntimeFault {
    RuntimeFault::new(
        FaultKind::NoMethodError,
        format!("private method 'initialize' called for {receiver}"),
        span,
    )
}

fn undefined_name(name: &str, span: SourceSpan) -> RuntimeFault {
    RuntimeFault::new(
        FaultKind::NameError,
        format!("undefined local variable or method '{name}'"),
        span,
    )
}
