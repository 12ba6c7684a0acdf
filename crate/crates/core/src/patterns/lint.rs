use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{build_model, ClassGraph, FlowAnalysis};
use crate::syntax::{Item, SourceSpan, SyntaxTree};

use super::classify::{classify_facts, ClassFacts, CriterionId, Pattern, PatternClassification};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RuleId {
    #[serde(rename = "IMM001")]
    Imm001,
    #[serde(rename = "IMM002")]
    Imm002,
    #[serde(rename = "IMM003")]
    Imm003,
    #[serde(rename = "IMM004")]
    Imm004,
    #[serde(rename = "IMM005")]
    Imm005,
    #[serde(rename = "IMM006")]
    Imm006,
    #[serde(rename = "IMM007")]
    Imm007,
}

impl RuleId {
    pub const ALL: [RuleId; 7] = [
        RuleId::Imm001,
        RuleId::Imm002,
        RuleId::Imm003,
        RuleId::Imm004,
        RuleId::Imm005,
        RuleId::Imm006,
        RuleId::Imm007,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleId::Imm001 => "IMM001",
            RuleId::Imm002 => "IMM002",
            RuleId::Imm003 => "IMM003",
            RuleId::Imm004 => "IMM004",
            RuleId::Imm005 => "IMM005",
            RuleId::Imm006 => "IMM006",
            RuleId::Imm007 => "IMM007",
        }
    }

    /// Kebab-case short name, e.g. `missing-constructor-freeze`.
    pub fn slug(self) -> &'static str {
        match self {
            RuleId::Imm001 => "missing-constructor-freeze",
            RuleId::Imm002 => "mutator-method-present",
            RuleId::Imm003 => "accessor-leaks-mutable-reference",
            RuleId::Imm004 => "shallow-freeze",
            RuleId::Imm005 => "reopened-immutable-class",
            RuleId::Imm006 => "subclass-freeze-before-super",
            RuleId::Imm007 => "mutable-class-not-allowed",
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            RuleId::Imm005 | RuleId::Imm007 => Severity::Warning,
            _ => Severity::Error,
        }
    }

    pub fn parse(s: &str) -> Option<RuleId> {
        RuleId::ALL.into_iter().find(|r| r.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub rule: RuleId,
    pub severity: Severity,
    pub span: SourceSpan,
    pub class_name: String,
    pub message: String,
    pub help: Option<String>,
}

impl Diagnostic {
    fn new(rule: RuleId, span: SourceSpan, class_name: &str, message: String) -> Self {
        Diagnostic {
            rule,
            severity: rule.severity(),
            span,
            class_name: class_name.to_string(),
            message,
            help: None,
        }
    }

    fn help(mut self, help: impl Into<String>) -> Self {
        self.help = Some(help.into());
        self
    }
}

/// Lint policy.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintConfig {
    pub immutable_by_default: bool,
    pub allow_mutable: Vec<String>,
}

/// Result of linting one syntax tree.
#[derive(Debug, Clone)]
pub struct LintReport {
    pub classifications: Vec<PatternClassification>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Classifies every class of `tree` and lints them. IMM005 needs the
/// tree to re-check each reopened class's first definition in isolation.
pub fn lint(tree: &SyntaxTree, graph: &ClassGraph, config: &LintConfig) -> LintReport {
    let mut flow = FlowAnalysis::new(graph);
    let mut classifications = Vec::new();
    let mut diagnostics = Vec::new();
    let allowed: BTreeSet<&str> = config.allow_mutable.iter().map(String::as_str).collect();

    for class in graph.classes.values() {
        let facts = ClassFacts::gather(class, &mut flow);
        let c = classify_facts(&facts);
        if !c.pattern.is_immutable() && c.intends_immutability {
            pattern_diagnostics(&facts, &c, &mut diagnostics);
        }
        if class.reopened && first_definition_immutable(tree, &class.name) {
            let reopening = class.definition_spans[1];
            diagnostics.push(
                Diagnostic::new(
                    RuleId::Imm005,
                    reopening,
                    &class.name,
                    format!(
                        "{} is reopened after a definition that classifies as immutable; reopening can change its immutability",
                        class.name
                    ),
                )
                .help("define all members in one class body"),
            );
        }
        if config.immutable_by_default && c.pattern == Pattern::Mutable && !allowed.contains(class.name.as_str()) {
            diagnostics.push(
                Diagnostic::new(
                    RuleId::Imm007,
                    class.name_span,
                    &class.name,
                    format!("{} is mutable but not listed in allow_mutable", class.name),
                )
                .help("make the class immutable or add it to allow_mutable"),
            );
        }
        classifications.push(c);
    }

    sort_diagnostics(&mut diagnostics);
    LintReport {
        classifications,
        diagnostics,
    }
}

/// Diagnostics sorted by (file, line, col, rule).
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        (a.span.sort_key(), a.rule, &a.class_name, &a.message).cmp(&(
            b.span.sort_key(),
            b.rule,
            &b.class_name,
            &b.message,
        ))
    });
}

fn first_definition_immutable(tree: &SyntaxTree, class_name: &str) -> bool {
    let mut seen = false;
    let items = tree
        .items
        .iter()
        .filter(|item| match item {
            Item::Class(c) if c.name.text == class_name => !std::mem::replace(&mut seen, true),
            _ => true,
        })
        .cloned()
        .collect();
    let filtered = SyntaxTree { items };
    match build_model(&filtered) {
        Ok(g) => super::classify(class_name, &g).is_some_and(|c| c.pattern.is_immutable()),
        Err(_) => false,
    }
}

fn pattern_diagnostics(facts: &ClassFacts<'_>, c: &PatternClassification, out: &mut Vec<Diagnostic>) {
    let name = c.class_name.as_str();
    let ctor_span = facts.ctor.span.filter(|_| facts.own_ctor).unwrap_or(c.class_span);
    let failed = |id| c.criterion(id).filter(|k| !k.satisfied);

    match c.checked {
        Pattern::ImmutableAdapter => {
            if let Some(k) = failed(CriterionId::WrappedFrozen) {
                let (ivar, class) = c.wrapped.clone().unwrap_or_default();
                out.push(
                    Diagnostic::new(
                        RuleId::Imm001,
                        k.span.unwrap_or(ctor_span),
                        name,
                        format!("{name}: constructor does not freeze the wrapped {class} in {ivar}"),
                    )
                    .help(format!("call {ivar}.freeze in initialize")),
                );
            }
        }
        _ => {
            if failed(CriterionId::FreezesSelf).is_some() {
                out.push(
                    Diagnostic::new(
                        RuleId::Imm001,
                        ctor_span,
                        name,
                        format!("{name}: constructor does not call self.freeze"),
                    )
                    .help("end initialize with self.freeze"),
                );
            }
        }
    }

    if let Some(k) = failed(CriterionId::NoMutators) {
        for m in &k.offenders {
            let origin = if m.detail.is_empty() {
                String::new()
            } else {
                format!(" ({})", m.detail)
            };
            out.push(
                Diagnostic::new(
                    RuleId::Imm002,
                    m.span,
                    name,
                    format!("{name}: mutator method {}{origin}; immutable classes must have no mutator methods", m.name),
                )
                .help("remove the writer or return a new instance instead"),
            );
        }
    }

    if let Some(k) = failed(CriterionId::ReadersSafe) {
        for r in &k.offenders {
            let d = match c.checked {
                Pattern::ImmutableObject => Diagnostic::new(
                    RuleId::Imm003,
                    r.span,
                    name,
                    format!("{name}: reader {} {}", r.name, r.detail),
                )
                .help("return a clone of the instance variable"),
                Pattern::ImmutableAdapter => Diagnostic::new(
                    RuleId::Imm004,
                    ctor_span,
                    name,
                    format!(
                        "{name}: the wrapped object is frozen but reader {} {}; freeze is shallow",
                        r.name, r.detail
                    ),
                )
                .help("freeze the wrapped attribute in initialize or clone it on read"),
                _ => Diagnostic::new(
                    RuleId::Imm004,
                    ctor_span,
                    name,
                    format!(
                        "{name}: self is frozen but reader {} {}; freeze is shallow",
                        r.name, r.detail
                    ),
                )
                .help("freeze the referenced object in initialize or clone it on read"),
            };
            out.push(d);
        }
    }

    if let Some(k) = failed(CriterionId::MethodsDelegate) {
        for r in &k.offenders {
            out.push(
                Diagnostic::new(
                    RuleId::Imm003,
                    r.span,
                    name,
                    format!("{name}: method {} {}", r.name, r.detail),
                )
                .help("delegate to the wrapped object or return a value"),
            );
        }
    }

    if let Some(k) = failed(CriterionId::FreezeIsFinal) {
        for w in &k.offenders {
            out.push(
                Diagnostic::new(
                    RuleId::Imm006,
                    w.span,
                    name,
                    format!("{name}: {} in initialize", w.detail),
                )
                .help("call super first and make self.freeze the last statement of initialize"),
            );
        }
    }
}
