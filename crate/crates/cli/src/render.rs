use std::fmt::Write;

use serde::Serialize;

use frozencheck_core::patterns::{explain, Diagnostic, PatternClassification, Severity};

pub const SCHEMA_VERSION: &str = "1";

/// Analysis results for one input file.
#[derive(Debug, Clone)]
pub struct FileReport {
    pub file: String,
    pub classifications: Vec<PatternClassification>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub errors: usize,
    pub warnings: usize,
}

impl Summary {
    pub fn of(reports: &[FileReport]) -> Summary {
        let mut s = Summary::default();
        for d in reports.iter().flat_map(|r| &r.diagnostics) {
            match d.severity {
                Severity::Error => s.errors += 1,
                Severity::Warning => s.warnings += 1,
                Severity::Info => {}
            }
        }
        s
    }
}

fn summary_line(reports: &[FileReport]) -> String {
    let total: usize = reports.iter().map(|r| r.diagnostics.len()).sum();
    if total == 0 {
        return "0 problems".to_string();
    }
    let s = Summary::of(reports);
    let noun = if total == 1 { "problem" } else { "problems" };
    let plural = |n: usize, word: &str| format!("{n} {word}{}", if n == 1 { "" } else { "s" });
    format!(
        "{total} {noun} ({}, {})",
        plural(s.errors, "error"),
        plural(s.warnings, "warning")
    )
}

/// One `<file>:<line>:<col> <severity> <RULE_ID> <message>` line per
/// diagnostic, then a summary line.
pub fn lint_text(reports: &[FileReport]) -> String {
    let mut out = String::new();
    for r in reports {
        for d in &r.diagnostics {
            let _ = writeln!(
                out,
                "{}:{}:{} {} {} {}",
                r.file, d.span.start_line, d.span.start_col, d.severity, d.rule, d.message
            );
        }
    }
    out.push_str(&summary_line(reports));
    out.push('\n');
    out
}

pub fn classify_text(reports: &[FileReport]) -> String {
    let mut out = String::new();
    for r in reports {
        for c in &r.classifications {
            let _ = write!(out, "{}: {}", r.file, explain(c));
        }
    }
    out
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    version: &'static str,
    diagnostics: Vec<JsonDiagnostic<'a>>,
    classifications: Vec<JsonClassification<'a>>,
    summary: Summary,
}

#[derive(Serialize)]
struct JsonDiagnostic<'a> {
    rule: &'static str,
    severity: &'static str,
    file: &'a str,
    line: u32,
    col: u32,
    class: &'a str,
    message: &'a str,
}

#[derive(Serialize)]
struct JsonClassification<'a> {
    file: &'a str,
    class: &'a str,
    pattern: &'static str,
    criteria: Vec<JsonCriterion>,
}

#[derive(Serialize)]
struct JsonCriterion {
    id: &'static str,
    satisfied: bool,
}

/// The versioned JSON document. `with_diagnostics` is off for `classify`.
pub fn json(reports: &[FileReport], with_diagnostics: bool) -> String {
    let doc = JsonDocument {
        version: SCHEMA_VERSION,
        diagnostics: reports
            .iter()
            .filter(|_| with_diagnostics)
            .flat_map(|r| {
                r.diagnostics.iter().map(move |d| JsonDiagnostic {
                    rule: d.rule.as_str(),
                    severity: d.severity.as_str(),
                    file: &r.file,
                    line: d.span.start_line,
                    col: d.span.start_col,
                    class: &d.class_name,
                    message: &d.message,
                })
            })
            .collect(),
        classifications: reports
            .iter()
            .flat_map(|r| {
                r.classifications.iter().map(move |c| JsonClassification {
                    file: &r.file,
                    class: &c.class_name,
                    pattern: c.pattern.as_str(),
                    criteria: c
                        .criteria
                        .iter()
                        .map(|k| JsonCriterion {
                            id: k.id.as_str(),
                            satisfied: k.satisfied,
                        })
                        .collect(),
                })
            })
            .collect(),
        summary: if with_diagnostics {
            Summary::of(reports)
        } else {
            Summary::default()
        },
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("json document serializes");
    s.push('\n');
    s
}
