//! Pattern classification, lint rules and rationale rendering.

mod classify;
mod explain;
mod lint;

pub use classify::{
    checklists, classify, classify_all, classify_with, Criterion, CriterionId, Offender, Pattern,
    PatternClassification,
};
pub use explain::explain;
pub use lint::{lint, sort_diagnostics, Diagnostic, LintConfig, LintReport, RuleId, Severity};
