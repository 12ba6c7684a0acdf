use std::fmt::Write;

use super::classify::{CriterionId, PatternClassification};

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Human-readable rationale: the checked pattern's criteria in checklist
/// order, each with its outcome and span, followed by mutators and the
/// wrapped class.
pub fn explain(c: &PatternClassification) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "class {} ({}): {}", c.class_name, c.class_span, c.pattern);
    if c.checked != c.pattern {
        let _ = writeln!(out, "closest pattern: {}", c.checked);
    }
    for k in &c.criteria {
        let _ = write!(out, "  {}: {}", k.id.label(), yes_no(k.satisfied));
        if let Some(span) = k.span {
            let _ = write!(out, " at {span}");
        }
        out.push('\n');
        if k.id == CriterionId::NoMutators {
            // listed below with every own mutator
            continue;
        }
        for o in &k.offenders {
            let _ = writeln!(out, "    - {} at {}: {}", o.name, o.span, o.detail);
        }
    }
    if c.mutators.is_empty() {
        out.push_str("  mutator methods: none\n");
    } else {
        let _ = writeln!(out, "  mutator methods: {}", c.mutators.join(", "));
    }
    if let Some((ivar, class)) = &c.wrapped {
        let _ = writeln!(out, "  wraps: {ivar} = {class}.new");
    }
    out
}
