mod support;

use std::time::{Duration, Instant};

use frozencheck_core::model::build_model;
use frozencheck_core::patterns::{lint, LintConfig, Pattern};
use frozencheck_core::syntax::{parse_source, FileId};

#[test]
fn thousand_classes_lint_quickly() {
    let src = support::corpus::synth_program(1000);
    let lines = src.lines().count();
    let start = Instant::now();
    let tree = parse_source(&src, FileId(0)).unwrap();
    let graph = build_model(&tree).unwrap();
    let report = lint(&tree, &graph, &LintConfig::default());
    let elapsed = start.elapsed();
    eprintln!("{lines} lines, {} classes in {elapsed:?}", report.classifications.len());
    assert!(lines >= 15_000);
    assert_eq!(report.classifications.len(), 1000);
    assert!(report.diagnostics.is_empty(), "{:?}", &report.diagnostics[..3.min(report.diagnostics.len())]);
    let count = |p| report.classifications.iter().filter(|c| c.pattern == p).count();
    assert_eq!(count(Pattern::ImmutableObject), 250);
    assert_eq!(count(Pattern::ImmutableSubclass), 250);
    assert_eq!(count(Pattern::ImmutableAdapter), 250);
    assert!(elapsed < Duration::from_secs(2), "{elapsed:?}");
}
