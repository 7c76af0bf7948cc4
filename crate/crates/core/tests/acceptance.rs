//! Acceptance suite: runs the full verification report and prints one
//! pass/fail line per criterion.

use dsforge::verify::{run_suite, Mode, Status, DEFAULT_SEED};

#[test]
fn acceptance_criteria() {
    let report = run_suite(Mode::Full, DEFAULT_SEED);

    let criteria: [(&str, &[&str]); 12] = [
        ("1 skeleton shape", &["c1"]),
        ("2 order-3 freeness", &["c2"]),
        ("3 multiplicity closed forms", &["c3"]),
        ("4 permutation-freeness", &["c4"]),
        ("5 zig-zag avoidance", &["c5-m2", "c5-z3", "c5-c2"]),
        ("6 coefficient closed forms", &["c6"]),
        ("7 Ackermann fixtures", &["c7"]),
        ("8 extremal oracle", &["c8"]),
        ("9 formation-greedy soundness", &["c9"]),
        ("10 derivation trees", &["c10"]),
        ("11 double-nesting", &["c11"]),
        ("12 decomposition bookkeeping", &["c12"]),
    ];

    let mut failed = Vec::new();
    for (label, ids) in criteria {
        let claims: Vec<_> = report
            .claims
            .iter()
            .filter(|c| ids.iter().any(|id| c.id == *id || c.id == format!("{id}-corner")))
            .collect();
        assert!(!claims.is_empty(), "criterion {label}: no claims found");
        let ok = claims.iter().all(|c| c.status != Status::Fail);
        let skipped = claims
            .iter()
            .filter(|c| c.status == Status::SkippedBudget)
            .count();
        let elapsed: u64 = claims.iter().map(|c| c.elapsed_ms).sum();
        let note = if skipped > 0 {
            format!(" ({skipped} grid corner(s) beyond budget skipped)")
        } else {
            String::new()
        };
        println!(
            "criterion {label}: {} [{elapsed} ms]{note}",
            if ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            for c in &claims {
                if c.status == Status::Fail {
                    failed.push(format!("{label} / {}: {}", c.id, c.detail));
                }
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
    assert!(report.all_passed());
}

#[test]
fn report_is_deterministic_for_fixed_seed() {
    let a = run_suite(Mode::Quick, 12345);
    let b = run_suite(Mode::Quick, 12345);
    let strip = |r: &dsforge::verify::VerificationReport| {
        r.claims
            .iter()
            .map(|c| (c.id.clone(), c.status, c.detail.clone()))
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a), strip(&b));
}
