//! Acceptance gate: every criterion suite must pass. Prints one line
//! per criterion (run with `--nocapture` to see them on success).

use feasolve::verify::run_all;

#[test]
fn acceptance_criteria() {
    let reports = run_all(0);
    let mut all_ok = true;
    let mut checks: Vec<_> = reports
        .iter()
        .flat_map(|r| r.checks.iter().map(move |c| (r.suite.as_str(), c)))
        .collect();
    checks.sort_by_key(|(_, c)| c.criterion);
    for (suite, check) in &checks {
        let status = if check.passed { "PASS" } else { "FAIL" };
        println!(
            "[{}] criterion {:>2} ({}): {} - {}",
            status, check.criterion, suite, check.name, check.detail
        );
        all_ok &= check.passed;
    }
    assert!(all_ok, "one or more acceptance criteria failed");
}
