//! Acceptance suite: runs the full verification level and reports one
//! pass/fail line per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use caution_core::verify::{run_verification, CheckResult, VerifyLevel, VerifyOptions};

const CRITERIA: [(&str, &str); 10] = [
    ("gaussian-max", "expected-max oracle: Monte Carlo matches quadrature"),
    ("oracle-mean", "oracle selection mean matches expected max"),
    ("bon-shrinkage", "best-of-n mean shrinks by 1/sqrt(1+rho^2)"),
    ("conservation", "gradient training conserves orthogonal weights"),
    ("concentration", "linear uncertainty concentrates at sqrt(2)·perp norm"),
    ("relu-envelope", "relu mean squared uncertainty inside [1/4, 2]"),
    ("crossover", "pessimism beats best-of-n at large n, within regret bound"),
    ("lambda-sweep", "regret stays under the bound across the lambda sweep"),
    ("predictor", "predictor fixtures: gradients, regression, ood, rerank"),
    ("determinism", "byte-identical output across worker counts"),
];

#[test]
fn acceptance_criteria() {
    let report = run_verification(VerifyLevel::Full, VerifyOptions::default());
    let mut all_pass = true;
    println!();
    for (prefix, description) in CRITERIA {
        let checks: Vec<&CheckResult> = report
            .checks
            .iter()
            .filter(|c| c.name.starts_with(prefix))
            .collect();
        assert!(
            !checks.is_empty(),
            "no verification checks ran for criterion `{prefix}`"
        );
        let pass = checks.iter().all(|c| c.pass);
        all_pass &= pass;
        println!(
            "{} {:<14} {} ({} checks)",
            if pass { "PASS" } else { "FAIL" },
            prefix,
            description,
            checks.len()
        );
        if !pass {
            for c in checks.iter().filter(|c| !c.pass) {
                println!(
                    "       failing: {} measured={} target={} tol={}",
                    c.name, c.measured, c.target, c.tolerance
                );
            }
        }
    }
    println!();
    // every emitted check belongs to exactly one criterion
    let total: usize = CRITERIA
        .iter()
        .map(|(p, _)| report.checks.iter().filter(|c| c.name.starts_with(p)).count())
        .sum();
    assert_eq!(total, report.checks.len(), "unclassified checks present");
    assert!(all_pass, "some acceptance criteria failed:\n{}", report.render());
}
