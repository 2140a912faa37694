//! Acceptance suite: one test per self-check criterion. Each prints the
//! criterion's evidence line so failures carry their measurements.

use nocgate::acceptance::{CriterionReport, CRITERIA};

fn check(id: usize) {
    let (_, _, f) = CRITERIA.iter().find(|(cid, _, _)| *cid == id).unwrap();
    let report: CriterionReport = f();
    println!(
        "[{}] criterion {:>2} {:<28} ({:.1}s): {}",
        if report.passed { "PASS" } else { "FAIL" },
        report.id,
        report.name,
        report.seconds,
        report.details
    );
    assert!(report.passed, "criterion {} failed: {}", report.id, report.details);
}

#[test]
fn criterion_01_update_rule_arithmetic() {
    check(1);
}

#[test]
fn criterion_02_oracle_optimality() {
    check(2);
}

#[test]
fn criterion_03_fine_grained_opportunity() {
    check(3);
}

#[test]
fn criterion_04_wake_latency_masking() {
    check(4);
}

#[test]
fn criterion_05_energy_ordering_low_load() {
    check(5);
}

#[test]
fn criterion_06_high_load_adaptive_benefit() {
    check(6);
}

#[test]
fn criterion_07_deadlock_freedom() {
    check(7);
}

#[test]
fn criterion_08_determinism() {
    check(8);
}

#[test]
fn criterion_09_latency_sanity() {
    check(9);
}

#[test]
fn criterion_10_state_space_bound() {
    check(10);
}
