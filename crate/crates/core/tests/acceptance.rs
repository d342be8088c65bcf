//! One test per acceptance criterion; each prints a single PASS/FAIL line.

use pbc_core::verify::run_one;

fn criterion(id: u8) {
    let c = run_one(id);
    let status = if c.passed { "PASS" } else { "FAIL" };
    println!(
        "criterion {:>2} {status} {} ({:.1} s): {}",
        c.id, c.name, c.seconds, c.detail
    );
    assert!(
        c.passed,
        "criterion {} {} failed: {}",
        c.id, c.name, c.detail
    );
}

#[test]
fn criterion_01_gain_constants() {
    criterion(1);
}

#[test]
fn criterion_02_bernoulli_v_product() {
    criterion(2);
}

#[test]
fn criterion_03_exnotglob_second_iterate() {
    criterion(3);
}

#[test]
fn criterion_04_bernoulli_region() {
    criterion(4);
}

#[test]
fn criterion_05_uniform_condition() {
    criterion(5);
}

#[test]
fn criterion_06_two_cycle_threshold() {
    criterion(6);
}

#[test]
fn criterion_07_exact_two_cycle_oracle() {
    criterion(7);
}

#[test]
fn criterion_08_monte_carlo_expected_log() {
    criterion(8);
}

#[test]
fn criterion_09_bifurcation_thresholds() {
    criterion(9);
}

#[test]
fn criterion_10_deterministic_sharpness() {
    criterion(10);
}

#[test]
fn criterion_11_symmetric_gain_construction() {
    criterion(11);
}

#[test]
fn criterion_12_quail_envelope_curve() {
    criterion(12);
}

#[test]
fn criterion_13_property_suites() {
    criterion(13);
}

#[test]
fn criterion_14_switching_divergence() {
    criterion(14);
}
