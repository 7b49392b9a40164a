//! Acceptance criteria, one test each; every test prints a PASS/FAIL line.

use std::io::Write;

use slspectra::verify::{run_criterion, VerifyOptions};

fn check(id: u8) {
    let out = run_criterion(id, &VerifyOptions::default());
    // Straight to the stream: the line should show even when output is captured.
    let _ = writeln!(std::io::stdout(), "{out}");
    assert!(out.passed, "{out}");
}

#[test]
fn criterion_1_eigenvalues() {
    check(1);
}

#[test]
fn criterion_2_jumps() {
    check(2);
}

#[test]
fn criterion_3_density() {
    check(3);
}

#[test]
fn criterion_4_m_function() {
    check(4);
}

#[test]
fn criterion_5_uniform_convergence() {
    check(5);
}

#[test]
fn criterion_6_orthogonal_expansion() {
    check(6);
}

#[test]
fn criterion_7_degenerate_weight() {
    check(7);
}

#[test]
fn criterion_8_nevanlinna_invariants() {
    check(8);
}

#[test]
fn criterion_9_classifier() {
    check(9);
}
