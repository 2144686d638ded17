//! One test per acceptance criterion. Each prints a PASS/FAIL line straight
//! to stderr so the verdicts are visible even when output capture is on.

use std::io::Write;
use std::sync::OnceLock;

use mqci::verify::{checks_csv, determinism, run_criterion, CriterionResult, VerifyContext, CRITERIA};
use mqci_core::bench::Synthesizer;

const SEED: u64 = 0;

fn first_run() -> &'static [CriterionResult] {
    static RUN: OnceLock<Vec<CriterionResult>> = OnceLock::new();
    RUN.get_or_init(|| {
        let mut tables = Synthesizer;
        let mut ctx = VerifyContext { seed: SEED, tables: &mut tables };
        (1..CRITERIA).map(|id| run_criterion(id, &mut ctx)).collect()
    })
}

fn report(r: &CriterionResult) {
    let mut line = r.summary_line();
    if let Some(t) = r.runtime_s {
        line.push_str(&format!("\n    runtime {t:.2} s (limit {:?})", r.runtime_limit_s));
    }
    let _ = writeln!(std::io::stderr(), "{line}");
    assert!(r.passed(), "{line}");
}

fn criterion(id: usize) {
    report(&first_run()[id - 1]);
}

#[test]
fn criterion_01_special_functions() {
    criterion(1);
}

#[test]
fn criterion_02_poisson_closed_form() {
    criterion(2);
}

#[test]
fn criterion_03_delta_property() {
    criterion(3);
}

#[test]
fn criterion_04_spatial_decay() {
    criterion(4);
}

#[test]
fn criterion_05_coefficient_decay() {
    criterion(5);
}

#[test]
fn criterion_06_series_representation() {
    criterion(6);
}

#[test]
fn criterion_07_space_equivalence() {
    criterion(7);
}

#[test]
fn criterion_08_convergence_rates() {
    criterion(8);
}

#[test]
fn criterion_09_multiplier_scaling() {
    criterion(9);
}

#[test]
fn criterion_10_mikhlin_stability() {
    criterion(10);
}

#[test]
fn criterion_11_fourier_identity() {
    criterion(11);
}

#[test]
fn criterion_12_determinism() {
    let reference = checks_csv(first_run()).body();
    let mut tables = Synthesizer;
    let mut ctx = VerifyContext { seed: SEED, tables: &mut tables };
    report(&determinism(&reference, &mut ctx));
}
