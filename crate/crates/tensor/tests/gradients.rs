//! Finite-difference validation of every autodiff primitive.

use std::time::Instant;

use vam_tensor::gradcheck::{run_suite, CASE_NAMES};

#[test]
fn every_primitive_matches_central_differences() {
    const TOL: f64 = 1e-4;
    let started = Instant::now();
    let report = run_suite(7, 20).expect("suite build");
    for line in report.lines(TOL) {
        println!("{line}");
    }
    assert_eq!(report.checks.len(), CASE_NAMES.len());
    assert!(
        report.all_passed(TOL),
        "at least one primitive exceeded tolerance {TOL}"
    );
    let elapsed = started.elapsed();
    println!("gradient suite completed in {elapsed:?}");
    assert!(
        elapsed.as_secs() < 120,
        "suite took {elapsed:?}, budget is two minutes"
    );
}
