//! Acceptance gate: the full validation suite must pass against the bundled
//! reference configs. Run with `--nocapture` to see one line per criterion.

use gfl_sim::presets;
use gfl_sim::validate::run_acceptance;

#[test]
fn acceptance_suite() {
    let baseline = presets::baseline();
    let high_voltage = presets::high_voltage();
    let report = run_acceptance(&baseline, &high_voltage, 4).expect("suite runs to completion");

    println!("{}", report.summary());
    for criterion in &report.criteria {
        for check in &criterion.checks {
            if !check.pass {
                println!(
                    "  FAILED [{}] {}: {}",
                    criterion.id, check.label, check.detail
                );
            }
        }
        for diag in &criterion.diagnostics {
            println!("  note [{}] {}: {}", criterion.id, diag.label, diag.detail);
        }
    }
    assert!(report.all_pass, "one or more acceptance criteria failed");
}
