//! Acceptance suite: every numbered verification criterion at its pinned
//! size and tolerance, one test per criterion, printing one line per check.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use erw::stats::TestReport;
use erw::verify;

/// Master seed of the acceptance runs. Stochastic criteria are exact
/// functions of this seed; rerunning reproduces every byte.
const SEED: u64 = 2026;

fn assert_reports(criterion: &str, reports: &[TestReport]) {
    let mut failed = Vec::new();
    for r in reports {
        let status = if r.pass { "PASS" } else { "FAIL" };
        let kind = if r.informational { "info" } else { "gate" };
        println!(
            "{criterion} [{kind}] {status} {} value={:.6e} threshold={:.6e} ({})",
            r.name, r.value, r.threshold, r.detail
        );
        if !r.pass && !r.informational {
            failed.push(r);
        }
    }
    assert!(
        failed.is_empty(),
        "{criterion}: {} gating check(s) failed: {}",
        failed.len(),
        failed
            .iter()
            .map(|r| format!("{} (value {:.6e} > threshold {:.6e}; {})", r.name, r.value, r.threshold, r.detail))
            .collect::<Vec<_>>()
            .join("; ")
    );
}

#[test]
fn criterion_01_oracle_matches_closed_forms() {
    assert_reports("C1", &verify::criterion_oracle_closed_form(None));
}

#[test]
fn criterion_02_martingale_exactness_and_bracket() {
    assert_reports("C2", &verify::criterion_martingale_exactness(None));
}

#[test]
fn criterion_03_full_memory_scaling_limit() {
    assert_reports("C3", &verify::criterion_full_memory_l1(SEED));
}

#[test]
fn criterion_04_first_only_mixture_clt() {
    assert_reports("C4", &verify::criterion_first_only(SEED));
}

#[test]
fn criterion_05_last_only_geometric_law() {
    assert_reports("C5", &verify::criterion_last_only(SEED, None));
}

#[test]
fn criterion_06_first_and_last_rates() {
    assert_reports("C6", &verify::criterion_first_and_last(SEED));
}

#[test]
fn criterion_07_gamma_ratio_expansion_order() {
    assert_reports("C7", &verify::criterion_gamma_lemma());
}

#[test]
fn criterion_08_window_die_out() {
    assert_reports("C8", &verify::criterion_window_die_out(SEED));
}

#[test]
fn criterion_09_variance_limit_and_adjudication() {
    assert_reports("C9", &verify::criterion_variance_adjudication());
}

#[test]
fn criterion_10_determinism_across_worker_counts() {
    assert_reports("C10", &verify::criterion_determinism(SEED));
}
