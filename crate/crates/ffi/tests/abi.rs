//! Exercises the C ABI through the exported symbols, plus a syntax check of
//! the generated header.

use std::ffi::{c_char, CStr};
use std::ptr;

use erw_ffi::*;

fn full() -> ErwKernel {
    ErwKernel { tag: ErwKernelTag::Full, window: 0 }
}

fn last() -> ErwKernel {
    ErwKernel { tag: ErwKernelTag::LastOnly, window: 0 }
}

#[test]
fn version_and_status_messages() {
    unsafe {
        let v = CStr::from_ptr(erw_version()).to_str().unwrap();
        assert!(!v.is_empty());
        let m = CStr::from_ptr(erw_status_message(ErwStatus::BudgetExceeded)).to_str().unwrap();
        assert!(m.contains("budget"));
    }
}

#[test]
fn trajectory_round_trip() {
    unsafe {
        let mut handle: *mut ErwTrajectory = ptr::null_mut();
        let status = erw_simulate_path(full(), 0.25, 0.25, 0.5, 64, 7, 0, &mut handle);
        assert_eq!(status, ErwStatus::Ok);
        let len = erw_trajectory_len(handle);
        assert_eq!(len, 7); // 1, 2, 4, ..., 64
        let mut point = ErwPoint { n: 0, position: 0, zeros: 0, nonzeros: 0 };
        assert_eq!(erw_trajectory_point(handle, len - 1, &mut point), ErwStatus::Ok);
        assert_eq!(point.n, 64);
        assert_eq!(point.zeros + point.nonzeros, 64);
        assert_eq!(erw_trajectory_point(handle, len, &mut point), ErwStatus::InvalidArgument);
        erw_trajectory_free(handle);
    }
}

#[test]
fn bad_arguments_are_reported() {
    unsafe {
        let mut handle: *mut ErwTrajectory = ptr::null_mut();
        // probabilities off the simplex
        assert_eq!(
            erw_simulate_path(full(), 0.5, 0.5, 0.5, 16, 1, 0, &mut handle),
            ErwStatus::InvalidArgument
        );
        // empty window
        let bad = ErwKernel { tag: ErwKernelTag::LastWindow, window: 0 };
        assert_eq!(
            erw_simulate_path(bad, 0.25, 0.25, 0.5, 16, 1, 0, &mut handle),
            ErwStatus::InvalidArgument
        );
        // null out-pointer
        assert_eq!(
            erw_simulate_path(full(), 0.25, 0.25, 0.5, 16, 1, 0, ptr::null_mut()),
            ErwStatus::NullPointer
        );
        let mut value = 0.0f64;
        assert_eq!(erw_full_mean(0, 0.5, &mut value), ErwStatus::InvalidArgument);
        assert_eq!(erw_full_mean(3, 1.5, &mut value), ErwStatus::InvalidArgument);
    }
}

#[test]
fn exact_law_and_closed_forms() {
    unsafe {
        let mut pmf: *mut ErwPmf = ptr::null_mut();
        assert_eq!(erw_exact_distribution(last(), 3, 0.5, 0, &mut pmf), ErwStatus::Ok);
        assert_eq!(erw_pmf_len(pmf), 4);
        let mut value = 0i64;
        let mut prob = 0.0f64;
        assert_eq!(erw_pmf_entry(pmf, 0, &mut value, &mut prob), ErwStatus::Ok);
        assert_eq!((value, prob), (0, 0.5));
        let mut mean = 0.0;
        assert_eq!(erw_pmf_mean(pmf, &mut mean), ErwStatus::Ok);
        erw_pmf_free(pmf);

        // geometric closed form agrees with the oracle law
        let mut geo: *mut ErwPmf = ptr::null_mut();
        assert_eq!(erw_geometric_law(3, 0.5, &mut geo), ErwStatus::Ok);
        let mut gmean = 0.0;
        assert_eq!(erw_pmf_mean(geo, &mut gmean), ErwStatus::Ok);
        assert!((gmean - mean).abs() < 1e-12);
        erw_pmf_free(geo);

        // budget errors propagate
        let mut too_big: *mut ErwPmf = ptr::null_mut();
        assert_eq!(
            erw_exact_distribution(full(), 25, 0.5, 0, &mut too_big),
            ErwStatus::BudgetExceeded
        );

        let mut fm = 0.0;
        assert_eq!(erw_full_mean(3, 0.5, &mut fm), ErwStatus::Ok);
        assert!((fm - 0.9375).abs() < 1e-12);
        let mut m2 = 0.0;
        assert_eq!(erw_full_second_moment(2, 0.5, &mut m2), ErwStatus::Ok);
        assert!((m2 - 1.25).abs() < 1e-12);
        let mut bracket = 0.0;
        assert_eq!(erw_bracket_expectation(1, 0.5, &mut bracket), ErwStatus::Ok);
        assert!((bracket - 0.25).abs() < 1e-12);

        let mut constants = std::mem::zeroed::<ErwLimitConstants>();
        assert_eq!(erw_limit_constants(0.5, &mut constants), ErwStatus::Ok);
        assert!((constants.d_r - 1.0).abs() < 1e-12);
        assert!((constants.sigma_star_sq - 2.0 / 3.0).abs() < 1e-12);

        let mut defect = 1.0;
        assert_eq!(erw_martingale_check(10, 0.5, &mut defect), ErwStatus::Ok);
        assert!(defect <= 1e-13);

        let mut corr = 0.0;
        assert_eq!(erw_correlation(full(), 8, 0.5, &mut corr), ErwStatus::Ok);
        assert!((corr - 0.23009000697357998).abs() < 1e-12);
        assert_eq!(erw_correlation(full(), 1, 0.5, &mut corr), ErwStatus::Degenerate);
    }
}

#[test]
fn ensemble_summary_json() {
    unsafe {
        let mut summary: *mut ErwSummary = ptr::null_mut();
        assert_eq!(
            erw_run_ensemble(full(), 0.25, 0.25, 0.5, 64, 500, 3, &mut summary),
            ErwStatus::Ok
        );
        let mut mean = 0.0;
        assert_eq!(erw_summary_final_mean(summary, &mut mean), ErwStatus::Ok);
        assert!(mean > 0.0 && mean < 64.0);

        let mut json: *mut c_char = ptr::null_mut();
        assert_eq!(erw_summary_to_json(summary, &mut json), ErwStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["schema"], "erw-summary/1");
        erw_string_free(json);
        erw_summary_free(summary);
    }
}

#[test]
fn verify_suite_through_the_abi() {
    unsafe {
        let mut json: *mut c_char = ptr::null_mut();
        let mut pass = -1i32;
        let suite = c"7";
        let status = erw_verify_suite(suite.as_ptr(), 11, f64::NAN, &mut json, &mut pass);
        assert_eq!(status, ErwStatus::Ok);
        assert_eq!(pass, 1);
        let doc: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(doc["suite"], "7");
        erw_string_free(json);

        let bogus = c"9.9";
        assert_eq!(
            erw_verify_suite(bogus.as_ptr(), 11, f64::NAN, &mut json, &mut pass),
            ErwStatus::InvalidArgument
        );
    }
}

#[test]
fn generated_header_compiles_as_c() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/erw.h");
    assert!(header.exists(), "expected generated header at {}", header.display());
    let probe = std::env::temp_dir().join("erw_header_probe.c");
    std::fs::write(&probe, "#include \"erw.h\"\nint main(void) { return 0; }\n").unwrap();
    let status = std::process::Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&probe)
        .status()
        .expect("cc is available");
    assert!(status.success(), "generated header failed C syntax check");
}
