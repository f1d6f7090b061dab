//! C ABI for the delayed elephant random walk toolkit.
//!
//! Conventions: every fallible call returns an [`ErwStatus`] code and writes
//! its result through out-pointers; heavyweight results are opaque handles
//! with accessor and `_free` functions. Strings returned by `_json` calls are
//! NUL-terminated, UTF-8, and must be released with [`erw_string_free`].
//! The generated header lives at `include/erw.h`.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;

use erw::analytics;
use erw::montecarlo::{run_ensemble, EnsembleSpec, EnsembleSummary};
use erw::oracle;
use erw::pmf::Pmf;
use erw::report;
use erw::verify::{self, Suite};
use erw::walk::{simulate_path, Checkpoints, MemoryKernel, ProbTriple, TrajectoryPoint};

/// Status codes returned by every fallible call.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErwStatus {
    Ok = 0,
    /// A pointer argument was NULL.
    NullPointer = -1,
    /// Parameters outside their domain (probabilities, horizons, windows).
    InvalidArgument = -2,
    /// The request exceeds an exact-computation budget.
    BudgetExceeded = -3,
    /// The computation is degenerate for these inputs.
    Degenerate = -4,
    /// Any other runtime failure.
    RuntimeError = -5,
}

/// Memory kernel selector; `window` is read only for `LastWindow`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ErwKernel {
    pub tag: ErwKernelTag,
    pub window: u64,
}

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErwKernelTag {
    Full = 0,
    FirstOnly = 1,
    LastOnly = 2,
    FirstAndLast = 3,
    LastWindow = 4,
}

/// Counter snapshot at one checkpoint.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ErwPoint {
    pub n: u64,
    pub position: i64,
    pub zeros: u64,
    pub nonzeros: u64,
}

/// Asymptotic constants at a delay rate.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ErwLimitConstants {
    pub r: f64,
    pub c_r: f64,
    pub d_r: f64,
    pub mean_limit: f64,
    pub var_limit: f64,
    pub y_mean: f64,
    pub y_var_from_moments: f64,
    pub y_var_alternate: f64,
    pub sigma_star_sq: f64,
    pub mixed_var_rate: f64,
    pub first_only_nonzero_rate: f64,
    pub first_only_zero_rate: f64,
    pub mixed_nonzero_rate: f64,
    pub mixed_zero_rate: f64,
    pub geometric_mean: f64,
}

/// Opaque trajectory handle.
pub struct ErwTrajectory(Vec<TrajectoryPoint>);

/// Opaque exact-law handle.
pub struct ErwPmf(Pmf);

/// Opaque ensemble-summary handle.
pub struct ErwSummary(EnsembleSummary);

fn kernel_from_c(kernel: ErwKernel) -> Option<MemoryKernel> {
    match kernel.tag {
        ErwKernelTag::Full => Some(MemoryKernel::Full),
        ErwKernelTag::FirstOnly => Some(MemoryKernel::FirstOnly),
        ErwKernelTag::LastOnly => Some(MemoryKernel::LastOnly),
        ErwKernelTag::FirstAndLast => Some(MemoryKernel::FirstAndLast),
        ErwKernelTag::LastWindow => {
            if kernel.window >= 1 && kernel.window <= usize::MAX as u64 {
                Some(MemoryKernel::LastWindow(kernel.window as usize))
            } else {
                None
            }
        }
    }
}

fn triple(p: f64, q: f64, r: f64) -> Result<ProbTriple, ErwStatus> {
    ProbTriple::new(p, q, r).map_err(|_| ErwStatus::InvalidArgument)
}

fn oracle_status(e: &oracle::OracleError) -> ErwStatus {
    match e {
        oracle::OracleError::BudgetExceeded { .. } | oracle::OracleError::WindowBudget { .. } => {
            ErwStatus::BudgetExceeded
        }
        oracle::OracleError::InvalidRate(_) => ErwStatus::InvalidArgument,
        oracle::OracleError::Degenerate(_) | oracle::OracleError::EmptyBranch => {
            ErwStatus::Degenerate
        }
    }
}

/// Shields the C boundary from panics; a panic surfaces as `RuntimeError`.
fn guarded(f: impl FnOnce() -> ErwStatus + UnwindSafe) -> ErwStatus {
    catch_unwind(f).unwrap_or(ErwStatus::RuntimeError)
}

unsafe fn write_out<T>(out: *mut T, value: T) -> ErwStatus {
    if out.is_null() {
        return ErwStatus::NullPointer;
    }
    unsafe { ptr::write(out, value) };
    ErwStatus::Ok
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn erw_status_message(status: ErwStatus) -> *const c_char {
    let text: &'static [u8] = match status {
        ErwStatus::Ok => b"ok\0",
        ErwStatus::NullPointer => b"null pointer argument\0",
        ErwStatus::InvalidArgument => b"invalid argument\0",
        ErwStatus::BudgetExceeded => b"exact-computation budget exceeded\0",
        ErwStatus::Degenerate => b"degenerate computation for these inputs\0",
        ErwStatus::RuntimeError => b"runtime error\0",
    };
    text.as_ptr() as *const c_char
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn erw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Frees a string returned by one of the `_json` calls.
///
/// # Safety
/// `s` must have been returned by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn erw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

/// Simulates one path to `horizon` and returns counter snapshots on the
/// power-of-two checkpoint grid (`dense != 0` records every step instead).
///
/// # Safety
/// `out` must be a valid pointer; the handle must be released with
/// [`erw_trajectory_free`].
#[no_mangle]
pub unsafe extern "C" fn erw_simulate_path(
    kernel: ErwKernel,
    p: f64,
    q: f64,
    r: f64,
    horizon: u64,
    seed: u64,
    dense: i32,
    out: *mut *mut ErwTrajectory,
) -> ErwStatus {
    guarded(|| {
        if out.is_null() {
            return ErwStatus::NullPointer;
        }
        let Some(kernel) = kernel_from_c(kernel) else {
            return ErwStatus::InvalidArgument;
        };
        let params = match triple(p, q, r) {
            Ok(t) => t,
            Err(status) => return status,
        };
        if horizon == 0 {
            return ErwStatus::InvalidArgument;
        }
        let grid = if dense != 0 {
            Checkpoints::dense(horizon)
        } else {
            Checkpoints::powers_of_two(horizon)
        };
        match simulate_path(kernel, params, horizon, seed, &grid) {
            Ok(points) => unsafe {
                write_out(out, Box::into_raw(Box::new(ErwTrajectory(points))))
            },
            Err(_) => ErwStatus::InvalidArgument,
        }
    })
}

/// Number of recorded checkpoints.
///
/// # Safety
/// `trajectory` must be a live handle from [`erw_simulate_path`].
#[no_mangle]
pub unsafe extern "C" fn erw_trajectory_len(trajectory: *const ErwTrajectory) -> usize {
    if trajectory.is_null() {
        return 0;
    }
    unsafe { &*trajectory }.0.len()
}

/// Copies checkpoint `index` into `out`.
///
/// # Safety
/// `trajectory` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn erw_trajectory_point(
    trajectory: *const ErwTrajectory,
    index: usize,
    out: *mut ErwPoint,
) -> ErwStatus {
    if trajectory.is_null() || out.is_null() {
        return ErwStatus::NullPointer;
    }
    let points = &unsafe { &*trajectory }.0;
    match points.get(index) {
        Some(p) => unsafe {
            write_out(
                out,
                ErwPoint { n: p.n, position: p.position, zeros: p.zeros, nonzeros: p.nonzeros },
            )
        },
        None => ErwStatus::InvalidArgument,
    }
}

/// # Safety
/// `trajectory` must come from [`erw_simulate_path`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn erw_trajectory_free(trajectory: *mut ErwTrajectory) {
    if !trajectory.is_null() {
        drop(unsafe { Box::from_raw(trajectory) });
    }
}

/// Runs a Monte Carlo ensemble on the power-of-two grid and returns an
/// opaque summary handle.
///
/// # Safety
/// `out` must be valid; release the handle with [`erw_summary_free`].
#[no_mangle]
pub unsafe extern "C" fn erw_run_ensemble(
    kernel: ErwKernel,
    p: f64,
    q: f64,
    r: f64,
    horizon: u64,
    replicates: u64,
    seed: u64,
    out: *mut *mut ErwSummary,
) -> ErwStatus {
    guarded(|| {
        if out.is_null() {
            return ErwStatus::NullPointer;
        }
        let Some(kernel) = kernel_from_c(kernel) else {
            return ErwStatus::InvalidArgument;
        };
        let params = match triple(p, q, r) {
            Ok(t) => t,
            Err(status) => return status,
        };
        if horizon == 0 || replicates == 0 {
            return ErwStatus::InvalidArgument;
        }
        let spec = EnsembleSpec::new(kernel, params, horizon, replicates, seed);
        match run_ensemble(&spec) {
            Ok(result) => unsafe {
                write_out(out, Box::into_raw(Box::new(ErwSummary(result.summary))))
            },
            Err(_) => ErwStatus::RuntimeError,
        }
    })
}

/// Mean of the nonzero-step count at the final checkpoint.
///
/// # Safety
/// `summary` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn erw_summary_final_mean(
    summary: *const ErwSummary,
    out: *mut f64,
) -> ErwStatus {
    if summary.is_null() || out.is_null() {
        return ErwStatus::NullPointer;
    }
    let s = &unsafe { &*summary }.0;
    unsafe { write_out(out, s.final_checkpoint().all.nonzeros.mean()) }
}

/// Serializes the summary as a JSON document (schema `erw-summary/1`).
///
/// # Safety
/// `summary` must be a live handle and `out` valid; free the string with
/// [`erw_string_free`].
#[no_mangle]
pub unsafe extern "C" fn erw_summary_to_json(
    summary: *const ErwSummary,
    out: *mut *mut c_char,
) -> ErwStatus {
    if summary.is_null() || out.is_null() {
        return ErwStatus::NullPointer;
    }
    let s = &unsafe { &*summary }.0;
    let text = report::summary_json(s).to_string();
    match CString::new(text) {
        Ok(c) => unsafe { write_out(out, c.into_raw()) },
        Err(_) => ErwStatus::RuntimeError,
    }
}

/// # Safety
/// `summary` must come from [`erw_run_ensemble`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn erw_summary_free(summary: *mut ErwSummary) {
    if !summary.is_null() {
        drop(unsafe { Box::from_raw(summary) });
    }
}

// ---------------------------------------------------------------------------
// Exact laws
// ---------------------------------------------------------------------------

/// Exact law of the nonzero-step count at time `n` (see the core crate for
/// budgets). Conditioned on a nonzero first step when
/// `condition_on_first_nonzero != 0`.
///
/// # Safety
/// `out` must be valid; release the handle with [`erw_pmf_free`].
#[no_mangle]
pub unsafe extern "C" fn erw_exact_distribution(
    kernel: ErwKernel,
    n: u64,
    r: f64,
    condition_on_first_nonzero: i32,
    out: *mut *mut ErwPmf,
) -> ErwStatus {
    guarded(|| {
        if out.is_null() {
            return ErwStatus::NullPointer;
        }
        let Some(kernel) = kernel_from_c(kernel) else {
            return ErwStatus::InvalidArgument;
        };
        let result = if condition_on_first_nonzero != 0 {
            oracle::exact_conditional_distribution(kernel, n, r, true)
        } else {
            oracle::exact_distribution(kernel, n, r)
        };
        match result {
            Ok(pmf) => unsafe { write_out(out, Box::into_raw(Box::new(ErwPmf(pmf)))) },
            Err(e) => oracle_status(&e),
        }
    })
}

/// Truncated-geometric law of the last-only kernel, in closed form.
///
/// # Safety
/// `out` must be valid; release the handle with [`erw_pmf_free`].
#[no_mangle]
pub unsafe extern "C" fn erw_geometric_law(n: u64, r: f64, out: *mut *mut ErwPmf) -> ErwStatus {
    guarded(|| {
        if out.is_null() {
            return ErwStatus::NullPointer;
        }
        if n == 0 || !(r > 0.0 && r < 1.0) {
            return ErwStatus::InvalidArgument;
        }
        unsafe { write_out(out, Box::into_raw(Box::new(ErwPmf(analytics::geometric_law(n, r))))) }
    })
}

/// Number of support points.
///
/// # Safety
/// `pmf` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn erw_pmf_len(pmf: *const ErwPmf) -> usize {
    if pmf.is_null() {
        return 0;
    }
    unsafe { &*pmf }.0.len()
}

/// Copies support point `index` and its probability.
///
/// # Safety
/// `pmf` must be a live handle; `value_out`/`prob_out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn erw_pmf_entry(
    pmf: *const ErwPmf,
    index: usize,
    value_out: *mut i64,
    prob_out: *mut f64,
) -> ErwStatus {
    if pmf.is_null() || value_out.is_null() || prob_out.is_null() {
        return ErwStatus::NullPointer;
    }
    let pmf = &unsafe { &*pmf }.0;
    if index >= pmf.len() {
        return ErwStatus::InvalidArgument;
    }
    unsafe {
        ptr::write(value_out, pmf.support()[index]);
        ptr::write(prob_out, pmf.probs()[index]);
    }
    ErwStatus::Ok
}

/// Mean of the law.
///
/// # Safety
/// `pmf` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn erw_pmf_mean(pmf: *const ErwPmf, out: *mut f64) -> ErwStatus {
    if pmf.is_null() || out.is_null() {
        return ErwStatus::NullPointer;
    }
    unsafe { write_out(out, (*pmf).0.mean()) }
}

/// # Safety
/// `pmf` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn erw_pmf_free(pmf: *mut ErwPmf) {
    if !pmf.is_null() {
        drop(unsafe { Box::from_raw(pmf) });
    }
}

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

/// `E(N*_n)` for the full-memory kernel: `Γ(n+1-r)/(Γ(1-r)Γ(n))`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn erw_full_mean(n: u64, r: f64, out: *mut f64) -> ErwStatus {
    guarded(|| {
        if out.is_null() {
            return ErwStatus::NullPointer;
        }
        if n == 0 || !(r > 0.0 && r < 1.0) {
            return ErwStatus::InvalidArgument;
        }
        unsafe { write_out(out, analytics::full_mean(n, r)) }
    })
}

/// `E((N*_n)^2)` for the full-memory kernel by the exact recursion.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn erw_full_second_moment(n: u64, r: f64, out: *mut f64) -> ErwStatus {
    guarded(|| {
        if out.is_null() {
            return ErwStatus::NullPointer;
        }
        if n == 0 || !(r > 0.0 && r < 1.0) {
            return ErwStatus::InvalidArgument;
        }
        unsafe { write_out(out, analytics::full_second_moment(n, r)) }
    })
}

/// Expected quadratic variation `E⟨M*_n⟩` of the full-memory martingale.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn erw_bracket_expectation(n: u64, r: f64, out: *mut f64) -> ErwStatus {
    guarded(|| {
        if out.is_null() {
            return ErwStatus::NullPointer;
        }
        if n == 0 || !(r > 0.0 && r < 1.0) {
            return ErwStatus::InvalidArgument;
        }
        unsafe { write_out(out, analytics::bracket_expectation(n, r)) }
    })
}

/// All limit constants at delay rate `r`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn erw_limit_constants(r: f64, out: *mut ErwLimitConstants) -> ErwStatus {
    guarded(|| {
        if out.is_null() {
            return ErwStatus::NullPointer;
        }
        if !(r > 0.0 && r < 1.0) {
            return ErwStatus::InvalidArgument;
        }
        let c = analytics::limit_constants(r);
        unsafe {
            write_out(
                out,
                ErwLimitConstants {
                    r: c.r,
                    c_r: c.c_r,
                    d_r: c.d_r,
                    mean_limit: c.mean_limit,
                    var_limit: c.var_limit,
                    y_mean: c.y_mean,
                    y_var_from_moments: c.y_var_from_moments,
                    y_var_alternate: c.y_var_alternate,
                    sigma_star_sq: c.sigma_star_sq,
                    mixed_var_rate: c.mixed_var_rate,
                    first_only_nonzero_rate: c.first_only_nonzero_rate,
                    first_only_zero_rate: c.first_only_zero_rate,
                    mixed_nonzero_rate: c.mixed_nonzero_rate,
                    mixed_zero_rate: c.mixed_zero_rate,
                    geometric_mean: c.geometric_mean,
                },
            )
        }
    })
}

/// Maximum one-step martingale defect of the exact full-memory chain.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn erw_martingale_check(n: u64, r: f64, out: *mut f64) -> ErwStatus {
    guarded(|| {
        if out.is_null() {
            return ErwStatus::NullPointer;
        }
        match oracle::martingale_check(n, r) {
            Ok(v) => unsafe { write_out(out, v) },
            Err(e) => oracle_status(&e),
        }
    })
}

/// Exact `Corr(I*_n, I*_{n+1})`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn erw_correlation(
    kernel: ErwKernel,
    n: u64,
    r: f64,
    out: *mut f64,
) -> ErwStatus {
    guarded(|| {
        if out.is_null() {
            return ErwStatus::NullPointer;
        }
        let Some(kernel) = kernel_from_c(kernel) else {
            return ErwStatus::InvalidArgument;
        };
        match oracle::correlation(kernel, n, r) {
            Ok(v) => unsafe { write_out(out, v) },
            Err(e) => oracle_status(&e),
        }
    })
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

/// Runs a verification suite (`"3.1"`, `"4.1"`, `"5.1"`, `"6.1"`, `"7"` or
/// `"all"`) at the given seed. `r_override` applies where the suite allows a
/// rate override; pass NaN for the suite defaults. Writes the JSON report
/// document (schema `erw-report/1`) and whether every gating check passed.
///
/// # Safety
/// `suite` must be a NUL-terminated string; `json_out`/`pass_out` must be
/// valid. Free the string with [`erw_string_free`].
#[no_mangle]
pub unsafe extern "C" fn erw_verify_suite(
    suite: *const c_char,
    seed: u64,
    r_override: f64,
    json_out: *mut *mut c_char,
    pass_out: *mut i32,
) -> ErwStatus {
    guarded(|| {
        if suite.is_null() || json_out.is_null() || pass_out.is_null() {
            return ErwStatus::NullPointer;
        }
        let Ok(name) = unsafe { CStr::from_ptr(suite) }.to_str() else {
            return ErwStatus::InvalidArgument;
        };
        let Some(suite) = Suite::parse(name) else {
            return ErwStatus::InvalidArgument;
        };
        let r = if r_override.is_nan() { None } else { Some(r_override) };
        if let Some(r) = r {
            if !(r > 0.0 && r < 1.0) {
                return ErwStatus::InvalidArgument;
            }
        }
        let reports = verify::run_suite(suite, seed, r);
        let pass = verify::gating_pass(&reports);
        let doc = report::reports_json(suite.label(), seed, &reports).to_string();
        match CString::new(doc) {
            Ok(c) => unsafe {
                ptr::write(pass_out, pass as i32);
                write_out(json_out, c.into_raw())
            },
            Err(_) => ErwStatus::RuntimeError,
        }
    })
}
