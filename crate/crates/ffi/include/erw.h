#ifndef ERW_H
#define ERW_H

/* Generated by cbindgen from erw-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
enum ErwStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  ERW_STATUS_OK = 0,
  // A pointer argument was NULL.
  ERW_STATUS_NULL_POINTER = -1,
  // Parameters outside their domain (probabilities, horizons, windows).
  ERW_STATUS_INVALID_ARGUMENT = -2,
  // The request exceeds an exact-computation budget.
  ERW_STATUS_BUDGET_EXCEEDED = -3,
  // The computation is degenerate for these inputs.
  ERW_STATUS_DEGENERATE = -4,
  // Any other runtime failure.
  ERW_STATUS_RUNTIME_ERROR = -5,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum ErwStatus ErwStatus;
#else
typedef int32_t ErwStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

enum ErwKernelTag
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  ERW_KERNEL_TAG_FULL = 0,
  ERW_KERNEL_TAG_FIRST_ONLY = 1,
  ERW_KERNEL_TAG_LAST_ONLY = 2,
  ERW_KERNEL_TAG_FIRST_AND_LAST = 3,
  ERW_KERNEL_TAG_LAST_WINDOW = 4,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum ErwKernelTag ErwKernelTag;
#else
typedef int32_t ErwKernelTag;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// Opaque exact-law handle.
typedef struct ErwPmf ErwPmf;

// Opaque ensemble-summary handle.
typedef struct ErwSummary ErwSummary;

// Opaque trajectory handle.
typedef struct ErwTrajectory ErwTrajectory;

// Memory kernel selector; `window` is read only for `LastWindow`.
typedef struct ErwKernel {
  ErwKernelTag tag;
  uint64_t window;
} ErwKernel;

// Counter snapshot at one checkpoint.
typedef struct ErwPoint {
  uint64_t n;
  int64_t position;
  uint64_t zeros;
  uint64_t nonzeros;
} ErwPoint;

// Asymptotic constants at a delay rate.
typedef struct ErwLimitConstants {
  double r;
  double c_r;
  double d_r;
  double mean_limit;
  double var_limit;
  double y_mean;
  double y_var_from_moments;
  double y_var_alternate;
  double sigma_star_sq;
  double mixed_var_rate;
  double first_only_nonzero_rate;
  double first_only_zero_rate;
  double mixed_nonzero_rate;
  double mixed_zero_rate;
  double geometric_mean;
} ErwLimitConstants;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static description of a status code.
const char *erw_status_message(ErwStatus status);

// Library version as a static string.
const char *erw_version(void);

// Frees a string returned by one of the `_json` calls.
//
// # Safety
// `s` must have been returned by this library and not freed before.
void erw_string_free(char *s);

// Simulates one path to `horizon` and returns counter snapshots on the
// power-of-two checkpoint grid (`dense != 0` records every step instead).
//
// # Safety
// `out` must be a valid pointer; the handle must be released with
// [`erw_trajectory_free`].
ErwStatus erw_simulate_path(struct ErwKernel kernel,
                            double p,
                            double q,
                            double r,
                            uint64_t horizon,
                            uint64_t seed,
                            int32_t dense,
                            struct ErwTrajectory **out);

// Number of recorded checkpoints.
//
// # Safety
// `trajectory` must be a live handle from [`erw_simulate_path`].
size_t erw_trajectory_len(const struct ErwTrajectory *trajectory);

// Copies checkpoint `index` into `out`.
//
// # Safety
// `trajectory` must be a live handle and `out` a valid pointer.
ErwStatus erw_trajectory_point(const struct ErwTrajectory *trajectory,
                               size_t index,
                               struct ErwPoint *out);

// # Safety
// `trajectory` must come from [`erw_simulate_path`] and not be freed twice.
void erw_trajectory_free(struct ErwTrajectory *trajectory);

// Runs a Monte Carlo ensemble on the power-of-two grid and returns an
// opaque summary handle.
//
// # Safety
// `out` must be valid; release the handle with [`erw_summary_free`].
ErwStatus erw_run_ensemble(struct ErwKernel kernel,
                           double p,
                           double q,
                           double r,
                           uint64_t horizon,
                           uint64_t replicates,
                           uint64_t seed,
                           struct ErwSummary **out);

// Mean of the nonzero-step count at the final checkpoint.
//
// # Safety
// `summary` must be a live handle and `out` valid.
ErwStatus erw_summary_final_mean(const struct ErwSummary *summary, double *out);

// Serializes the summary as a JSON document (schema `erw-summary/1`).
//
// # Safety
// `summary` must be a live handle and `out` valid; free the string with
// [`erw_string_free`].
ErwStatus erw_summary_to_json(const struct ErwSummary *summary, char **out);

// # Safety
// `summary` must come from [`erw_run_ensemble`] and not be freed twice.
void erw_summary_free(struct ErwSummary *summary);

// Exact law of the nonzero-step count at time `n` (see the core crate for
// budgets). Conditioned on a nonzero first step when
// `condition_on_first_nonzero != 0`.
//
// # Safety
// `out` must be valid; release the handle with [`erw_pmf_free`].
ErwStatus erw_exact_distribution(struct ErwKernel kernel,
                                 uint64_t n,
                                 double r,
                                 int32_t condition_on_first_nonzero,
                                 struct ErwPmf **out);

// Truncated-geometric law of the last-only kernel, in closed form.
//
// # Safety
// `out` must be valid; release the handle with [`erw_pmf_free`].
ErwStatus erw_geometric_law(uint64_t n, double r, struct ErwPmf **out);

// Number of support points.
//
// # Safety
// `pmf` must be a live handle.
size_t erw_pmf_len(const struct ErwPmf *pmf);

// Copies support point `index` and its probability.
//
// # Safety
// `pmf` must be a live handle; `value_out`/`prob_out` must be valid.
ErwStatus erw_pmf_entry(const struct ErwPmf *pmf,
                        size_t index,
                        int64_t *value_out,
                        double *prob_out);

// Mean of the law.
//
// # Safety
// `pmf` must be a live handle and `out` valid.
ErwStatus erw_pmf_mean(const struct ErwPmf *pmf, double *out);

// # Safety
// `pmf` must come from this library and not be freed twice.
void erw_pmf_free(struct ErwPmf *pmf);

// `E(N*_n)` for the full-memory kernel: `Γ(n+1-r)/(Γ(1-r)Γ(n))`.
//
// # Safety
// `out` must be valid.
ErwStatus erw_full_mean(uint64_t n, double r, double *out);

// `E((N*_n)^2)` for the full-memory kernel by the exact recursion.
//
// # Safety
// `out` must be valid.
ErwStatus erw_full_second_moment(uint64_t n, double r, double *out);

// Expected quadratic variation `E⟨M*_n⟩` of the full-memory martingale.
//
// # Safety
// `out` must be valid.
ErwStatus erw_bracket_expectation(uint64_t n, double r, double *out);

// All limit constants at delay rate `r`.
//
// # Safety
// `out` must be valid.
ErwStatus erw_limit_constants(double r, struct ErwLimitConstants *out);

// Maximum one-step martingale defect of the exact full-memory chain.
//
// # Safety
// `out` must be valid.
ErwStatus erw_martingale_check(uint64_t n, double r, double *out);

// Exact `Corr(I*_n, I*_{n+1})`.
//
// # Safety
// `out` must be valid.
ErwStatus erw_correlation(struct ErwKernel kernel, uint64_t n, double r, double *out);

// Runs a verification suite (`"3.1"`, `"4.1"`, `"5.1"`, `"6.1"`, `"7"` or
// `"all"`) at the given seed. `r_override` applies where the suite allows a
// rate override; pass NaN for the suite defaults. Writes the JSON report
// document (schema `erw-report/1`) and whether every gating check passed.
//
// # Safety
// `suite` must be a NUL-terminated string; `json_out`/`pass_out` must be
// valid. Free the string with [`erw_string_free`].
ErwStatus erw_verify_suite(const char *suite,
                           uint64_t seed,
                           double r_override,
                           char **json_out,
                           int32_t *pass_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ERW_H */
