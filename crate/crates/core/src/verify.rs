//! End-to-end verification suites: each suite checks one family of limit
//! statements at pinned sizes and tolerances and emits [`TestReport`]s.
//!
//! The registry exposes suites `3.1` (full memory), `4.1` (first step only),
//! `5.1` (last step only), `6.1` (first and last), `7` (window die-out) and
//! `all`. Gating thresholds are fixed here, in code; informational rows carry
//! context (such as which of two published constants the data supports) and
//! never gate.

use std::time::Instant;

use crate::analytics::{
    self, bracket_expectation, full_mean, full_moment_iter, full_second_moment,
    gamma_ratio_asymptotic, gamma_ratio_exact, limit_constants, mixed_kernel_moments,
};
use crate::montecarlo::{run_ensemble, EnsembleSpec};
use crate::oracle;
use crate::pmf::empirical_pmf;
use crate::report::reports_json;
use crate::stats::{
    atom_gap_report, chi_square_geometric, convergence_track, ks_nonzero_branch, TestReport,
};
use crate::walk::{Checkpoints, MemoryKernel, ProbTriple};

/// Named verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Full memory: oracle/closed-form agreement, martingale exactness,
    /// L¹ scaling limit, Gamma-ratio expansion, variance adjudication.
    Theorem31,
    /// First-step-only kernel: mixture CLT and linear rates.
    Theorem41,
    /// Last-step-only kernel: geometric limit law.
    Theorem51,
    /// First-and-last kernel: linear rates, CLT variance, exact recursions.
    Theorem61,
    /// Window kernels: geometric die-out of nonzero steps.
    Remarks7,
    /// Everything, plus the determinism check.
    All,
}

impl Suite {
    pub fn parse(text: &str) -> Option<Suite> {
        match text {
            "3.1" => Some(Suite::Theorem31),
            "4.1" => Some(Suite::Theorem41),
            "5.1" => Some(Suite::Theorem51),
            "6.1" => Some(Suite::Theorem61),
            "7" => Some(Suite::Remarks7),
            "all" => Some(Suite::All),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Suite::Theorem31 => "3.1",
            Suite::Theorem41 => "4.1",
            Suite::Theorem51 => "5.1",
            Suite::Theorem61 => "6.1",
            Suite::Remarks7 => "7",
            Suite::All => "all",
        }
    }
}

fn rates(r_override: Option<f64>, default: &[f64]) -> Vec<f64> {
    match r_override {
        Some(r) => vec![r],
        None => default.to_vec(),
    }
}

/// Suite `3.1`, part 1: exact oracle laws against the closed forms for
/// `n <= 14`, mean and second moment to 1e-12, in under a second.
pub fn criterion_oracle_closed_form(r_override: Option<f64>) -> Vec<TestReport> {
    let start = Instant::now();
    let mut worst_mean: f64 = 0.0;
    let mut worst_second: f64 = 0.0;
    for &r in &rates(r_override, &[0.2, 0.5, 0.8]) {
        for n in 1..=14u64 {
            let pmf = oracle::exact_distribution(MemoryKernel::Full, n, r)
                .expect("within oracle budget");
            worst_mean = worst_mean.max((pmf.mean() - full_mean(n, r)).abs());
            worst_second = worst_second.max((pmf.moment(2) - full_second_moment(n, r)).abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    vec![
        TestReport::evaluate(
            "C1:oracle-mean-vs-closed-form",
            "mean-gap",
            worst_mean,
            1e-12,
            14,
            14,
            "max |oracle mean - Gamma form| over n <= 14, r in {0.2, 0.5, 0.8}",
        ),
        TestReport::evaluate(
            "C1:oracle-second-moment-vs-recursion",
            "mean-gap",
            worst_second,
            1e-12,
            14,
            14,
            "max |oracle E(N*^2) - recursion| over the same grid",
        ),
        TestReport::evaluate(
            "C1:runtime",
            "mean-gap",
            elapsed,
            1.0,
            14,
            14,
            "seconds spent on the exact comparisons",
        ),
    ]
}

/// Suite `3.1`, part 2: martingale exactness on the oracle chain and
/// boundedness of the expected bracket.
pub fn criterion_martingale_exactness(r_override: Option<f64>) -> Vec<TestReport> {
    let start = Instant::now();
    let mut reports = Vec::new();
    let mut worst: f64 = 0.0;
    for &r in &rates(r_override, &[0.2, 0.5, 0.8]) {
        worst = worst.max(oracle::martingale_check(12, r).expect("within budget"));
    }
    reports.push(TestReport::evaluate(
        "C2:martingale-one-step-exactness",
        "mean-gap",
        worst,
        1e-12,
        12,
        12,
        "max |E(M*_{k+1} | state) - M*_k| over reachable states, n = 12",
    ));
    let b5 = bracket_expectation(100_000, 0.5);
    let b6 = bracket_expectation(1_000_000, 0.5);
    reports.push(TestReport::evaluate(
        "C2:bracket-bounded",
        "mean-gap",
        (b6 - b5).abs() / b5,
        1e-3,
        1_000_000,
        1_000_000,
        format!("E<M*> at 1e5: {b5:.6}; at 1e6: {b6:.6}; the partial sums still move ~0.18% across this span because the summands decay like k^(r-2) = k^(-1.5)"),
    ));
    reports.push(TestReport::evaluate(
        "C2:runtime",
        "mean-gap",
        start.elapsed().as_secs_f64(),
        10.0,
        1_000_000,
        1_000_000,
        "seconds spent on martingale exactness and bracket summation",
    ));
    reports
}

/// Suite `3.1`, part 3: the L¹ scaling limit of `N*_n / n^{1-r}` at
/// `r = 1/2` from a 200k-replicate ensemble at `n = 4096`.
pub fn criterion_full_memory_l1(seed: u64) -> Vec<TestReport> {
    let r = 0.5;
    let n = 4096u64;
    let spec = EnsembleSpec::new(
        MemoryKernel::Full,
        ProbTriple::symmetric(r).expect("valid rate"),
        n,
        200_000,
        seed,
    );
    let result = run_ensemble(&spec).expect("ensemble runs");
    let scale = |cp_n: u64| (cp_n as f64).powf(1.0 - r);
    let points: Vec<(u64, f64)> = result
        .summary
        .checkpoints
        .iter()
        .map(|cp| (cp.n, cp.all.nonzeros.mean() / scale(cp.n)))
        .collect();
    let constants = limit_constants(r);
    let mut reports =
        convergence_track(&points, constants.mean_limit, 0.015, "C3:scaled-mean")
            .expect("enough checkpoints");
    let last = result.summary.final_checkpoint();
    let exact = full_mean(n, r) / scale(n);
    let se = last.all.nonzeros.stderr() / scale(n);
    let observed = last.all.nonzeros.mean() / scale(n);
    reports.push(TestReport::evaluate(
        "C3:scaled-mean-vs-exact",
        "mean-gap",
        (observed - exact).abs() / se,
        3.0,
        result.summary.completed_replicates,
        n,
        format!("observed {observed:.6} vs exact finite-n {exact:.6}, in standard errors"),
    ));
    reports
}

/// Suite `4.1`: first-step-only kernel; atom weight, mixture CLT and the
/// unconditional linear rate at `r = 1/2`, `n = 1e4`, `R = 1e5`.
pub fn criterion_first_only(seed: u64) -> Vec<TestReport> {
    let r = 0.5;
    let n = 10_000u64;
    let mut spec = EnsembleSpec::new(
        MemoryKernel::FirstOnly,
        ProbTriple::symmetric(r).expect("valid rate"),
        n,
        100_000,
        seed,
    );
    spec.keep_paths = true;
    let result = run_ensemble(&spec).expect("ensemble runs");
    let paths = result.paths.expect("paths kept");
    let cp = paths.checkpoint_index(n).expect("final checkpoint");
    let centering = result.summary.centering;
    let sqrt_n = (n as f64).sqrt();
    let samples: Vec<f64> = (0..paths.replicates)
        .map(|rep| {
            let v = paths.value(rep, cp) as f64;
            let first = paths.first_nonzero[rep as usize] as u8 as f64;
            (v - centering * n as f64 * first) / sqrt_n
        })
        .collect();

    let mut reports = vec![atom_gap_report(&samples, r, 0.01, n)];
    reports[0].name = "C4:mixture-atom-weight".into();
    let mut ks = ks_nonzero_branch(&samples, r * (1.0 - r), n).expect("enough branch samples");
    ks.name = "C4:mixture-continuous-branch".into();
    ks.detail.push_str(
        "; the finite-n branch is a lattice law with spacing 0.01 whose exact \
         sup-CDF distance to the normal is ~0.012, above the 95% critical value",
    );
    reports.push(ks);
    let mean_rate = result.summary.final_checkpoint().all.nonzeros.mean() / n as f64;
    let target = (1.0 - r) * (1.0 - r);
    reports.push(TestReport::evaluate(
        "C4:mean-rate",
        "mean-gap",
        (mean_rate - target).abs() / target,
        0.01,
        result.summary.completed_replicates,
        n,
        format!("E(N*_n/n) observed {mean_rate:.6} vs (1-r)^2 = {target}"),
    ));
    reports
}

/// Suite `5.1`: last-step-only kernel; chi-square against the geometric
/// limit, 2% mean agreement, and total-variation agreement with the exact
/// law at `n = 12`.
pub fn criterion_last_only(seed: u64, r_override: Option<f64>) -> Vec<TestReport> {
    let mut reports = Vec::new();
    for &r in &rates(r_override, &[0.3, 0.5]) {
        let mut spec = EnsembleSpec::new(
            MemoryKernel::LastOnly,
            ProbTriple::symmetric(r).expect("valid rate"),
            64,
            100_000,
            seed,
        );
        spec.keep_paths = true;
        let result = run_ensemble(&spec).expect("ensemble runs");
        let paths = result.paths.expect("paths kept");
        let cp = paths.checkpoint_index(64).expect("final checkpoint");
        let samples: Vec<u32> = paths.column(cp).collect();
        for mut report in chi_square_geometric(&samples, r, 64).expect("valid inputs") {
            report.name = format!("C5:{}[r={r}]", report.name);
            reports.push(report);
        }

        let mut small = EnsembleSpec::new(
            MemoryKernel::LastOnly,
            ProbTriple::symmetric(r).expect("valid rate"),
            12,
            100_000,
            seed,
        );
        small.keep_paths = true;
        let small_result = run_ensemble(&small).expect("ensemble runs");
        let small_paths = small_result.paths.expect("paths kept");
        let idx = small_paths.checkpoint_index(12).expect("final checkpoint");
        let empirical =
            empirical_pmf(small_paths.column(idx).map(|v| v as i64)).expect("valid counts");
        let exact = oracle::exact_distribution(MemoryKernel::LastOnly, 12, r)
            .expect("within budget");
        reports.push(TestReport::evaluate(
            format!("C5:distribution-tv[r={r}]"),
            "mean-gap",
            empirical.total_variation(&exact),
            5e-3,
            small_result.summary.completed_replicates,
            12,
            "total variation between the empirical law and the exact law at n = 12",
        ));
    }
    reports
}

/// Suite `6.1`: first-and-last kernel at `r = 1/2`; linear mean rate, CLT
/// variance rate, exact recursion against the oracle, and the mean drift
/// constant.
pub fn criterion_first_and_last(seed: u64) -> Vec<TestReport> {
    let r = 0.5;
    let n = 10_000u64;
    let spec = EnsembleSpec::new(
        MemoryKernel::FirstAndLast,
        ProbTriple::symmetric(r).expect("valid rate"),
        n,
        100_000,
        seed,
    );
    let result = run_ensemble(&spec).expect("ensemble runs");
    let constants = limit_constants(r);
    let branch = &result.summary.final_checkpoint().first_nonzero;
    let var_rate = branch.nonzeros.variance() / n as f64;
    let mean_rate = branch.nonzeros.mean() / n as f64;
    let mut reports = Vec::new();
    reports.push(TestReport::evaluate(
        "C6:clt-variance-rate",
        "variance-gap",
        (var_rate - constants.sigma_star_sq).abs() / constants.sigma_star_sq,
        0.05,
        branch.count(),
        n,
        format!(
            "branch Var(N*_n)/n observed {var_rate:.6} vs 6r(1-r)/(1+r)^2 = {:.6}",
            constants.sigma_star_sq
        ),
    ));
    reports.push(
        TestReport::evaluate(
            "C6:clt-variance-rate-chain-constant",
            "variance-gap",
            (var_rate - constants.mixed_var_rate).abs() / constants.mixed_var_rate,
            0.05,
            branch.count(),
            n,
            format!(
                "same observation vs the two-state-chain rate 2r(1-r)(3-r)/(1+r)^3 = {:.6}; \
                 the exact recursion also converges to this value",
                constants.mixed_var_rate
            ),
        )
        .informational(),
    );
    let target_mean = (1.0 - r) / (1.0 + r);
    reports.push(TestReport::evaluate(
        "C6:mean-rate",
        "mean-gap",
        (mean_rate - target_mean).abs() / target_mean,
        0.01,
        branch.count(),
        n,
        format!("branch E(N*_n)/n observed {mean_rate:.6} vs (1-r)/(1+r) = {target_mean:.6}"),
    ));

    let mut worst: f64 = 0.0;
    for nn in 1..=14u64 {
        let m = mixed_kernel_moments(nn, r);
        let mean = oracle::exact_moment(MemoryKernel::FirstAndLast, nn, r, 1, true)
            .expect("within budget");
        let second = oracle::exact_moment(MemoryKernel::FirstAndLast, nn, r, 2, true)
            .expect("within budget");
        worst = worst.max((m.mean - mean).abs()).max((m.second_moment - second).abs());
    }
    reports.push(TestReport::evaluate(
        "C6:recursion-vs-oracle",
        "mean-gap",
        worst,
        1e-12,
        14,
        14,
        "max moment gap between the coupled recursions and the exact law, n <= 14",
    ));

    let drift_target = 4.0 * r / (1.0 + r).powi(2);
    let m = mixed_kernel_moments(100_000, r);
    let drift = m.mean - 100_000.0 * (1.0 - r) / (1.0 + r);
    reports.push(TestReport::evaluate(
        "C6:mean-drift-constant",
        "mean-gap",
        (drift - drift_target).abs(),
        1e-3,
        100_000,
        100_000,
        format!("E(N*_n) - n(1-r)/(1+r) = {drift:.6} vs 4r/(1+r)^2 = {drift_target:.6}"),
    ));
    let atom = result.summary.final_checkpoint().all.atom_fraction();
    reports.push(
        TestReport::evaluate(
            "C6:unconditional-atom",
            "atom-gap",
            (atom - r).abs(),
            3.0 * (r * (1.0 - r) / result.summary.completed_replicates as f64).sqrt(),
            result.summary.completed_replicates,
            n,
            format!("exact-zero mass of the centered functional {atom:.6} vs r = {r}"),
        )
        .informational(),
    );
    reports
}

/// Suite `3.1`, part 4: the Gamma-ratio expansion has a second-order error
/// term; `n^2 x` the relative error must be stable under doubling.
pub fn criterion_gamma_lemma() -> Vec<TestReport> {
    let mut reports = Vec::new();
    for &x in &[0.3, -0.3, 0.5, -0.5] {
        let scaled: Vec<f64> = (8..=16)
            .map(|e| {
                let n = 1u64 << e;
                let exact = gamma_ratio_exact(n, x).expect("no pole");
                let asym = gamma_ratio_asymptotic(n, x);
                (n as f64).powi(2) * (exact - asym).abs() / exact
            })
            .collect();
        let worst_drift = scaled
            .windows(2)
            .map(|w| (w[1] / w[0] - 1.0).abs())
            .fold(0.0f64, f64::max);
        reports.push(TestReport::evaluate(
            format!("C7:gamma-expansion-order[x={x}]"),
            "mean-gap",
            worst_drift,
            0.20,
            9,
            1 << 16,
            format!(
                "n^2-scaled relative error drifts at most {worst_drift:.4} per doubling \
                 over n = 2^8..2^16 (the absolute error scales like n^x-2 by construction)"
            ),
        ));
    }
    reports
}

/// Suite `7`: window kernels die out; no path may step after the burn-in.
pub fn criterion_window_die_out(seed: u64) -> Vec<TestReport> {
    let n = 2048u64;
    let burn_in = 512u64;
    let mut spec = EnsembleSpec::new(
        MemoryKernel::LastWindow(3),
        ProbTriple::symmetric(0.3).expect("valid rate"),
        n,
        10_000,
        seed,
    );
    spec.checkpoints = Checkpoints::explicit(vec![burn_in, n], n).expect("valid grid");
    spec.keep_paths = true;
    let result = run_ensemble(&spec).expect("ensemble runs");
    let paths = result.paths.expect("paths kept");
    let moved = (0..paths.replicates)
        .filter(|&rep| paths.value(rep, 1) > paths.value(rep, 0))
        .count();
    let frac = moved as f64 / paths.replicates as f64;
    vec![TestReport::evaluate(
        "C8:window-die-out",
        "mean-gap",
        frac,
        1e-3,
        paths.replicates,
        n,
        format!("{moved} of {} paths took a nonzero step after n = {burn_in}", paths.replicates),
    )]
}

/// Suite `3.1`, part 5: the scaled variance limit, and the adjudication of
/// the two published `Var(Y)` expressions.
pub fn criterion_variance_adjudication() -> Vec<TestReport> {
    let r = 0.5;
    let n = 1_000_000u64;
    let constants = limit_constants(r);
    let m = full_moment_iter(r).nth((n - 1) as usize).expect("infinite iterator");
    let scale = (n as f64).powf(2.0 * (1.0 - r));
    let scaled_var = m.variance() / scale;
    let mut reports = vec![TestReport::evaluate(
        "C9:scaled-variance-limit",
        "variance-gap",
        (scaled_var - constants.var_limit).abs() / constants.var_limit,
        0.01,
        n,
        n,
        format!(
            "Var(N*_n/n^(1-r)) at n = 1e6: {scaled_var:.6} vs d_r - 1/Gamma(1-r)^2 = {:.6}",
            constants.var_limit
        ),
    )];
    let gamma2 = analytics::gamma_fn(2.0 - r);
    let y_var_observed = gamma2 * gamma2 * scaled_var;
    let gap_moments = (y_var_observed - constants.y_var_from_moments).abs();
    let gap_alternate = (y_var_observed - constants.y_var_alternate).abs();
    let chosen = if gap_moments <= gap_alternate {
        "(1-r)^2 (Gamma(1-r)^2 d_r - 1)"
    } else {
        "(1-r)^2 (d_r / Gamma(1-r)^2 - 1)"
    };
    reports.push(
        TestReport::evaluate(
            "C9:var-y-adjudication",
            "variance-gap",
            gap_moments.min(gap_alternate) / constants.y_var_from_moments.abs(),
            0.02,
            n,
            n,
            format!(
                "Gamma(2-r)^2-rescaled variance {y_var_observed:.6} selects {chosen}; \
                 candidates: moments route {:.6}, alternate {:.6}",
                constants.y_var_from_moments, constants.y_var_alternate
            ),
        )
        .informational(),
    );
    reports
}

/// The determinism gate: a verification subset rerun under different worker
/// counts must serialize to identical bytes.
pub fn criterion_determinism(seed: u64) -> Vec<TestReport> {
    let run = |threads: usize| -> Vec<u8> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("pool builds");
        pool.install(|| {
            let mut reports = criterion_last_only(seed, None);
            reports.extend(criterion_window_die_out(seed));
            serde_json::to_vec(&reports_json("determinism-probe", seed, &reports))
                .expect("serializable")
        })
    };
    let single = run(1);
    let multi = run(3);
    let identical = single == multi;
    vec![TestReport::evaluate(
        "C10:byte-identical-reports",
        "mean-gap",
        if identical { 0.0 } else { 1.0 },
        0.0,
        2,
        0,
        format!(
            "suite 5.1 + 7 rerun with 1 vs 3 workers: {} bytes vs {} bytes, {}",
            single.len(),
            multi.len(),
            if identical { "identical" } else { "DIFFER" }
        ),
    )]
}

/// Runs a suite and returns its reports.
pub fn run_suite(suite: Suite, seed: u64, r_override: Option<f64>) -> Vec<TestReport> {
    let mut reports = Vec::new();
    match suite {
        Suite::Theorem31 => {
            reports.extend(criterion_oracle_closed_form(r_override));
            reports.extend(criterion_martingale_exactness(r_override));
            reports.extend(criterion_full_memory_l1(seed));
            reports.extend(criterion_gamma_lemma());
            reports.extend(criterion_variance_adjudication());
        }
        Suite::Theorem41 => reports.extend(criterion_first_only(seed)),
        Suite::Theorem51 => reports.extend(criterion_last_only(seed, r_override)),
        Suite::Theorem61 => reports.extend(criterion_first_and_last(seed)),
        Suite::Remarks7 => reports.extend(criterion_window_die_out(seed)),
        Suite::All => {
            reports.extend(criterion_oracle_closed_form(r_override));
            reports.extend(criterion_martingale_exactness(r_override));
            reports.extend(criterion_full_memory_l1(seed));
            reports.extend(criterion_first_only(seed));
            reports.extend(criterion_last_only(seed, r_override));
            reports.extend(criterion_first_and_last(seed));
            reports.extend(criterion_gamma_lemma());
            reports.extend(criterion_window_die_out(seed));
            reports.extend(criterion_variance_adjudication());
            reports.extend(criterion_determinism(seed));
        }
    }
    reports
}

/// True when every gating report passes.
pub fn gating_pass(reports: &[TestReport]) -> bool {
    reports.iter().filter(|r| !r.informational).all(|r| r.pass)
}
