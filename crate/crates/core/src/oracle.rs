//! Exact finite-`n` laws of the indicator chain by dynamic programming over
//! distributional sufficient statistics.
//!
//! Whether the next step is zero depends only on how many remembered steps
//! are nonzero, never on their signs, so the signs are marginalized away and
//! the DP runs on indicator statistics alone. A sign-carrying reference
//! enumeration in the tests validates that reduction.
//!
//! Small horizons run in exact rational arithmetic (`r` taken as its exact
//! binary fraction), larger ones in `f64`. States are kept in ordered maps so
//! float summation order, and therefore every emitted byte, is reproducible.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::analytics::full_memory_alpha;
use crate::pmf::Pmf;
use crate::walk::MemoryKernel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("horizon {n} exceeds the exact-computation budget for {kernel} (max {max})")]
    BudgetExceeded { kernel: String, n: u64, max: u64 },
    #[error("window length {m} exceeds the exact-computation budget (max {max})")]
    WindowBudget { m: usize, max: usize },
    #[error("delay rate must be strictly inside (0, 1), got {0}")]
    InvalidRate(f64),
    #[error("degenerate chain: {0}")]
    Degenerate(String),
    #[error("conditioning event has probability zero")]
    EmptyBranch,
}

/// Exact horizons: plain kernels up to 24 steps, windows up to 20 steps and
/// width 8. Rational arithmetic is used up to 14 steps.
pub const MAX_EXACT_N: u64 = 24;
pub const MAX_WINDOW_N: u64 = 20;
pub const MAX_WINDOW_M: usize = 8;
pub const RATIONAL_LIMIT: u64 = 14;

/// Distributional state of the indicator chain: the first-step indicator,
/// the recent indicators (bit 0 is the newest; only windows use more), and
/// the running nonzero count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct DpState {
    first: bool,
    recent: u16,
    count: u8,
}

fn check_budget(kernel: MemoryKernel, n: u64) -> Result<(), OracleError> {
    if n == 0 {
        return Err(OracleError::Degenerate("horizon must be at least 1".into()));
    }
    match kernel {
        MemoryKernel::LastWindow(m) => {
            if m > MAX_WINDOW_M {
                return Err(OracleError::WindowBudget { m, max: MAX_WINDOW_M });
            }
            if m == 0 {
                return Err(OracleError::Degenerate("window must be at least 1".into()));
            }
            if n > MAX_WINDOW_N {
                return Err(OracleError::BudgetExceeded {
                    kernel: kernel.label(),
                    n,
                    max: MAX_WINDOW_N,
                });
            }
        }
        _ => {
            if n > MAX_EXACT_N {
                return Err(OracleError::BudgetExceeded {
                    kernel: kernel.label(),
                    n,
                    max: MAX_EXACT_N,
                });
            }
        }
    }
    Ok(())
}

fn check_rate(r: f64) -> Result<(), OracleError> {
    if r.is_finite() && r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(OracleError::InvalidRate(r))
    }
}

/// Probability weights the DP can run over: `f64` or exact rationals.
trait Weight: Clone + PartialEq {
    fn zero() -> Self;
    /// Exact value of the `f64` rate.
    fn from_rate(r: f64) -> Self;
    fn add_assign(&mut self, rhs: &Self);
    fn mul(&self, rhs: &Self) -> Self;
    /// `self * num / den` (exact in rational mode).
    fn mul_ratio(&self, num: u64, den: u64) -> Self;
    fn one_minus(&self) -> Self;
    fn to_f64(&self) -> f64;
    fn is_zero(&self) -> bool;
}

impl Weight for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_rate(r: f64) -> Self {
        r
    }
    fn add_assign(&mut self, rhs: &Self) {
        *self += rhs;
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn mul_ratio(&self, num: u64, den: u64) -> Self {
        self * num as f64 / den as f64
    }
    fn one_minus(&self) -> Self {
        1.0 - self
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

impl Weight for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn from_rate(r: f64) -> Self {
        BigRational::from_float(r).expect("rate is finite")
    }
    fn add_assign(&mut self, rhs: &Self) {
        *self += rhs;
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn mul_ratio(&self, num: u64, den: u64) -> Self {
        self * BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn one_minus(&self) -> Self {
        <BigRational as One>::one() - self
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).expect("probability fits in f64")
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

/// `(remembered, nonzero remembered)` for a state at time `n`.
fn memory_counts(kernel: MemoryKernel, state: &DpState, n: u64) -> (u64, u64) {
    match kernel {
        MemoryKernel::Full => (n, state.count as u64),
        MemoryKernel::FirstOnly => (1, state.first as u64),
        MemoryKernel::LastOnly => (1, (state.recent & 1) as u64),
        MemoryKernel::FirstAndLast => {
            if n == 1 {
                (1, state.first as u64)
            } else {
                (2, state.first as u64 + (state.recent & 1) as u64)
            }
        }
        MemoryKernel::LastWindow(m) => {
            let width = (n).min(m as u64) as u32;
            let mask = if width >= 16 { u16::MAX } else { (1u16 << width) - 1 };
            (width as u64, (state.recent & mask).count_ones() as u64)
        }
    }
}

fn advance_state(kernel: MemoryKernel, state: &DpState, nonzero: bool, n: u64) -> DpState {
    let recent = match kernel {
        MemoryKernel::LastWindow(m) => {
            let width = (n + 1).min(m as u64) as u32;
            let mask = if width >= 16 { u16::MAX } else { (1u16 << width) - 1 };
            ((state.recent << 1) | nonzero as u16) & mask
        }
        _ => nonzero as u16,
    };
    DpState { first: state.first, recent, count: state.count + nonzero as u8 }
}

/// Distribution of the sufficient statistic at time `n`.
fn indicator_dp<W: Weight>(kernel: MemoryKernel, n: u64, r: f64) -> BTreeMap<DpState, W> {
    let rw = W::from_rate(r);
    let one_minus_r = rw.one_minus();
    let mut dist: BTreeMap<DpState, W> = BTreeMap::new();
    dist.insert(DpState { first: true, recent: 1, count: 1 }, one_minus_r.clone());
    dist.insert(DpState { first: false, recent: 0, count: 0 }, rw);
    for t in 1..n {
        let mut next: BTreeMap<DpState, W> = BTreeMap::new();
        for (state, prob) in &dist {
            let (m, c) = memory_counts(kernel, state, t);
            let p_nonzero = one_minus_r.mul_ratio(c, m);
            let p_zero = p_nonzero.one_minus();
            if !p_nonzero.is_zero() {
                let s = advance_state(kernel, state, true, t);
                next.entry(s).or_insert_with(W::zero).add_assign(&prob.mul(&p_nonzero));
            }
            let s = advance_state(kernel, state, false, t);
            next.entry(s).or_insert_with(W::zero).add_assign(&prob.mul(&p_zero));
        }
        dist = next;
    }
    dist
}

fn marginal_counts<W: Weight>(
    dist: &BTreeMap<DpState, W>,
    n: u64,
    branch: Option<bool>,
) -> Vec<W> {
    let mut probs = vec![W::zero(); n as usize + 1];
    for (state, prob) in dist {
        if branch.is_some_and(|b| b != state.first) {
            continue;
        }
        probs[state.count as usize].add_assign(prob);
    }
    probs
}

fn pmf_from_weights<W: Weight>(weights: Vec<W>) -> Pmf {
    let probs: Vec<f64> = weights.iter().map(Weight::to_f64).collect();
    Pmf::from_zero_based(probs).expect("DP mass sums to one")
}

/// Exact law of `N*_n`. Runs in rational arithmetic for `n <= 14`, floats
/// beyond, up to the budgets above.
pub fn exact_distribution(kernel: MemoryKernel, n: u64, r: f64) -> Result<Pmf, OracleError> {
    check_rate(r)?;
    check_budget(kernel, n)?;
    if n <= RATIONAL_LIMIT {
        let dist = indicator_dp::<BigRational>(kernel, n, r);
        Ok(pmf_from_weights(marginal_counts(&dist, n, None)))
    } else {
        let dist = indicator_dp::<f64>(kernel, n, r);
        Ok(pmf_from_weights(marginal_counts(&dist, n, None)))
    }
}

/// Float-only route of [`exact_distribution`], exposed so tests can compare
/// the two arithmetic backends.
pub fn exact_distribution_float(kernel: MemoryKernel, n: u64, r: f64) -> Result<Pmf, OracleError> {
    check_rate(r)?;
    check_budget(kernel, n)?;
    let dist = indicator_dp::<f64>(kernel, n, r);
    Ok(pmf_from_weights(marginal_counts(&dist, n, None)))
}

/// Law of `N*_n` conditioned on the first step being nonzero (or zero).
pub fn exact_conditional_distribution(
    kernel: MemoryKernel,
    n: u64,
    r: f64,
    first_nonzero: bool,
) -> Result<Pmf, OracleError> {
    check_rate(r)?;
    check_budget(kernel, n)?;
    if n <= RATIONAL_LIMIT {
        let dist = indicator_dp::<BigRational>(kernel, n, r);
        let weights = marginal_counts(&dist, n, Some(first_nonzero));
        let total = weights.iter().fold(<BigRational as Zero>::zero(), |mut acc, w| {
            acc += w;
            acc
        });
        if Zero::is_zero(&total) {
            return Err(OracleError::EmptyBranch);
        }
        let normalized: Vec<BigRational> = weights.into_iter().map(|w| w / &total).collect();
        Ok(pmf_from_weights(normalized))
    } else {
        let dist = indicator_dp::<f64>(kernel, n, r);
        let weights = marginal_counts(&dist, n, Some(first_nonzero));
        let total: f64 = weights.iter().sum();
        if total == 0.0 {
            return Err(OracleError::EmptyBranch);
        }
        let normalized: Vec<f64> = weights.into_iter().map(|w| w / total).collect();
        Ok(pmf_from_weights(normalized))
    }
}

/// `E((N*_n)^order)`, optionally conditioned on a nonzero first step.
pub fn exact_moment(
    kernel: MemoryKernel,
    n: u64,
    r: f64,
    order: u32,
    condition_on_first_nonzero: bool,
) -> Result<f64, OracleError> {
    let pmf = if condition_on_first_nonzero {
        exact_conditional_distribution(kernel, n, r, true)?
    } else {
        exact_distribution(kernel, n, r)?
    };
    Ok(pmf.moment(order))
}

/// Maximum one-step martingale defect of `M*_k = α*_k N*_k` over all
/// reachable full-memory states up to time `n`; zero up to rounding when the
/// scalers match the rate.
pub fn martingale_check(n: u64, r: f64) -> Result<f64, OracleError> {
    martingale_check_with_rate(n, r, r)
}

/// [`martingale_check`] with scalers built for `alpha_rate` instead of `r`;
/// mismatched rates serve as a fault-injection control.
pub fn martingale_check_with_rate(n: u64, r: f64, alpha_rate: f64) -> Result<f64, OracleError> {
    check_rate(r)?;
    check_rate(alpha_rate)?;
    if n > 20 {
        return Err(OracleError::BudgetExceeded { kernel: "full".into(), n, max: 20 });
    }
    let mut worst: f64 = 0.0;
    let mut dist: BTreeMap<DpState, f64> =
        indicator_dp::<f64>(MemoryKernel::Full, 1, r);
    for k in 1..n {
        let alpha_k = full_memory_alpha(k, alpha_rate);
        let alpha_next = full_memory_alpha(k + 1, alpha_rate);
        let mut next: BTreeMap<DpState, f64> = BTreeMap::new();
        for (state, prob) in &dist {
            let count = state.count as f64;
            let expected_next = count * (k as f64 + 1.0 - r) / k as f64;
            worst = worst.max((alpha_next * expected_next - alpha_k * count).abs());
            let p_nonzero = (1.0 - r) * count / k as f64;
            if p_nonzero != 0.0 {
                *next.entry(advance_state(MemoryKernel::Full, state, true, k)).or_insert(0.0) +=
                    prob * p_nonzero;
            }
            *next.entry(advance_state(MemoryKernel::Full, state, false, k)).or_insert(0.0) +=
                prob * (1.0 - p_nonzero);
        }
        dist = next;
    }
    Ok(worst)
}

/// Exact `Corr(I*_n, I*_{n+1})` from the joint law.
pub fn correlation(kernel: MemoryKernel, n: u64, r: f64) -> Result<f64, OracleError> {
    check_rate(r)?;
    if n < 2 {
        return Err(OracleError::Degenerate(
            "adjacent-indicator correlation needs n >= 2".into(),
        ));
    }
    check_budget(kernel, n)?;
    let dist = indicator_dp::<f64>(kernel, n, r);
    let mut e_now = 0.0; // E(I*_n)
    let mut e_next = 0.0; // E(I*_{n+1})
    let mut e_joint = 0.0; // E(I*_n I*_{n+1})
    for (state, prob) in &dist {
        let (m, c) = memory_counts(kernel, state, n);
        let p_nonzero = (1.0 - r) * c as f64 / m as f64;
        e_next += prob * p_nonzero;
        if state.recent & 1 == 1 {
            e_now += prob;
            e_joint += prob * p_nonzero;
        }
    }
    let var_now = e_now * (1.0 - e_now);
    let var_next = e_next * (1.0 - e_next);
    if var_now < 1e-300 || var_next < 1e-300 {
        return Err(OracleError::Degenerate(format!(
            "indicator variance vanishes (E(I*_n)={e_now}, E(I*_{{n+1}})={e_next})"
        )));
    }
    Ok((e_joint - e_now * e_next) / (var_now * var_next).sqrt())
}

/// `P(all of the last min(n, m) steps are zero at time n)` for the window
/// kernel; nondecreasing in `n` and approaching 1.
pub fn window_all_zero_probability(m: usize, n: u64, r: f64) -> Result<f64, OracleError> {
    check_rate(r)?;
    let kernel = MemoryKernel::LastWindow(m);
    check_budget(kernel, n)?;
    let dist = indicator_dp::<f64>(kernel, n, r);
    Ok(dist
        .iter()
        .filter(|(state, _)| {
            let (_, c) = memory_counts(kernel, state, n);
            c == 0
        })
        .map(|(_, p)| p)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics;
    use approx::assert_relative_eq;

    const KERNELS: [MemoryKernel; 5] = [
        MemoryKernel::Full,
        MemoryKernel::FirstOnly,
        MemoryKernel::LastOnly,
        MemoryKernel::FirstAndLast,
        MemoryKernel::LastWindow(3),
    ];

    /// Sign-carrying brute force: enumerates full step sequences in
    /// {-1, 0, +1}^n with their exact probabilities and tallies the nonzero
    /// count. Validates that marginalizing signs is sound and that the law
    /// depends on (p, q) only through r.
    fn brute_force_signed_probs(kernel: MemoryKernel, n: u64, p: f64, q: f64, r: f64) -> Vec<f64> {
        fn memory_indices(kernel: MemoryKernel, m: usize) -> Vec<usize> {
            match kernel {
                MemoryKernel::Full => (0..m).collect(),
                MemoryKernel::FirstOnly => vec![0],
                MemoryKernel::LastOnly => vec![m - 1],
                MemoryKernel::FirstAndLast => {
                    if m == 1 {
                        vec![0]
                    } else {
                        vec![0, m - 1]
                    }
                }
                MemoryKernel::LastWindow(w) => (m.saturating_sub(w)..m).collect(),
            }
        }
        fn recurse(
            kernel: MemoryKernel,
            n: u64,
            p: f64,
            q: f64,
            r: f64,
            path: &mut Vec<i8>,
            prob: f64,
            acc: &mut Vec<f64>,
        ) {
            if path.len() == n as usize {
                acc[path.iter().filter(|&&s| s != 0).count()] += prob;
                return;
            }
            if path.is_empty() {
                for (step, pr) in [(1i8, p), (-1, q), (0, r)] {
                    path.push(step);
                    recurse(kernel, n, p, q, r, path, prob * pr, acc);
                    path.pop();
                }
                return;
            }
            let mem = memory_indices(kernel, path.len());
            let share = 1.0 / mem.len() as f64;
            for &idx in &mem {
                let remembered = path[idx];
                for (step, pr) in [(remembered, p), (-remembered, q), (0, r)] {
                    path.push(step);
                    recurse(kernel, n, p, q, r, path, prob * pr * share, acc);
                    path.pop();
                }
            }
        }
        let mut acc = vec![0.0; n as usize + 1];
        recurse(kernel, n, p, q, r, &mut Vec::new(), 1.0, &mut acc);
        let total: f64 = acc.iter().sum();
        assert!((total - 1.0).abs() < 1e-11, "leaf probabilities sum to {total}");
        acc
    }

    #[test]
    fn any_kernel_single_step_law() {
        for kernel in KERNELS {
            let pmf = exact_distribution(kernel, 1, 0.3).unwrap();
            assert_eq!(pmf.probs(), &[0.3, 0.7], "kernel {kernel}");
        }
    }

    #[test]
    fn last_only_matches_truncated_geometric() {
        let pmf = exact_distribution(MemoryKernel::LastOnly, 3, 0.5).unwrap();
        assert_eq!(pmf.probs(), &[0.5, 0.25, 0.125, 0.125]);
        for n in 1..=12 {
            let dp = exact_distribution(MemoryKernel::LastOnly, n, 0.3).unwrap();
            let closed = analytics::geometric_law(n, 0.3);
            assert!(dp.max_abs_diff(&closed) < 1e-12, "n={n}");
        }
    }

    #[test]
    fn full_kernel_hand_law_at_three_steps() {
        let pmf = exact_distribution(MemoryKernel::Full, 3, 0.5).unwrap();
        assert_eq!(pmf.probs(), &[0.5, 0.1875, 0.1875, 0.125]);
        assert_relative_eq!(pmf.mean(), 0.9375);
    }

    #[test]
    fn full_kernel_moments_match_closed_forms() {
        for r in [0.2, 0.5, 0.8] {
            for n in 1..=20u64 {
                let pmf = exact_distribution(MemoryKernel::Full, n, r).unwrap();
                assert!(
                    (pmf.mean() - analytics::full_mean(n, r)).abs() < 1e-12,
                    "mean n={n} r={r}"
                );
                assert!(
                    (pmf.moment(2) - analytics::full_second_moment(n, r)).abs() < 1e-12,
                    "second moment n={n} r={r}"
                );
            }
        }
    }

    #[test]
    fn full_mean_two_step_example() {
        assert_relative_eq!(
            exact_moment(MemoryKernel::Full, 2, 0.5, 1, false).unwrap(),
            0.75
        );
        // order zero is total mass
        assert_relative_eq!(exact_moment(MemoryKernel::Full, 9, 0.37, 0, false).unwrap(), 1.0);
    }

    #[test]
    fn window_of_one_is_exactly_last_only() {
        for n in [1u64, 5, 12, 17, 20] {
            let w = exact_distribution(MemoryKernel::LastWindow(1), n, 0.41).unwrap();
            let l = exact_distribution(MemoryKernel::LastOnly, n, 0.41).unwrap();
            assert_eq!(w.probs(), l.probs(), "n={n}");
        }
    }

    #[test]
    fn rational_and_float_routes_agree() {
        for kernel in KERNELS {
            let a = exact_distribution(kernel, 12, 0.3).unwrap();
            let b = exact_distribution_float(kernel, 12, 0.3).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-13, "kernel {kernel}");
        }
    }

    #[test]
    fn sign_marginalization_and_rate_only_dependence() {
        // the law of N*_n depends on (p, q) only through the delay rate, and
        // the indicator DP reproduces the sign-carrying enumeration
        for kernel in KERNELS {
            for n in [1u64, 4, 7] {
                let dp = exact_distribution(kernel, n, 0.5).unwrap();
                for (p, q) in [(0.25, 0.25), (0.3, 0.2), (0.05, 0.45)] {
                    let brute = brute_force_signed_probs(kernel, n, p, q, 0.5);
                    for (k, &b) in brute.iter().enumerate() {
                        assert!(
                            (dp.prob(k as i64) - b).abs() < 1e-11,
                            "kernel {kernel} n={n} p={p} q={q} k={k}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn conditional_distribution_splits_the_law() {
        for kernel in KERNELS {
            let n = 8;
            let r = 0.4;
            let all = exact_distribution(kernel, n, r).unwrap();
            let on = exact_conditional_distribution(kernel, n, r, true).unwrap();
            let off = exact_conditional_distribution(kernel, n, r, false).unwrap();
            for k in 0..=n as i64 {
                let mix = (1.0 - r) * on.prob(k) + r * off.prob(k);
                assert!((mix - all.prob(k)).abs() < 1e-12, "kernel {kernel} k={k}");
            }
        }
        // the zero-first-step branch never counts a nonzero step for the
        // first-only kernel
        let off =
            exact_conditional_distribution(MemoryKernel::FirstOnly, 10, 0.4, false).unwrap();
        assert_relative_eq!(off.prob(0), 1.0);
    }

    #[test]
    fn mixed_recursion_agrees_with_conditional_oracle() {
        for r in [0.2, 0.5, 0.8] {
            for n in 1..=14u64 {
                let m = analytics::mixed_kernel_moments(n, r);
                let mean =
                    exact_moment(MemoryKernel::FirstAndLast, n, r, 1, true).unwrap();
                let second =
                    exact_moment(MemoryKernel::FirstAndLast, n, r, 2, true).unwrap();
                assert!((m.mean - mean).abs() < 1e-12, "mean n={n} r={r}");
                assert!((m.second_moment - second).abs() < 1e-12, "second n={n} r={r}");
            }
        }
    }

    #[test]
    fn martingale_check_is_exact_and_detects_faults() {
        for r in [0.2, 0.5, 0.8] {
            assert!(martingale_check(10, r).unwrap() <= 1e-13, "r={r}");
        }
        assert_eq!(martingale_check(1, 0.5).unwrap(), 0.0);
        // wrong scaler rate must blow the defect up
        assert!(martingale_check_with_rate(10, 0.5, 0.45).unwrap() > 1e-3);
    }

    #[test]
    fn correlation_values() {
        // last-only: corr(I*_n, I*_{n+1}) = sqrt((1-r)(1-e_n)/(1-e_{n+1})),
        // e_n = (1-r)^n; bounded away from zero
        let r: f64 = 0.3;
        for n in [2u64, 5, 10, 20] {
            let e_n = (1.0 - r).powi(n as i32);
            let e_next = (1.0 - r).powi(n as i32 + 1);
            let closed = ((1.0 - r) * (1.0 - e_n) / (1.0 - e_next)).sqrt();
            let dp = correlation(MemoryKernel::LastOnly, n, r).unwrap();
            assert_relative_eq!(dp, closed, max_relative = 1e-12);
            assert!(dp > 0.5);
        }
        // full memory: decays roughly like n^{-r}
        let c8 = correlation(MemoryKernel::Full, 8, 0.5).unwrap();
        let c16 = correlation(MemoryKernel::Full, 16, 0.5).unwrap();
        assert_relative_eq!(c8, 0.23009000697357998, max_relative = 1e-12);
        assert_relative_eq!(c16, 0.1600640795436193, max_relative = 1e-12);
        assert!(c16 < c8);
        let slope = c16 / c8;
        assert!((slope / 0.5f64.powf(0.5) - 1.0).abs() < 0.3, "slope {slope}");
        // degenerate edge
        assert!(matches!(
            correlation(MemoryKernel::Full, 1, 0.5),
            Err(OracleError::Degenerate(_))
        ));
    }

    #[test]
    fn window_die_out_is_monotone() {
        let mut last = 0.0;
        for n in 1..=20u64 {
            let p = window_all_zero_probability(3, n, 0.3).unwrap();
            assert!(p >= last - 1e-15, "P(dead) dipped at n={n}");
            last = p;
        }
        // frozen from the exact chain: P(dead) at n=20, m=3, r=0.3
        assert_relative_eq!(last, 0.95665789, max_relative = 1e-6);
    }

    #[test]
    fn budgets_are_enforced() {
        assert!(matches!(
            exact_distribution(MemoryKernel::Full, 25, 0.5),
            Err(OracleError::BudgetExceeded { .. })
        ));
        assert!(matches!(
            exact_distribution(MemoryKernel::LastWindow(9), 10, 0.5),
            Err(OracleError::WindowBudget { .. })
        ));
        assert!(matches!(
            exact_distribution(MemoryKernel::LastWindow(3), 21, 0.5),
            Err(OracleError::BudgetExceeded { .. })
        ));
        assert!(matches!(
            exact_distribution(MemoryKernel::Full, 5, 1.0),
            Err(OracleError::InvalidRate(_))
        ));
    }

    #[test]
    fn pmf_support_and_mass() {
        for kernel in KERNELS {
            let pmf = exact_distribution(kernel, 10, 0.6).unwrap();
            assert_eq!(pmf.support().first(), Some(&0));
            assert_eq!(pmf.support().last(), Some(&10));
            assert!((pmf.total() - 1.0).abs() < 1e-12);
        }
    }
}
