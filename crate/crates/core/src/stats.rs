//! Goodness-of-fit and convergence diagnostics against the limit laws of the
//! counting processes.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use thiserror::Error;

use crate::analytics::full_memory_alpha;
use crate::montecarlo::PathMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("{got} samples are too few for a stable test; supply at least {need}")]
    TooFewSamples { got: usize, need: usize },
    #[error("truncation mass (1-r)^n = {mass:e} is too large; grow the horizon")]
    TruncationMass { mass: f64 },
    #[error("need at least {need} checkpoints, got {got}")]
    FewCheckpoints { got: usize, need: usize },
    #[error("law and samples are incompatible: {0}")]
    Incompatible(String),
}

/// A limiting law a functional is tested against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LimitLaw {
    Normal { mean: f64, variance: f64 },
    /// Success probability of the step that ends the run; mass
    /// `(1-r)^k r` on k = 0, 1, ...
    Geometric { success: f64 },
    /// `(1 - w) N(0, variance) + w δ_0` with `w = atom_weight`.
    MixtureNormalAtom { variance: f64, atom_weight: f64 },
    Constant { value: f64 },
}

/// One diagnostic outcome; `pass` if and only if `value <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    /// `ks`, `chi-square`, `mean-gap`, `variance-gap`, `atom-gap` or `trend`.
    pub statistic: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub sample_size: u64,
    pub checkpoint_n: u64,
    /// Reported for context only; never gates a verification run.
    pub informational: bool,
    pub detail: String,
}

impl TestReport {
    pub fn evaluate(
        name: impl Into<String>,
        statistic: impl Into<String>,
        value: f64,
        threshold: f64,
        sample_size: u64,
        checkpoint_n: u64,
        detail: impl Into<String>,
    ) -> Self {
        TestReport {
            name: name.into(),
            statistic: statistic.into(),
            value,
            threshold,
            pass: value <= threshold,
            sample_size,
            checkpoint_n,
            informational: false,
            detail: detail.into(),
        }
    }

    pub fn informational(mut self) -> Self {
        self.informational = true;
        self
    }
}

/// Asymptotic 95% Kolmogorov-Smirnov critical value.
pub fn ks_critical(n: usize) -> f64 {
    1.36 / (n as f64).sqrt()
}

fn two_sided_ks(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Atom-weight check of a mixture law: `| #\{exact zeros\}/n - w |` against
/// the given tolerance.
pub fn atom_gap_report(samples: &[f64], atom_weight: f64, tolerance: f64, n: u64) -> TestReport {
    let zeros = samples.iter().filter(|&&x| x == 0.0).count();
    let frac = zeros as f64 / samples.len() as f64;
    TestReport::evaluate(
        "mixture-atom-weight",
        "atom-gap",
        (frac - atom_weight).abs(),
        tolerance,
        samples.len() as u64,
        n,
        format!("empirical atom {frac:.6} vs weight {atom_weight:.6}"),
    )
}

/// Two-sided KS of the nonzero samples against `N(0, variance)`.
pub fn ks_nonzero_branch(samples: &[f64], variance: f64, n: u64) -> Result<TestReport, StatsError> {
    let mut branch: Vec<f64> = samples.iter().copied().filter(|&x| x != 0.0).collect();
    if branch.len() < 1000 {
        return Err(StatsError::TooFewSamples { got: branch.len(), need: 1000 });
    }
    branch.sort_unstable_by(|a, b| a.partial_cmp(b).expect("no NaN samples"));
    let normal = Normal::new(0.0, variance.sqrt()).expect("positive variance");
    let d = two_sided_ks(&branch, |x| normal.cdf(x));
    Ok(TestReport::evaluate(
        "mixture-continuous-branch",
        "ks",
        d,
        ks_critical(branch.len()),
        branch.len() as u64,
        n,
        format!("KS of the nonzero branch vs N(0, {variance})"),
    ))
}

/// Kolmogorov-Smirnov style comparison of samples against a limit law.
///
/// * `Normal`: plain two-sided KS at the asymptotic 95% critical value.
/// * `MixtureNormalAtom`: two-part report; the exact-zero bucket is compared
///   to the atom weight (3-sigma binomial tolerance) and the nonzero branch
///   to the normal component.
/// * `Geometric`: KS over the integer lattice (conservative).
/// * `Constant`: largest one-sided deviation of the empirical CDF from the
///   point mass.
pub fn ks_against(law: &LimitLaw, samples: &[f64], n: u64) -> Result<Vec<TestReport>, StatsError> {
    if samples.len() < 1000 {
        return Err(StatsError::TooFewSamples { got: samples.len(), need: 1000 });
    }
    match *law {
        LimitLaw::Normal { mean, variance } => {
            let mut sorted = samples.to_vec();
            sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("no NaN samples"));
            let normal = Normal::new(mean, variance.sqrt()).expect("positive variance");
            let d = two_sided_ks(&sorted, |x| normal.cdf(x));
            Ok(vec![TestReport::evaluate(
                "normal-fit",
                "ks",
                d,
                ks_critical(sorted.len()),
                sorted.len() as u64,
                n,
                format!("KS vs N({mean}, {variance})"),
            )])
        }
        LimitLaw::MixtureNormalAtom { variance, atom_weight } => {
            let tolerance = 3.0 * (atom_weight * (1.0 - atom_weight) / samples.len() as f64).sqrt();
            Ok(vec![
                atom_gap_report(samples, atom_weight, tolerance, n),
                ks_nonzero_branch(samples, variance, n)?,
            ])
        }
        LimitLaw::Geometric { success } => {
            if !(success > 0.0 && success < 1.0) {
                return Err(StatsError::Incompatible(format!(
                    "geometric success {success} outside (0, 1)"
                )));
            }
            let values: Vec<i64> = samples.iter().map(|&x| x.round() as i64).collect();
            let max = *values.iter().max().expect("nonempty");
            let count = values.len() as f64;
            let mut d: f64 = 0.0;
            let mut sorted = values.clone();
            sorted.sort_unstable();
            for k in 0..=max.max(0) {
                let below = sorted.partition_point(|&v| v <= k) as f64 / count;
                let cdf = 1.0 - (1.0 - success).powi(k as i32 + 1);
                d = d.max((below - cdf).abs());
            }
            Ok(vec![TestReport::evaluate(
                "geometric-fit",
                "ks",
                d,
                ks_critical(values.len()),
                values.len() as u64,
                n,
                format!("lattice KS vs Geometric({success})"),
            )])
        }
        LimitLaw::Constant { value } => {
            let below = samples.iter().filter(|&&x| x < value).count() as f64;
            let above = samples.iter().filter(|&&x| x > value).count() as f64;
            let d = below.max(above) / samples.len() as f64;
            Ok(vec![TestReport::evaluate(
                "constant-fit",
                "ks",
                d,
                ks_critical(samples.len()),
                samples.len() as u64,
                n,
                format!("empirical mass off the point {value}"),
            )])
        }
    }
}

/// Chi-square goodness of fit against the limiting geometric law, with tail
/// pooling so every cell keeps an expected count of at least 5, plus a
/// mean-gap report against `(1-r)/r` at 2% relative tolerance.
pub fn chi_square_geometric(
    samples: &[u32],
    success: f64,
    horizon: u64,
) -> Result<Vec<TestReport>, StatsError> {
    if samples.len() < 1000 {
        return Err(StatsError::TooFewSamples { got: samples.len(), need: 1000 });
    }
    let mass = (1.0 - success).powf(horizon as f64);
    if mass >= 1e-6 {
        return Err(StatsError::TruncationMass { mass });
    }
    let count = samples.len() as f64;
    // cells 0..cut-1 individually, >= cut pooled; every expected count >= 5
    let mut cut = 0usize;
    while count * success * (1.0 - success).powi(cut as i32) >= 5.0 {
        cut += 1;
    }
    if cut == 0 {
        return Err(StatsError::TooFewSamples { got: samples.len(), need: 1000 });
    }
    let mut observed = vec![0u64; cut + 1];
    for &s in samples {
        let idx = (s as usize).min(cut);
        observed[idx] += 1;
    }
    let mut chi2 = 0.0;
    for (k, &obs) in observed.iter().enumerate() {
        let expected = if k < cut {
            count * success * (1.0 - success).powi(k as i32)
        } else {
            count * (1.0 - success).powi(cut as i32)
        };
        let diff = obs as f64 - expected;
        chi2 += diff * diff / expected;
    }
    let df = cut as f64; // cells - 1
    let threshold = ChiSquared::new(df).expect("positive df").inverse_cdf(0.99);
    let chi_report = TestReport::evaluate(
        "geometric-chi-square",
        "chi-square",
        chi2,
        threshold,
        samples.len() as u64,
        horizon,
        format!("{} cells (tail pooled at {cut}), 99% level", cut + 1),
    );

    let mean = samples.iter().map(|&s| s as f64).sum::<f64>() / count;
    let target = (1.0 - success) / success;
    let mean_report = TestReport::evaluate(
        "geometric-mean",
        "mean-gap",
        (mean - target).abs() / target,
        0.02,
        samples.len() as u64,
        horizon,
        format!("sample mean {mean:.5} vs limit {target:.5}"),
    );
    Ok(vec![chi_report, mean_report])
}

/// Tracks a functional along a checkpoint grid toward a constant limit.
///
/// Produces the relative gap at the largest checkpoint (gating) and a
/// monotone-trend diagnostic over the second half of the grid
/// (informational).
pub fn convergence_track(
    points: &[(u64, f64)],
    target: f64,
    rel_tolerance: f64,
    name: &str,
) -> Result<Vec<TestReport>, StatsError> {
    if points.len() < 4 {
        return Err(StatsError::FewCheckpoints { got: points.len(), need: 4 });
    }
    let (last_n, last_value) = *points.last().expect("nonempty");
    let gap = TestReport::evaluate(
        format!("{name}-limit"),
        "mean-gap",
        (last_value - target).abs() / target.abs(),
        rel_tolerance,
        points.len() as u64,
        last_n,
        format!("value {last_value:.6} vs limit {target:.6}"),
    );
    let gaps: Vec<f64> = points.iter().map(|&(_, v)| (v - target).abs()).collect();
    let half = gaps.len() / 2;
    let tail = &gaps[half..];
    let increases = tail.windows(2).filter(|w| w[1] > w[0]).count();
    let comparisons = tail.len().saturating_sub(1).max(1);
    let trend = TestReport::evaluate(
        format!("{name}-trend"),
        "trend",
        increases as f64,
        (comparisons / 2) as f64,
        points.len() as u64,
        last_n,
        format!("{increases}/{comparisons} widenings of |value - limit| over the top half"),
    )
    .informational();
    Ok(vec![gap, trend])
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Convergence diagnostics of the full-memory martingale `M*_n = α*_n N*_n`
/// on stored paths:
///
/// * the ensemble mean of `M*_n` must sit within 3 standard errors of
///   `1 - r` at every checkpoint (the martingale has constant mean), and
/// * the per-path fluctuation `|M*_{2n} - M*_n|` must shrink over the top
///   half of the grid (ratio of the last median to the first below 1). The
///   medians are taken on the branch with a nonzero first step; on the
///   complementary branch the walk is frozen and `M*` is identically zero.
pub fn martingale_tail_check(paths: &PathMatrix, r: f64) -> Result<Vec<TestReport>, StatsError> {
    let ncp = paths.checkpoint_ns.len();
    if ncp < 6 {
        return Err(StatsError::FewCheckpoints { got: ncp, need: 6 });
    }
    if paths.replicates < 1000 {
        return Err(StatsError::TooFewSamples { got: paths.replicates as usize, need: 1000 });
    }
    let alphas: Vec<f64> =
        paths.checkpoint_ns.iter().map(|&n| full_memory_alpha(n, r)).collect();

    let mut worst_sigmas: f64 = 0.0;
    let mut worst_at = paths.checkpoint_ns[0];
    for (i, (&n, &alpha)) in paths.checkpoint_ns.iter().zip(&alphas).enumerate() {
        let mut acc = crate::montecarlo::RunningStats::default();
        for v in paths.column(i) {
            acc.push(alpha * v as f64);
        }
        let sigmas = (acc.mean() - (1.0 - r)).abs() / acc.stderr();
        if sigmas > worst_sigmas {
            worst_sigmas = sigmas;
            worst_at = n;
        }
    }
    let mean_report = TestReport::evaluate(
        "martingale-constant-mean",
        "mean-gap",
        worst_sigmas,
        3.0,
        paths.replicates,
        worst_at,
        format!("max |mean(M*) - (1-r)| over the grid, in standard errors, at n={worst_at}"),
    );

    let start = ncp / 2;
    let live: Vec<u64> =
        (0..paths.replicates).filter(|&rep| paths.first_nonzero[rep as usize]).collect();
    if live.len() < 1000 {
        return Err(StatsError::TooFewSamples { got: live.len(), need: 1000 });
    }
    let mut medians = Vec::new();
    for i in start..ncp - 1 {
        let mut diffs: Vec<f64> = live
            .iter()
            .map(|&rep| {
                let a = alphas[i] * paths.value(rep, i) as f64;
                let b = alphas[i + 1] * paths.value(rep, i + 1) as f64;
                (b - a).abs()
            })
            .collect();
        medians.push(median(&mut diffs));
    }
    if medians.len() < 2 {
        return Err(StatsError::FewCheckpoints { got: ncp, need: 6 });
    }
    let ratio = medians.last().unwrap() / medians.first().unwrap();
    let trend_report = TestReport::evaluate(
        "martingale-fluctuation-decay",
        "trend",
        ratio,
        1.0,
        live.len() as u64,
        *paths.checkpoint_ns.last().unwrap(),
        format!("median |ΔM*| on the nonzero branch over the top half: {medians:?}"),
    );
    Ok(vec![mean_report, trend_report])
}
