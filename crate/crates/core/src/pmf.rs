//! Finite probability mass functions over integer support.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PmfError {
    #[error("support and probability lists differ in length ({support} vs {probs})")]
    LengthMismatch { support: usize, probs: usize },
    #[error("negative probability {0}")]
    NegativeProbability(f64),
    #[error("probabilities sum to {0}, not 1")]
    BadTotal(f64),
    #[error("support values must be strictly increasing")]
    UnsortedSupport,
}

/// Tolerated deviation of the total mass from 1 in floating-point mode.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// An exact finite law: sorted integer support with parallel probabilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pmf {
    support: Vec<i64>,
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(support: Vec<i64>, probs: Vec<f64>) -> Result<Self, PmfError> {
        if support.len() != probs.len() {
            return Err(PmfError::LengthMismatch {
                support: support.len(),
                probs: probs.len(),
            });
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PmfError::UnsortedSupport);
        }
        if let Some(&bad) = probs.iter().find(|&&p| !(p >= 0.0)) {
            return Err(PmfError::NegativeProbability(bad));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(PmfError::BadTotal(total));
        }
        Ok(Pmf { support, probs })
    }

    /// Law on `{0, 1, ..., probs.len() - 1}`.
    pub fn from_zero_based(probs: Vec<f64>) -> Result<Self, PmfError> {
        let support = (0..probs.len() as i64).collect();
        Pmf::new(support, probs)
    }

    pub fn support(&self) -> &[i64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn prob(&self, value: i64) -> f64 {
        match self.support.binary_search(&value) {
            Ok(i) => self.probs[i],
            Err(_) => 0.0,
        }
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn moment(&self, order: u32) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(&k, &p)| (k as f64).powi(order as i32) * p)
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(&k, &p)| (k as f64 - m).powi(2) * p)
            .sum()
    }

    /// `P(X <= value)`.
    pub fn cdf(&self, value: i64) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .take_while(|(&k, _)| k <= value)
            .map(|(_, &p)| p)
            .sum()
    }

    /// Total-variation distance `sup_A |P(A) - Q(A)| = 1/2 sum |p_k - q_k|`.
    pub fn total_variation(&self, other: &Pmf) -> f64 {
        let mut acc = 0.0;
        let mut i = 0;
        let mut j = 0;
        while i < self.len() || j < other.len() {
            if j >= other.len() || (i < self.len() && self.support[i] < other.support[j]) {
                acc += self.probs[i];
                i += 1;
            } else if i >= self.len() || other.support[j] < self.support[i] {
                acc += other.probs[j];
                j += 1;
            } else {
                acc += (self.probs[i] - other.probs[j]).abs();
                i += 1;
                j += 1;
            }
        }
        acc / 2.0
    }

    /// Largest absolute pointwise difference over the union of supports.
    pub fn max_abs_diff(&self, other: &Pmf) -> f64 {
        let lo = self.support.first().min(other.support.first());
        let hi = self.support.last().max(other.support.last());
        match (lo, hi) {
            (Some(&lo), Some(&hi)) => (lo..=hi)
                .map(|k| (self.prob(k) - other.prob(k)).abs())
                .fold(0.0, f64::max),
            _ => 0.0,
        }
    }
}

/// Empirical counts over integers, normalized into a [`Pmf`].
pub fn empirical_pmf(samples: impl IntoIterator<Item = i64>) -> Result<Pmf, PmfError> {
    use std::collections::BTreeMap;
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    let mut total = 0u64;
    for s in samples {
        *counts.entry(s).or_insert(0) += 1;
        total += 1;
    }
    let support: Vec<i64> = counts.keys().copied().collect();
    let probs: Vec<f64> = counts.values().map(|&c| c as f64 / total as f64).collect();
    Pmf::new(support, probs)
}
