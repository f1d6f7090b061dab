//! Deterministic parallel ensembles with streaming summaries.
//!
//! Replicates are partitioned into fixed blocks; blocks run in parallel and
//! are folded in block order, so the emitted numbers are bit-identical under
//! any worker count. Replicate `k` always draws from the stream derived from
//! `(seed, k)`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::rng::replicate_rng;
use crate::walk::{walk_checkpoints, Checkpoints, MemoryKernel, ProbTriple, WalkError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error("ensembles need at least one replicate")]
    NoReplicates,
    #[error("horizon {0} too large for stored paths")]
    HorizonStorage(u64),
}

/// Replicates per work unit; the merge tree is a fixed left fold over blocks.
const BLOCK: u64 = 1024;

/// What to run: kernel, parameters, horizon, replicate count, master seed and
/// the checkpoint grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub kernel: MemoryKernel,
    pub params: ProbTriple,
    pub horizon: u64,
    pub replicates: u64,
    pub seed: u64,
    pub checkpoints: Checkpoints,
    /// Keep the per-replicate nonzero counts at every checkpoint (needed by
    /// the distribution-level diagnostics).
    pub keep_paths: bool,
    /// Optional cap on total simulated steps. When the cap is hit the result
    /// carries the completed replicate count and an explicit `partial` flag;
    /// nothing is silently truncated.
    pub max_total_steps: Option<u64>,
    /// Coefficient `c` of the centered functional `(N*_n - c n I*_1)/sqrt(n)`.
    /// Defaults to the kernel's own centering when `None`.
    pub centering: Option<f64>,
}

impl EnsembleSpec {
    pub fn new(kernel: MemoryKernel, params: ProbTriple, horizon: u64, replicates: u64, seed: u64) -> Self {
        EnsembleSpec {
            kernel,
            params,
            horizon,
            replicates,
            seed,
            checkpoints: Checkpoints::powers_of_two(horizon),
            keep_paths: false,
            max_total_steps: None,
            centering: None,
        }
    }

    /// The CLT centering coefficient the kernel's limit statement uses.
    pub fn default_centering(kernel: MemoryKernel, r: f64) -> f64 {
        match kernel {
            MemoryKernel::FirstOnly => 1.0 - r,
            MemoryKernel::FirstAndLast => (1.0 - r) / (1.0 + r),
            _ => 0.0,
        }
    }

    fn centering_coeff(&self) -> f64 {
        self.centering
            .unwrap_or_else(|| Self::default_centering(self.kernel, self.params.r()))
    }
}

/// One-pass mean/variance accumulator with extrema, mergeable pairwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl Default for RunningStats {
    fn default() -> Self {
        RunningStats { count: 0, mean: 0.0, m2: 0.0, min: f64::INFINITY, max: f64::NEG_INFINITY }
    }
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let total = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / total as f64;
        self.m2 += other.m2 + delta * delta * (self.count as f64) * (other.count as f64) / total as f64;
        self.count = total;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }
}

/// Fixed-bin histogram of the centered functional: width 0.1 on [-6, 6] plus
/// overflow bins. Exact zeroes go to a dedicated atom bucket so point masses
/// are never smeared into a bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub zero_atom: u64,
    pub underflow: u64,
    pub overflow: u64,
    pub bins: Vec<u64>,
}

pub const HIST_LO: f64 = -6.0;
pub const HIST_HI: f64 = 6.0;
pub const HIST_BIN_WIDTH: f64 = 0.1;
pub const HIST_BINS: usize = 120;

impl Default for Histogram {
    fn default() -> Self {
        Histogram { zero_atom: 0, underflow: 0, overflow: 0, bins: vec![0; HIST_BINS] }
    }
}

impl Histogram {
    pub fn push(&mut self, x: f64) {
        if x == 0.0 {
            self.zero_atom += 1;
        } else if x < HIST_LO {
            self.underflow += 1;
        } else if x >= HIST_HI {
            self.overflow += 1;
        } else {
            let idx = ((x - HIST_LO) / HIST_BIN_WIDTH) as usize;
            self.bins[idx.min(HIST_BINS - 1)] += 1;
        }
    }

    pub fn merge(&mut self, other: &Histogram) {
        self.zero_atom += other.zero_atom;
        self.underflow += other.underflow;
        self.overflow += other.overflow;
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += b;
        }
    }

    pub fn total(&self) -> u64 {
        self.zero_atom + self.underflow + self.overflow + self.bins.iter().sum::<u64>()
    }
}

/// Streaming summary of one branch (or of all replicates) at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct BranchSummary {
    /// Raw nonzero-step counts.
    pub nonzeros: RunningStats,
    /// Histogram of `(N*_n - c n I*_1)/sqrt(n)`.
    pub clt_hist: Histogram,
}

impl BranchSummary {
    fn push(&mut self, nonzeros: f64, clt: f64) {
        self.nonzeros.push(nonzeros);
        self.clt_hist.push(clt);
    }

    fn merge(&mut self, other: &BranchSummary) {
        self.nonzeros.merge(&other.nonzeros);
        self.clt_hist.merge(&other.clt_hist);
    }

    pub fn count(&self) -> u64 {
        self.nonzeros.count()
    }

    /// Fraction of replicates whose centered functional is exactly zero.
    pub fn atom_fraction(&self) -> f64 {
        if self.count() == 0 {
            f64::NAN
        } else {
            self.clt_hist.zero_atom as f64 / self.count() as f64
        }
    }
}

/// Summary at one checkpoint, overall and split by the first-step indicator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointSummary {
    pub n: u64,
    pub all: BranchSummary,
    pub first_zero: BranchSummary,
    pub first_nonzero: BranchSummary,
}

impl CheckpointSummary {
    fn new(n: u64) -> Self {
        CheckpointSummary {
            n,
            all: BranchSummary::default(),
            first_zero: BranchSummary::default(),
            first_nonzero: BranchSummary::default(),
        }
    }

    fn merge(&mut self, other: &CheckpointSummary) {
        debug_assert_eq!(self.n, other.n);
        self.all.merge(&other.all);
        self.first_zero.merge(&other.first_zero);
        self.first_nonzero.merge(&other.first_nonzero);
    }
}

/// Full ensemble summary; `partial` marks a budget-limited run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub kernel: MemoryKernel,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub horizon: u64,
    pub requested_replicates: u64,
    pub completed_replicates: u64,
    pub partial: bool,
    pub seed: u64,
    pub centering: f64,
    pub checkpoints: Vec<CheckpointSummary>,
}

impl EnsembleSummary {
    /// Branch sub-summaries per checkpoint: `(I*_1 = 0, I*_1 = 1)`.
    pub fn branch_split(&self) -> (Vec<(u64, &BranchSummary)>, Vec<(u64, &BranchSummary)>) {
        let zero = self.checkpoints.iter().map(|c| (c.n, &c.first_zero)).collect();
        let nonzero = self.checkpoints.iter().map(|c| (c.n, &c.first_nonzero)).collect();
        (zero, nonzero)
    }

    pub fn final_checkpoint(&self) -> &CheckpointSummary {
        self.checkpoints.last().expect("grids are nonempty")
    }
}

/// Per-replicate nonzero counts at every checkpoint (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct PathMatrix {
    pub checkpoint_ns: Vec<u64>,
    pub replicates: u64,
    pub first_nonzero: Vec<bool>,
    nonzeros: Vec<u32>,
}

impl PathMatrix {
    pub fn value(&self, replicate: u64, checkpoint: usize) -> u32 {
        self.nonzeros[replicate as usize * self.checkpoint_ns.len() + checkpoint]
    }

    pub fn column(&self, checkpoint: usize) -> impl Iterator<Item = u32> + '_ {
        let width = self.checkpoint_ns.len();
        self.nonzeros[checkpoint..].iter().step_by(width).copied()
    }

    pub fn checkpoint_index(&self, n: u64) -> Option<usize> {
        self.checkpoint_ns.iter().position(|&c| c == n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub summary: EnsembleSummary,
    pub paths: Option<PathMatrix>,
}

struct BlockOutput {
    summaries: Vec<CheckpointSummary>,
    first_nonzero: Vec<bool>,
    nonzeros: Vec<u32>,
}

/// Runs the ensemble. Deterministic in the spec alone, including under any
/// degree of parallelism.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<EnsembleResult, McError> {
    if spec.replicates == 0 {
        return Err(McError::NoReplicates);
    }
    if spec.horizon == 0 {
        return Err(McError::Walk(WalkError::EmptyHorizon));
    }
    if spec.keep_paths && spec.horizon > u32::MAX as u64 {
        return Err(McError::HorizonStorage(spec.horizon));
    }
    spec.kernel.validate().map_err(McError::Walk)?;

    let completed = match spec.max_total_steps {
        Some(budget) => (budget / spec.horizon).min(spec.replicates),
        None => spec.replicates,
    };
    let centering = spec.centering_coeff();
    let grid = spec.checkpoints.as_slice().to_vec();
    let width = grid.len();

    let blocks = completed.div_ceil(BLOCK).max(1);
    let outputs: Result<Vec<BlockOutput>, McError> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = ((b + 1) * BLOCK).min(completed);
            let mut summaries: Vec<CheckpointSummary> =
                grid.iter().map(|&n| CheckpointSummary::new(n)).collect();
            let mut first_flags = Vec::new();
            let mut values = Vec::new();
            if spec.keep_paths {
                first_flags.reserve((hi - lo) as usize);
                values.reserve((hi - lo) as usize * width);
            }
            let mut row = vec![0u32; width];
            for k in lo..hi {
                let mut rng = replicate_rng(spec.seed, k);
                walk_checkpoints(
                    spec.kernel,
                    spec.params,
                    spec.horizon,
                    &mut rng,
                    &spec.checkpoints,
                    |i, state| {
                        row[i] = state.nonzeros() as u32;
                    },
                )
                .map_err(McError::Walk)?;
                // The branch indicator is the first step's indicator. When the
                // grid starts at 1 it is already in row[0]; otherwise replay
                // the first draw of the same stream.
                let first_nonzero = if grid[0] == 1 {
                    row[0] > 0
                } else {
                    let mut probe = replicate_rng(spec.seed, k);
                    !crate::walk::first_step(spec.params, &mut probe).is_zero()
                };
                for (i, &n) in grid.iter().enumerate() {
                    let nstar = row[i] as f64;
                    let clt = (nstar
                        - centering * n as f64 * (first_nonzero as u8 as f64))
                        / (n as f64).sqrt();
                    let cp = &mut summaries[i];
                    cp.all.push(nstar, clt);
                    if first_nonzero {
                        cp.first_nonzero.push(nstar, clt);
                    } else {
                        cp.first_zero.push(nstar, clt);
                    }
                }
                if spec.keep_paths {
                    first_flags.push(first_nonzero);
                    values.extend_from_slice(&row);
                }
            }
            Ok(BlockOutput { summaries, first_nonzero: first_flags, nonzeros: values })
        })
        .collect();
    let outputs = outputs?;

    let mut merged: Vec<CheckpointSummary> = grid.iter().map(|&n| CheckpointSummary::new(n)).collect();
    let mut first_flags = Vec::new();
    let mut values = Vec::new();
    for block in &outputs {
        for (acc, part) in merged.iter_mut().zip(&block.summaries) {
            acc.merge(part);
        }
        if spec.keep_paths {
            first_flags.extend_from_slice(&block.first_nonzero);
            values.extend_from_slice(&block.nonzeros);
        }
    }

    let summary = EnsembleSummary {
        kernel: spec.kernel,
        p: spec.params.p(),
        q: spec.params.q(),
        r: spec.params.r(),
        horizon: spec.horizon,
        requested_replicates: spec.replicates,
        completed_replicates: completed,
        partial: completed < spec.replicates,
        seed: spec.seed,
        centering,
        checkpoints: merged,
    };
    let paths = spec.keep_paths.then(|| PathMatrix {
        checkpoint_ns: grid,
        replicates: completed,
        first_nonzero: first_flags,
        nonzeros: values,
    });
    Ok(EnsembleResult { summary, paths })
}
