//! The delayed elephant random walk: step law, memory kernels, sufficient
//! statistics and single-path simulation.

use std::collections::VecDeque;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::replicate_rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("probabilities must be strictly inside (0, 1): p={p}, q={q}, r={r}")]
    ProbabilityRange { p: f64, q: f64, r: f64 },
    #[error("probabilities must sum to 1 (got p+q+r = {sum})")]
    ProbabilitySum { sum: f64 },
    #[error("last-window kernel needs a window length of at least 1")]
    EmptyWindow,
    #[error("memory statistic inconsistent with kernel: {0}")]
    CorruptState(String),
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("checkpoint {0} outside [1, horizon]")]
    CheckpointRange(u64),
}

/// One walk increment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Step {
    Minus,
    Zero,
    Plus,
}

impl Step {
    pub fn signum(self) -> i64 {
        match self {
            Step::Minus => -1,
            Step::Zero => 0,
            Step::Plus => 1,
        }
    }

    pub fn is_zero(self) -> bool {
        matches!(self, Step::Zero)
    }

    pub fn from_signum(v: i64) -> Option<Step> {
        match v {
            -1 => Some(Step::Minus),
            0 => Some(Step::Zero),
            1 => Some(Step::Plus),
            _ => None,
        }
    }
}

/// The step-choice law `(p, q, r)`: repeat, flip, or stay put.
///
/// All three probabilities are required to be strictly inside `(0, 1)`;
/// the degenerate boundary cases are rejected at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbTriple {
    p: f64,
    q: f64,
    r: f64,
}

impl ProbTriple {
    /// Absolute tolerance on `p + q + r = 1`.
    pub const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(p: f64, q: f64, r: f64) -> Result<Self, WalkError> {
        let in_range = |x: f64| x.is_finite() && x > 0.0 && x < 1.0;
        if !(in_range(p) && in_range(q) && in_range(r)) {
            return Err(WalkError::ProbabilityRange { p, q, r });
        }
        let sum = p + q + r;
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(WalkError::ProbabilitySum { sum });
        }
        Ok(ProbTriple { p, q, r })
    }

    /// `p = q = (1 - r) / 2`.
    pub fn symmetric(r: f64) -> Result<Self, WalkError> {
        let half = (1.0 - r) / 2.0;
        Self::new(half, half, r)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Law of the first step: `+1` w.p. `p`, `-1` w.p. `q`, `0` w.p. `r`.
    pub fn first_step_law(&self) -> StepLaw {
        StepLaw {
            minus: self.q,
            zero: self.r,
            plus: self.p,
        }
    }
}

/// A probability mass function over the three step values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepLaw {
    pub minus: f64,
    pub zero: f64,
    pub plus: f64,
}

impl StepLaw {
    pub fn prob(&self, step: Step) -> f64 {
        match step {
            Step::Minus => self.minus,
            Step::Zero => self.zero,
            Step::Plus => self.plus,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Step {
        let u: f64 = rng.random();
        if u < self.plus {
            Step::Plus
        } else if u < self.plus + self.minus {
            Step::Minus
        } else {
            Step::Zero
        }
    }
}

/// Which past step indices the walker can sample from at time `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MemoryKernel {
    /// Every step so far: `{1, ..., n}`.
    Full,
    /// The first step only: `{1}`.
    FirstOnly,
    /// The most recent step only: `{n}`.
    LastOnly,
    /// First and most recent: `{1, n}`.
    FirstAndLast,
    /// The last `m` steps: `{n-m+1, ..., n}` (all steps while `n < m`).
    LastWindow(usize),
}

impl MemoryKernel {
    pub fn validate(self) -> Result<(), WalkError> {
        match self {
            MemoryKernel::LastWindow(0) => Err(WalkError::EmptyWindow),
            _ => Ok(()),
        }
    }

    /// Number of remembered indices at time `n >= 1`.
    pub fn memory_size(self, n: u64) -> u64 {
        match self {
            MemoryKernel::Full => n,
            MemoryKernel::FirstOnly | MemoryKernel::LastOnly => 1,
            MemoryKernel::FirstAndLast => {
                if n == 1 {
                    1
                } else {
                    2
                }
            }
            MemoryKernel::LastWindow(m) => n.min(m as u64),
        }
    }

    /// Stable text form used by the CLI and CSV output.
    pub fn label(self) -> String {
        match self {
            MemoryKernel::Full => "full".into(),
            MemoryKernel::FirstOnly => "first".into(),
            MemoryKernel::LastOnly => "last".into(),
            MemoryKernel::FirstAndLast => "first-last".into(),
            MemoryKernel::LastWindow(m) => format!("window:{m}"),
        }
    }

    /// Parses [`label`](Self::label) forms: `full`, `first`, `last`,
    /// `first-last`, `window:<m>`.
    pub fn parse(text: &str) -> Option<MemoryKernel> {
        match text {
            "full" => Some(MemoryKernel::Full),
            "first" => Some(MemoryKernel::FirstOnly),
            "last" => Some(MemoryKernel::LastOnly),
            "first-last" => Some(MemoryKernel::FirstAndLast),
            _ => {
                let m = text.strip_prefix("window:")?.parse::<usize>().ok()?;
                if m == 0 {
                    None
                } else {
                    Some(MemoryKernel::LastWindow(m))
                }
            }
        }
    }
}

impl fmt::Display for MemoryKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Kernel-specific sufficient statistic of the remembered past.
#[derive(Debug, Clone, PartialEq)]
pub enum MemoryStat {
    /// `(N*_n, S_n)`: the count of remembered nonzero steps and their signed
    /// sum determine the next-step law when everything is remembered.
    Full { nonzeros: u64, signed_sum: i64 },
    FirstOnly { first: Step },
    LastOnly { last: Step },
    FirstAndLast { first: Step, last: Step },
    LastWindow { window: VecDeque<Step>, cap: usize },
}

/// Walk state after `n` steps: counters plus the memory statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    n: u64,
    position: i64,
    zeros: u64,
    nonzeros: u64,
    memory: MemoryStat,
}

impl WalkState {
    /// State after the first step.
    pub fn from_first_step(kernel: MemoryKernel, first: Step) -> Result<Self, WalkError> {
        kernel.validate()?;
        let memory = match kernel {
            MemoryKernel::Full => MemoryStat::Full {
                nonzeros: (!first.is_zero()) as u64,
                signed_sum: first.signum(),
            },
            MemoryKernel::FirstOnly => MemoryStat::FirstOnly { first },
            MemoryKernel::LastOnly => MemoryStat::LastOnly { last: first },
            MemoryKernel::FirstAndLast => MemoryStat::FirstAndLast { first, last: first },
            MemoryKernel::LastWindow(m) => {
                let mut window = VecDeque::with_capacity(m.min(64));
                window.push_back(first);
                MemoryStat::LastWindow { window, cap: m }
            }
        };
        Ok(WalkState {
            n: 1,
            position: first.signum(),
            zeros: first.is_zero() as u64,
            nonzeros: (!first.is_zero()) as u64,
            memory,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn position(&self) -> i64 {
        self.position
    }

    pub fn zeros(&self) -> u64 {
        self.zeros
    }

    pub fn nonzeros(&self) -> u64 {
        self.nonzeros
    }

    pub fn memory(&self) -> &MemoryStat {
        &self.memory
    }

    /// `(M, c, sigma)`: remembered count, nonzero remembered count and signed
    /// sum of remembered steps. Validates that the statistic is consistent
    /// with the kernel.
    pub fn memory_counts(&self, kernel: MemoryKernel) -> Result<(u64, u64, i64), WalkError> {
        let (m, c, sigma) = match (&self.memory, kernel) {
            (MemoryStat::Full { nonzeros, signed_sum }, MemoryKernel::Full) => {
                (self.n, *nonzeros, *signed_sum)
            }
            (MemoryStat::FirstOnly { first }, MemoryKernel::FirstOnly) => {
                (1, (!first.is_zero()) as u64, first.signum())
            }
            (MemoryStat::LastOnly { last }, MemoryKernel::LastOnly) => {
                (1, (!last.is_zero()) as u64, last.signum())
            }
            (MemoryStat::FirstAndLast { first, last }, MemoryKernel::FirstAndLast) => {
                if self.n == 1 {
                    (1, (!first.is_zero()) as u64, first.signum())
                } else {
                    (
                        2,
                        (!first.is_zero()) as u64 + (!last.is_zero()) as u64,
                        first.signum() + last.signum(),
                    )
                }
            }
            (MemoryStat::LastWindow { window, cap }, MemoryKernel::LastWindow(m))
                if *cap == m =>
            {
                let c = window.iter().filter(|s| !s.is_zero()).count() as u64;
                let sigma = window.iter().map(|s| s.signum()).sum();
                (window.len() as u64, c, sigma)
            }
            _ => {
                return Err(WalkError::CorruptState(format!(
                    "statistic {:?} does not belong to kernel {kernel}",
                    self.memory
                )))
            }
        };
        if c > m || sigma.unsigned_abs() > c {
            return Err(WalkError::CorruptState(format!(
                "counts out of range: remembered={m}, nonzero={c}, signed sum={sigma}"
            )));
        }
        Ok((m, c, sigma))
    }

    /// Appends a step, updating counters and the memory statistic.
    pub fn advance(&mut self, step: Step, kernel: MemoryKernel) -> Result<(), WalkError> {
        // cheap integrity gate; also rejects kernel/statistic mismatches
        self.memory_counts(kernel)?;
        self.n += 1;
        self.position += step.signum();
        if step.is_zero() {
            self.zeros += 1;
        } else {
            self.nonzeros += 1;
        }
        match &mut self.memory {
            MemoryStat::Full { nonzeros, signed_sum } => {
                *nonzeros += (!step.is_zero()) as u64;
                *signed_sum += step.signum();
            }
            MemoryStat::FirstOnly { .. } => {}
            MemoryStat::LastOnly { last } => *last = step,
            MemoryStat::FirstAndLast { last, .. } => *last = step,
            MemoryStat::LastWindow { window, cap } => {
                window.push_back(step);
                if window.len() > *cap {
                    window.pop_front();
                }
            }
        }
        Ok(())
    }
}

/// First step of the walk: `0` w.p. `r`, `+1` w.p. `p`, `-1` w.p. `q`.
pub fn first_step<R: Rng + ?Sized>(params: ProbTriple, rng: &mut R) -> Step {
    params.first_step_law().sample(rng)
}

/// Law of the next step given the current state.
///
/// With `M` remembered steps of which `c` are nonzero with signed sum
/// `sigma`, picking a remembered index uniformly gives
///
/// ```text
/// P(next = 0)  = (M - c)/M + r c/M
/// P(next = +1) = p (c + sigma)/(2M) + q (c - sigma)/(2M)
/// P(next = -1) = q (c + sigma)/(2M) + p (c - sigma)/(2M)
/// ```
///
/// (a remembered zero repeats as a zero regardless of the coin).
pub fn step_distribution(
    state: &WalkState,
    kernel: MemoryKernel,
    params: ProbTriple,
) -> Result<StepLaw, WalkError> {
    let (m, c, sigma) = state.memory_counts(kernel)?;
    Ok(law_from_counts(m, c, sigma, params))
}

/// The next-step law given the remembered counts directly: `m` remembered
/// steps, `c` of them nonzero, signed sum `sigma`. `step_distribution` is
/// this law evaluated on the maintained sufficient statistic; recomputing
/// the counts from a full history must give the identical result.
pub fn law_from_counts(m: u64, c: u64, sigma: i64, params: ProbTriple) -> StepLaw {
    debug_assert!(m >= 1 && c <= m && sigma.unsigned_abs() <= c);
    let plus_mem = (c as i64 + sigma) as f64;
    let minus_mem = (c as i64 - sigma) as f64;
    let zero_mem = (m - c) as f64;
    let m = m as f64;
    let two_m = 2.0 * m;
    StepLaw {
        plus: params.p * plus_mem / two_m + params.q * minus_mem / two_m,
        minus: params.q * plus_mem / two_m + params.p * minus_mem / two_m,
        zero: zero_mem / m + params.r * c as f64 / m,
    }
}

/// Snapshot of the counters at a checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrajectoryPoint {
    pub n: u64,
    pub position: i64,
    pub zeros: u64,
    pub nonzeros: u64,
}

/// A sorted, deduplicated set of observation times inside `[1, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checkpoints(Vec<u64>);

impl Checkpoints {
    /// `{1, 2, 4, ...} ∪ {horizon}`: the default geometric grid.
    pub fn powers_of_two(horizon: u64) -> Self {
        let mut points = Vec::new();
        let mut p = 1u64;
        while p <= horizon {
            points.push(p);
            match p.checked_mul(2) {
                Some(next) => p = next,
                None => break,
            }
        }
        if *points.last().unwrap_or(&0) != horizon {
            points.push(horizon);
        }
        Checkpoints(points)
    }

    /// Every step `1..=horizon`.
    pub fn dense(horizon: u64) -> Self {
        Checkpoints((1..=horizon).collect())
    }

    pub fn explicit(mut points: Vec<u64>, horizon: u64) -> Result<Self, WalkError> {
        points.sort_unstable();
        points.dedup();
        for &p in &points {
            if p == 0 || p > horizon {
                return Err(WalkError::CheckpointRange(p));
            }
        }
        Ok(Checkpoints(points))
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Drives one walk to `horizon`, invoking `observe` at every checkpoint.
/// The checkpoint slice must be sorted; `observe` receives the checkpoint
/// index and the state.
pub(crate) fn walk_checkpoints<R: Rng + ?Sized>(
    kernel: MemoryKernel,
    params: ProbTriple,
    horizon: u64,
    rng: &mut R,
    checkpoints: &Checkpoints,
    mut observe: impl FnMut(usize, &WalkState),
) -> Result<(), WalkError> {
    if horizon == 0 {
        return Err(WalkError::EmptyHorizon);
    }
    kernel.validate()?;
    let grid = checkpoints.as_slice();
    let mut next_cp = 0usize;
    let mut state = WalkState::from_first_step(kernel, first_step(params, rng))?;
    loop {
        while next_cp < grid.len() && grid[next_cp] == state.n {
            observe(next_cp, &state);
            next_cp += 1;
        }
        if state.n == horizon {
            break;
        }
        let law = step_distribution(&state, kernel, params)?;
        state.advance(law.sample(rng), kernel)?;
    }
    Ok(())
}

/// Simulates a single path, returning counter snapshots at the checkpoints.
///
/// Deterministic in `(kernel, params, horizon, seed, checkpoints)`; the path
/// uses the same stream as replicate 0 of an ensemble with this seed.
pub fn simulate_path(
    kernel: MemoryKernel,
    params: ProbTriple,
    horizon: u64,
    seed: u64,
    checkpoints: &Checkpoints,
) -> Result<Vec<TrajectoryPoint>, WalkError> {
    let mut rng = replicate_rng(seed, 0);
    let mut out = Vec::with_capacity(checkpoints.len());
    walk_checkpoints(kernel, params, horizon, &mut rng, checkpoints, |_, state| {
        out.push(TrajectoryPoint {
            n: state.n(),
            position: state.position(),
            zeros: state.zeros(),
            nonzeros: state.nonzeros(),
        });
    })?;
    Ok(out)
}
