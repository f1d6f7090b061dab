//! Elephant random walks with delays: simulation, exact computation and
//! statistical verification of the zero/nonzero step-counting processes.
//!
//! The model: a walk takes steps in {-1, 0, +1}. The first step is +1 with
//! probability `p`, -1 with probability `q` and 0 with probability `r`
//! (`p + q + r = 1`, all strictly inside (0, 1)). Afterwards the walker picks
//! a uniformly random index from its *memory* (which past steps it can recall)
//! and repeats that step with probability `p`, flips it with probability `q`,
//! or stays put with probability `r`. A remembered zero step always produces
//! another zero, so delays reinforce themselves.
//!
//! The quantities of interest are the counting processes `N_n` (zero steps
//! among the first `n`) and `N*_n = n - N_n` (nonzero steps), whose growth
//! depends dramatically on the memory kernel:
//!
//! * [`MemoryKernel::Full`]: `N*_n / n^{1-r}` converges a.s. and in L¹,
//!   driven by a martingale with Gamma-ratio scalers.
//! * [`MemoryKernel::FirstOnly`]: `N*_n` is a binomial walk on the branch
//!   where the first step is nonzero, and sticks at zero otherwise.
//! * [`MemoryKernel::LastOnly`]: the walk freezes at the first zero; `N*_n`
//!   converges a.s. to a geometric variable.
//! * [`MemoryKernel::FirstAndLast`]: a two-state chain on the nonzero branch
//!   with linear growth and a CLT.
//! * [`MemoryKernel::LastWindow`]: the nonzero steps die out geometrically
//!   fast.
//!
//! Module map: [`walk`] holds the model and single-path simulation, [`oracle`]
//! computes exact finite-`n` laws by dynamic programming, [`analytics`] the
//! closed forms (Gamma ratios, moment recursions, limit constants),
//! [`montecarlo`] deterministic parallel ensembles, [`stats`] goodness-of-fit
//! and convergence diagnostics, [`verify`] the end-to-end verification suites
//! and [`cli`] the command-line front end.

pub mod analytics;
pub mod cli;
pub mod montecarlo;
pub mod oracle;
pub mod pmf;
pub mod report;
pub mod rng;
pub mod stats;
pub mod verify;
pub mod walk;

pub use pmf::Pmf;
pub use walk::{MemoryKernel, ProbTriple, Step, WalkState};
