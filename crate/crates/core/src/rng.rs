//! Deterministic random streams for parallel ensembles.
//!
//! Every replicate draws from its own ChaCha stream keyed by
//! `(master seed, replicate index)`. Streams are derived independently of
//! scheduling, so an ensemble is reproducible under any worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step; spreads low-entropy inputs over the whole word.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The random source for one replicate of an ensemble.
///
/// Counter-based: the stream is a pure function of `(master_seed, replicate)`,
/// so replicate `k` can be regenerated in isolation.
pub fn replicate_rng(master_seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut s = master_seed;
    let w0 = splitmix64(&mut s);
    let w1 = splitmix64(&mut s);
    let mut t = replicate ^ 0x6a09_e667_f3bc_c908;
    let w2 = splitmix64(&mut t);
    let w3 = splitmix64(&mut t);

    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&w0.to_le_bytes());
    seed[8..16].copy_from_slice(&w1.to_le_bytes());
    seed[16..24].copy_from_slice(&w2.to_le_bytes());
    seed[24..32].copy_from_slice(&w3.to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}
