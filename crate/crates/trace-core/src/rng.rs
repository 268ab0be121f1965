//! Deterministic seed derivation.
//!
//! Every random decision in the system draws from a stream derived by
//! hashing the run seed together with the decision's inputs, so a run
//! is a pure function of its configuration — no global RNG state.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::state::{AgentState, Trajectory};

/// splitmix64 finalizer; the usual constant-mix pipeline.
pub fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fold a word sequence into a seed.
pub fn mix(seed: u64, words: &[u64]) -> u64 {
    let mut acc = splitmix(seed ^ 0x7261_6365_5f68_6173);
    for &w in words {
        acc = splitmix(acc ^ w);
    }
    acc
}

pub fn mix_str(seed: u64, s: &str) -> u64 {
    let mut acc = splitmix(seed);
    for chunk in s.as_bytes().chunks(8) {
        let mut w = [0u8; 8];
        w[..chunk.len()].copy_from_slice(chunk);
        acc = splitmix(acc ^ u64::from_le_bytes(w));
    }
    splitmix(acc ^ s.len() as u64)
}

pub fn state_words(s: &AgentState) -> [u64; 4] {
    [
        s.x as i64 as u64,
        s.y as i64 as u64,
        s.heading.index() as u64,
        s.speed as u64,
    ]
}

pub fn mix_state(seed: u64, s: &AgentState) -> u64 {
    mix(seed, &state_words(s))
}

pub fn mix_trajectory(seed: u64, t: &Trajectory) -> u64 {
    let mut acc = splitmix(seed ^ t.start_time as u64);
    for s in &t.states {
        acc = mix(acc, &state_words(s));
    }
    acc
}

/// Uniform value in [0, 1) derived from a hash word.
pub fn unit_from_hash(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// A seeded stream for a named decision point.
pub fn stream(seed: u64, words: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, words))
}
