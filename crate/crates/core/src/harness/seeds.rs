//! Deterministic seed derivation.
//!
//! Every run draws from two independent substreams derived from one master
//! seed. The environment stream (problem trajectory and chunk sampling) is
//! keyed by (problem, run index) only, so all algorithm variants face
//! byte-identical environments within a run index — a paired comparison.
//! The algorithm stream additionally keys on the variant, and nothing the
//! algorithm does can perturb the benchmark's dynamics.

use crate::bench::ProblemId;
use crate::harness::VariantId;

const STREAM_ENV: u64 = 0x45;
const STREAM_ALG: u64 = 0xA1;

/// SplitMix64 finalizer; full-avalanche 64-bit mixing.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a tag sequence into the master seed, one mixing round per tag.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut h = splitmix64(master);
    for &tag in tags {
        h = splitmix64(h ^ tag);
    }
    h
}

/// The two substream seeds of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeeds {
    /// Environment stream: problem trajectory and chunk sampling.
    pub env: u64,
    /// Algorithm stream: surrogate training, population init, DE.
    pub alg: u64,
}

/// Seed of the environment stream shared by every variant of
/// (problem, run index).
pub fn env_stream_seed(master: u64, problem: ProblemId, run_index: usize) -> u64 {
    derive_seed(master, &[STREAM_ENV, problem.tag(), run_index as u64])
}

/// Both substream seeds for one (problem, variant, run index) cell.
pub fn run_seeds(master: u64, problem: ProblemId, variant: VariantId, run_index: usize) -> RunSeeds {
    RunSeeds {
        env: env_stream_seed(master, problem, run_index),
        alg: derive_seed(
            master,
            &[STREAM_ALG, problem.tag(), variant.tag(), run_index as u64],
        ),
    }
}
