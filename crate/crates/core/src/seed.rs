//! Deterministic random streams derived from a single root seed.
//!
//! Every random quantity in a run is drawn from a ChaCha8 stream whose seed is
//! `derive(root, path)`, where `path` names the consumer (for example
//! `[VERTICES, part]`). The split function folds each path element into the
//! running state with the SplitMix64 finalizer:
//!
//! ```text
//! state_0     = mix(root)
//! state_{k+1} = mix(state_k ^ mix(path[k] + 0x9E37_79B9_7F4A_7C15))
//! ```
//!
//! Streams for different paths are therefore independent of how many other
//! streams exist or in which order (or on which thread) they are consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for all sampling.
pub type Rng = ChaCha8Rng;

pub const VERTICES: u64 = 1;
pub const ROTATIONS: u64 = 2;
pub const PACKING: u64 = 3;
pub const CONFIG: u64 = 4;
pub const TRIALS: u64 = 5;
pub const PROBES: u64 = 6;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `root` along `path`.
pub fn derive(root: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(root), |state, &p| {
        mix(state ^ mix(p.wrapping_add(GOLDEN)))
    })
}

/// A fresh generator for the stream named by `path`.
pub fn stream(root: u64, path: &[u64]) -> Rng {
    Rng::seed_from_u64(derive(root, path))
}
