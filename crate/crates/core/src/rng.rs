//! Deterministic random streams.
//!
//! Every stochastic stage draws from a ChaCha8 stream keyed by the user seed
//! and a stage tag, with the per-run index selecting the ChaCha stream id.
//! Results therefore do not depend on thread count or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stage tags keep different consumers of the same seed decorrelated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stage {
    Emission = 0x01,
    Thinning = 0x02,
    Jitter = 0x03,
    Bunching = 0x04,
    Split = 0x05,
    Franson = 0x06,
    Bootstrap = 0x07,
    MultiStart = 0x08,
    Synthetic = 0x09,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Substream `index` of `stage` under `seed`.
pub fn substream(seed: u64, stage: Stage, index: u64) -> StreamRng {
    let key = splitmix64(seed ^ splitmix64(stage as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// Derive a child seed, for handing a seed to a nested stage.
pub fn child_seed(seed: u64, stage: Stage, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ (stage as u64).rotate_left(17)) ^ index)
}
