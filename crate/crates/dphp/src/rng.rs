//! Seeded random substreams.
//!
//! All randomness in a run flows from one root seed. Each component draws
//! from a named substream so that, e.g., changing the number of latent draws
//! never perturbs the noise added during privatization.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named substreams derived from the root seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Generator weight initialization.
    Init,
    /// Product-kernel dimension subsampling.
    Subsample,
    /// Gaussian-mechanism noise.
    Noise,
    /// Latent draws and generated-label sampling.
    Latent,
    /// Synthetic data generation and train/test splitting.
    Data,
    /// Frequency draws for random Fourier features.
    Frequencies,
    /// Anything evaluation-side (pair subsampling, subset sampling).
    Eval,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Init => 0x494e4954,
            Stream::Subsample => 0x53554253,
            Stream::Noise => 0x4e4f4953,
            Stream::Latent => 0x4c415445,
            Stream::Data => 0x44415441,
            Stream::Frequencies => 0x46524551,
            Stream::Eval => 0x4556414c,
        }
    }
}

/// Deterministic RNG for a `(root_seed, stream)` pair.
///
/// An optional `index` separates repeated uses of the same stream
/// (e.g. the subsample draw of epoch 3).
pub fn substream(root_seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mixed = splitmix64(root_seed ^ splitmix64(stream.tag() ^ splitmix64(index)));
    ChaCha8Rng::seed_from_u64(mixed)
}

/// SplitMix64 finalizer; spreads low-entropy seeds over the full state space.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// FNV-1a over bytes; used for spec fingerprints and config hashes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}
