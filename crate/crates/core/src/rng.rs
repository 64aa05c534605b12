//! Counter-based splittable randomness.
//!
//! Every stream is addressed by `(master_seed, stream_index)`. The master
//! seed keys a ChaCha12 generator and the stream index selects one of its
//! 2^64 independent counter streams, so a stream is fully determined by its
//! address and never depends on how many other streams exist or in which
//! order they are consumed. This is what makes trial-level parallelism
//! bit-reproducible: worker threads only ever touch streams they derived
//! themselves.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

/// One independent random stream, addressed by `(master_seed, stream_index)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha12Rng,
}

/// Derive the stream addressed by `(master_seed, index)`.
///
/// Child state is the ChaCha12 keystream keyed by `master_seed` on counter
/// stream `index`; identical addresses always yield identical sequences.
pub fn derive_stream(master_seed: u64, index: u64) -> RngStream {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    RngStream {
        master_seed,
        stream_index: index,
        rng,
    }
}

impl RngStream {
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Derive a child stream. Children of distinct parents are distinct as
    /// long as the parent indices were allocated with disjoint `child` tags
    /// (the harness shifts trial indices left to make room for tags).
    pub fn substream(&self, child: u64) -> RngStream {
        derive_stream(
            self.master_seed,
            self.stream_index
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(child),
        )
    }

    /// One standard normal draw.
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        // 53 random mantissa bits.
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}
