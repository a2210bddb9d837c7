use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Identifies one replicate of a Monte Carlo experiment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub global: u64,
    pub replicate: u64,
}

impl SeedSpec {
    pub fn new(global: u64, replicate: u64) -> Self {
        Self { global, replicate }
    }

    /// A different global seed for an independent sub-experiment (one side
    /// length of a sweep, one block size...).
    pub fn derive(global: u64, salt: u64) -> u64 {
        // splitmix64 finalizer
        let mut z = global ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// 32-bit words of keystream reserved for each edge.
const WORDS_PER_EDGE: u128 = 8;

/// Counter-based source of per-edge randomness.
///
/// The ChaCha key comes from the global seed, the stream id is the replicate
/// id and the block counter is positioned at `edge * WORDS_PER_EDGE`, so the
/// draws for an edge do not depend on which other edges were sampled, in
/// what order, or on which thread.
#[derive(Clone, Debug)]
pub struct EdgeStreams {
    base: ChaCha8Rng,
}

impl EdgeStreams {
    pub fn new(seed: SeedSpec) -> Self {
        let mut base = ChaCha8Rng::seed_from_u64(seed.global);
        base.set_stream(seed.replicate);
        Self { base }
    }

    pub fn edge(&self, edge: usize) -> EdgeDraws {
        let mut rng = self.base.clone();
        rng.set_word_pos(edge as u128 * WORDS_PER_EDGE);
        EdgeDraws { rng, left: 4 }
    }
}

/// At most four uniform draws belonging to one edge.
pub struct EdgeDraws {
    rng: ChaCha8Rng,
    left: u8,
}

impl EdgeDraws {
    /// Uniform on `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        assert!(self.left > 0, "per-edge stream exhausted");
        self.left -= 1;
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
