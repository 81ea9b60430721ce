//! Reproducible random substreams.
//!
//! A [`SeedStream`] is a `(seed, index)` pair. The seed keys a ChaCha8
//! generator and the index selects one of its 2^64 independent streams, so
//! every stream is a counter-based sequence that can be created anywhere
//! without coordination between workers.
//!
//! Derivation layout used by the estimators:
//!
//! * outer path `i` of a run with base stream `b`: `b.substream(i)`;
//! * inner estimates on that path: `b.substream(i).substream(key)`, where
//!   `key` is [`point_key`] of the evaluation point (or an explicit label);
//! * auxiliary passes (e.g. the mean of a claim) use `b.substream(TAG)` with
//!   the tags below, which sit far away from any realistic path index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::point_measure::Atom;
use crate::scalar::Real;

/// Label for the dedicated pass estimating the mean of a claim.
pub const MEAN_PASS: u64 = 0x4d45_414e_5041_5353;
/// Label for the sampled points of a perfect-hedge check.
pub const HEDGE_POINTS: u64 = 0x4845_4447_4550_5453;
/// Label for the inner draws of the conditional-expectation martingale.
pub const CONDITIONAL: u64 = 0x434f_4e44_4954_494f;

/// Seed plus stream index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedStream {
    pub seed: u64,
    pub index: u64,
}

impl SeedStream {
    pub fn new(seed: u64, index: u64) -> Self {
        Self { seed, index }
    }

    /// Child stream `k`. Distinct `k` give distinct indices with overwhelming
    /// probability; the parent index is never reproduced.
    pub fn substream(&self, k: u64) -> Self {
        Self {
            seed: self.seed,
            index: mix64(self.index ^ mix64(k.wrapping_add(0x9E37_79B9_7F4A_7C15))),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.index);
        rng
    }
}

/// Stable 64-bit key of an evaluation point `(s, j, z)`.
pub fn point_key<T: Real>(y: &Atom<T>) -> u64 {
    let mut h = mix64(y.time.as_f64().to_bits());
    h = mix64(h ^ (y.asset as u64).wrapping_mul(0xD134_2543_DE82_EF95));
    mix64(h ^ y.jump.as_f64().to_bits().rotate_left(17))
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
