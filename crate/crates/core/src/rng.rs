//! Splittable, counter-based randomness.
//!
//! A [`Stream`] is a 64-bit key. Child streams are derived by mixing a label
//! into the key, so every consumer gets its own reproducible substream no
//! matter in which order work is scheduled. Per-entry coins are a pure
//! function of `(key, i, j)`, which makes sampling a submatrix agree exactly
//! with restricting a sample of the whole matrix.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Stream {
    key: u64,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream { key: mix(seed ^ 0x6D63_5F73_7472_6561) }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Child stream identified by `label`.
    pub fn split(&self, label: u64) -> Stream {
        Stream { key: mix(self.key ^ mix(label.wrapping_add(0x5851_F42D_4C95_7F2D))) }
    }

    /// Child stream identified by a string label.
    pub fn named(&self, label: &str) -> Stream {
        let mut h: u64 = 0xCBF2_9CE4_8422_2325;
        for b in label.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01B3);
        }
        self.split(h)
    }

    /// Sequential generator seeded from this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key)
    }

    /// Uniform draw in `[0, 1)` attached to matrix position `(i, j)`.
    pub fn uniform_at(&self, i: usize, j: usize) -> f64 {
        let h = mix(self.key ^ mix((i as u64).wrapping_mul(0x9E37_79B9) ^ mix(j as u64)));
        (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Bernoulli coin with success probability `p` attached to `(i, j)`.
    pub fn coin_at(&self, i: usize, j: usize, p: f64) -> bool {
        p >= 1.0 || self.uniform_at(i, j) < p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_are_distinct_and_reproducible() {
        let s = Stream::new(7);
        assert_eq!(s.split(1), Stream::new(7).split(1));
        assert_ne!(s.split(1), s.split(2));
        assert_ne!(s.named("a"), s.named("b"));
    }

    #[test]
    fn coin_frequency_matches_probability() {
        let s = Stream::new(3);
        let hits = (0..200)
            .flat_map(|i| (0..200).map(move |j| (i, j)))
            .filter(|&(i, j)| s.coin_at(i, j, 0.3))
            .count();
        let frac = hits as f64 / 40_000.0;
        assert!((frac - 0.3).abs() < 0.01, "{frac}");
    }
}
