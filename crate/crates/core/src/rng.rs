//! Seeded, splittable random streams.
//!
//! A `RandomSource` is a ChaCha20 keystream keyed by `(seed, domain)` and
//! positioned on stream `stream_id`. ChaCha is counter based, so every
//! `(seed, domain, stream_id)` triple names an independent sequence and the
//! output is identical on every platform.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Domains separate the streams of independent consumers sharing a seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamDomain {
    General = 0,
    Protocol = 1,
    HiddenVariables = 2,
    Discard = 3,
    ModelFamily = 4,
}

#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    stream_id: u64,
    rng: ChaCha20Rng,
}

impl RandomSource {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self::with_domain(seed, StreamDomain::General, stream_id)
    }

    pub fn with_domain(seed: u64, domain: StreamDomain, stream_id: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Fair coin as an index 0 or 1.
    pub fn bit(&mut self) -> u8 {
        (self.rng.next_u64() >> 63) as u8
    }
}

/// Picks an index by inverse CDF over `probs` (in their given order) using
/// the uniform draw `u`.
///
/// Probabilities within `[-1e-12, 0)` are clamped to zero before the
/// distribution is renormalized.
pub(crate) fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut clamped = 0.0f64;
    let cleaned: Vec<f64> = probs
        .iter()
        .map(|&p| {
            if p < 0.0 {
                debug_assert!(p >= -1e-12, "probability {p} below clamp window");
                clamped = clamped.max(-p);
                0.0
            } else {
                p
            }
        })
        .collect();
    if clamped > 0.0 {
        log::debug!("clamped negative probability of magnitude {clamped:e}");
    }
    let total: f64 = cleaned.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, &p) in cleaned.iter().enumerate() {
        if p > 0.0 {
            last_nonzero = i;
        }
        acc += p;
        if target < acc {
            return i;
        }
    }
    last_nonzero
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_stream_reproduce() {
        let mut a = RandomSource::new(7, 3);
        let mut b = RandomSource::new(7, 3);
        for _ in 0..100 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
    }

    #[test]
    fn streams_and_domains_differ() {
        let first = |mut r: RandomSource| (0..4).map(|_| r.next_u64()).collect::<Vec<_>>();
        let base = first(RandomSource::new(7, 3));
        assert_ne!(base, first(RandomSource::new(7, 4)));
        assert_ne!(base, first(RandomSource::new(8, 3)));
        assert_ne!(
            base,
            first(RandomSource::with_domain(7, StreamDomain::Protocol, 3))
        );
    }

    #[test]
    fn frozen_first_draw() {
        // guards cross-platform bit stability of the stream construction
        let mut r = RandomSource::new(0, 0);
        let v = r.next_u64();
        let mut again = RandomSource::new(0, 0);
        assert_eq!(v, again.next_u64());
        assert_eq!(v, FROZEN_FIRST_U64);
    }

    const FROZEN_FIRST_U64: u64 = 10_393_729_187_455_219_830;

    #[test]
    fn inverse_cdf_order() {
        let p = [0.25, 0.25, 0.5];
        assert_eq!(sample_index(&p, 0.0), 0);
        assert_eq!(sample_index(&p, 0.2499), 0);
        assert_eq!(sample_index(&p, 0.25), 1);
        assert_eq!(sample_index(&p, 0.7), 2);
        assert_eq!(sample_index(&p, 0.999_999), 2);
        assert_eq!(sample_index(&[1.0, -1e-13], 0.999_999_999), 0);
        assert_eq!(sample_index(&[0.0, 1.0, 0.0], 0.0), 1);
    }
}
