//! Counter-based random streams.
//!
//! A stream is identified by `(seed, stream id)`; the generator for draw
//! number `k` is a ChaCha8 keystream positioned at block `k << 32`, so the
//! samples used at iteration `k` depend only on `(seed, stream, k)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};

/// Substream ids used by the optimizers.
pub mod streams {
    pub const BATCH: u64 = 1;
    pub const REFRESH: u64 = 2;
    pub const SINGLE: u64 = 3;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    stream: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream.
    pub fn substream(&self, id: u64) -> Self {
        Self {
            seed: self.seed,
            stream: splitmix64(self.stream ^ splitmix64(id.wrapping_add(0x5851_f42d_4c95_7f2d))),
        }
    }

    /// Generator for draw number `counter` of this stream.
    pub fn at(&self, counter: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(u128::from(counter) << 32);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Row ids drawn i.i.d. uniformly with replacement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub ids: Vec<usize>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

pub fn sample_batch<R: Rng + ?Sized>(
    rng: &mut R,
    n_samples: usize,
    batch_size: usize,
) -> Result<Batch> {
    if batch_size == 0 {
        return Err(invalid("batch size must be at least 1"));
    }
    if n_samples == 0 {
        return Err(invalid("cannot sample from an empty dataset"));
    }
    let ids = (0..batch_size)
        .map(|_| rng.random_range(0..n_samples))
        .collect();
    Ok(Batch { ids })
}

/// Bernoulli(`p`) coin.
pub fn coin<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row_always_drawn() {
        let s = RngStream::new(7);
        let b = sample_batch(&mut s.at(0), 1, 3).unwrap();
        assert_eq!(b.ids, vec![0, 0, 0]);
    }

    #[test]
    fn same_seed_same_batch() {
        let s = RngStream::new(42).substream(streams::BATCH);
        let a = sample_batch(&mut s.at(5), 100, 10).unwrap();
        let b = sample_batch(
            &mut RngStream::new(42).substream(streams::BATCH).at(5),
            100,
            10,
        )
        .unwrap();
        assert_eq!(a, b);
        let c = sample_batch(&mut s.at(6), 100, 10).unwrap();
        assert_ne!(a, c);
        let d = sample_batch(
            &mut RngStream::new(42).substream(streams::REFRESH).at(5),
            100,
            10,
        )
        .unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn zero_batch_is_invalid() {
        assert!(sample_batch(&mut RngStream::new(1).at(0), 10, 0).is_err());
        assert!(sample_batch(&mut RngStream::new(1).at(0), 0, 3).is_err());
    }

    #[test]
    fn frequencies_are_uniform() {
        let n = 100usize;
        let b = 100_000usize;
        let batch = sample_batch(&mut RngStream::new(2024).at(0), n, b).unwrap();
        let mut counts = vec![0usize; n];
        for &id in &batch.ids {
            counts[id] += 1;
        }
        let p = 1.0 / n as f64;
        let mean = b as f64 * p;
        let sd = (b as f64 * p * (1.0 - p)).sqrt();
        for (id, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - mean).abs() <= 3.0 * sd,
                "id {id}: count {c}, expected {mean} ± {}",
                3.0 * sd
            );
        }
        // Chi-square with 99 dof; 99.9% quantile is about 148.2.
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - mean).powi(2) / mean)
            .sum();
        assert!(chi2 < 148.2, "chi-square statistic {chi2}");
    }

    #[test]
    fn coin_rate() {
        let s = RngStream::new(3);
        let hits = (0..20_000).filter(|&k| coin(&mut s.at(k), 0.1)).count();
        let rate = hits as f64 / 20_000.0;
        assert!((rate - 0.1).abs() < 0.01, "rate {rate}");
    }
}
