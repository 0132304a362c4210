//! Keyed random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream whose key is
//! derived from a user seed and a tuple of integer tags (order pair, chunk
//! index, replica index, ...). The same tags always produce the same stream,
//! so results do not depend on how work is split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Point, Region, MAX_DIM};

pub type Stream = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with tags into a single 64-bit value.
pub fn mix(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |h, &t| splitmix64(h ^ splitmix64(t.wrapping_add(0x632B_E59B_D9B4_E019))))
}

/// The stream keyed by `(seed, tags)`.
pub fn stream(seed: u64, tags: &[u64]) -> Stream {
    let mut key = [0u8; 32];
    let mut h = mix(seed, tags);
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&h.to_le_bytes());
        h = splitmix64(h);
    }
    ChaCha8Rng::from_seed(key)
}

/// Uniform point in `region`.
pub fn uniform_point(rng: &mut impl Rng, region: &Region) -> Point {
    let mut u = [0.0; MAX_DIM];
    for ui in u.iter_mut().take(region.dim()) {
        *ui = rng.random::<f64>();
    }
    region.at_unit(&u)
}

/// Exponential variate with the given rate.
pub fn exponential(rng: &mut impl Rng, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// Poisson variate (inversion for small means, normal-free splitting for
/// large ones).
pub fn poisson(rng: &mut impl Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    if mean > 30.0 {
        let half = mean / 2.0;
        return poisson(rng, half) + poisson(rng, mean - half);
    }
    let limit = (-mean).exp();
    let mut k = 0;
    let mut p: f64 = rng.random();
    while p > limit {
        k += 1;
        p *= rng.random::<f64>();
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn same_tags_same_stream() {
        let a: Vec<u64> = (0..4).map({
            let mut r = stream(7, &[1, 2]);
            move |_| r.next_u64()
        }).collect();
        let b: Vec<u64> = (0..4).map({
            let mut r = stream(7, &[1, 2]);
            move |_| r.next_u64()
        }).collect();
        assert_eq!(a, b);
        let mut c = stream(7, &[2, 1]);
        assert_ne!(a[0], c.next_u64());
    }

    #[test]
    fn poisson_mean() {
        let mut r = stream(1, &[]);
        let n = 20_000;
        for mean in [0.5, 4.0, 75.0] {
            let s: usize = (0..n).map(|_| poisson(&mut r, mean)).sum();
            let avg = s as f64 / n as f64;
            assert!((avg - mean).abs() < 5.0 * (mean / n as f64).sqrt(), "{mean} {avg}");
        }
    }
}
