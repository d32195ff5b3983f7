//! Seeded point-set generators on the unit cube.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::points::PointSet;

/// Digits scrambled per coordinate in Owen-scrambled Halton points.
const SCRAMBLE_DIGITS: usize = 32;

/// Bisection steps for the Beta(2, 5) inverse CDF.
const BETA_BISECTION_STEPS: usize = 30;

/// Extra points per quadrature node in [`landmark_mix`].
pub const LANDMARK_OVERSAMPLING: usize = 20;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Order-sensitive hash of a sequence of words.
pub fn hash_words(words: &[u64]) -> u64 {
    words.iter().fold(0x243f_6a88_85a3_08d3, |h, &w| splitmix(h ^ splitmix(w)))
}

/// A `(seed, stream)` pair naming a reproducible random sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeededGenerator {
    pub seed: u64,
    pub stream: u64,
}

impl SeededGenerator {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// A generator on a stream derived from this one and `tags`.
    pub fn derive(&self, tags: &[u64]) -> Self {
        let mut words = vec![self.stream];
        words.extend_from_slice(tags);
        Self { seed: self.seed, stream: hash_words(&words) }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    IidUniform,
    /// `{i/n : i = 1..n}`, one-dimensional only.
    Grid,
    /// Halton points with nested uniform digit scrambling, from index 0.
    HaltonOwen,
    /// Plain Halton points from index 1.
    Halton,
    /// Coordinatewise i.i.d. Beta(2, 5).
    Beta25,
}

pub fn generate(kind: SamplerKind, n: usize, d: usize, gen: SeededGenerator) -> Result<PointSet> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    let coords = match kind {
        SamplerKind::IidUniform => {
            let mut rng = gen.rng();
            (0..n * d).map(|_| rng.random::<f64>()).collect()
        }
        SamplerKind::Grid => {
            if d != 1 {
                return Err(Error::InvalidInput(format!("grid points are one-dimensional, got d = {d}")));
            }
            (1..=n).map(|i| i as f64 / n as f64).collect()
        }
        SamplerKind::Halton => {
            let bases = first_primes(d);
            let mut coords = Vec::with_capacity(n * d);
            for i in 1..=n as u64 {
                coords.extend(bases.iter().map(|&b| radical_inverse(i, b)));
            }
            coords
        }
        SamplerKind::HaltonOwen => {
            let bases = first_primes(d);
            let mut coords = Vec::with_capacity(n * d);
            for i in 0..n as u64 {
                for (j, &b) in bases.iter().enumerate() {
                    coords.push(owen_radical_inverse(i, b, hash_words(&[gen.seed, gen.stream, j as u64])));
                }
            }
            coords
        }
        SamplerKind::Beta25 => {
            let mut rng = gen.rng();
            (0..n * d).map(|_| beta25_quantile(rng.random::<f64>())).collect()
        }
    };
    PointSet::new(d, coords)
}

/// `H` followed by `20 n` i.i.d. Beta(2, 5)^⊗d points.
pub fn landmark_mix(h: &PointSet, n: usize, d: usize, gen: SeededGenerator) -> Result<PointSet> {
    if h.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: h.dim() });
    }
    h.concat(&generate(SamplerKind::Beta25, LANDMARK_OVERSAMPLING * n, d, gen)?)
}

pub fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count {
        if primes.iter().take_while(|&&p| p * p <= candidate).all(|&p| !candidate.is_multiple_of(p)) {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

/// Digit-reversal of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut scale = inv;
    let mut value = 0.0;
    while i > 0 {
        value += (i % b) as f64 * scale;
        i /= b;
        scale *= inv;
    }
    value
}

/// Radical inverse with each digit permuted by a permutation chosen from the
/// preceding digits, the coordinate key and the digit position.
fn owen_radical_inverse(mut i: u64, b: u64, key: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut scale = inv;
    let mut value = 0.0;
    let mut path = key;
    let mut perm: Vec<u64> = Vec::with_capacity(b as usize);
    for position in 0..SCRAMBLE_DIGITS as u64 {
        let digit = i % b;
        i /= b;
        let node = hash_words(&[path, position]);
        let scrambled = if b == 2 { digit ^ (splitmix(node) & 1) } else { permute(digit, b, node, &mut perm) };
        value += scrambled as f64 * scale;
        scale *= inv;
        path = hash_words(&[path, digit]);
    }
    value.min(1.0)
}

/// Image of `digit` under the Fisher–Yates permutation of `0..b` driven by `node`.
fn permute(digit: u64, b: u64, node: u64, perm: &mut Vec<u64>) -> u64 {
    perm.clear();
    perm.extend(0..b);
    let mut state = node;
    for j in (1..b as usize).rev() {
        state = splitmix(state);
        let k = (state % (j as u64 + 1)) as usize;
        perm.swap(j, k);
    }
    perm[digit as usize]
}

/// Beta(2, 5) distribution function `1 - (1-x)^6 - 6x(1-x)^5`.
pub fn beta25_cdf(x: f64) -> f64 {
    let y = 1.0 - x;
    let y5 = y * y * y * y * y;
    1.0 - y5 * y - 6.0 * x * y5
}

fn beta25_quantile(u: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..BETA_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if beta25_cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
