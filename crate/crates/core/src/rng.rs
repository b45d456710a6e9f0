//! Deterministic random-number plumbing.
//!
//! All randomness flows from one master seed through named substreams
//! (per vehicle, per household, per building), so parallelism and stage
//! ordering cannot perturb results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the RNG for one named substream of the master seed.
///
/// `domain` is a stable label such as `"ev-plug"` and `index` the entity
/// id within it. Streams for distinct (domain, index) pairs are
/// statistically independent and fully reproducible.
pub fn substream(master_seed: u64, domain: &str, index: u64) -> ChaCha8Rng {
    let mixed = splitmix64(master_seed ^ fnv1a64(domain.as_bytes()))
        ^ splitmix64(index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    ChaCha8Rng::seed_from_u64(splitmix64(mixed))
}

/// Tolerance for "probabilities sum to one" checks on configured vectors.
pub const PROB_SUM_TOL: f64 = 1e-9;

/// Discrete distribution over a small set of items.
#[derive(Debug, Clone)]
pub struct Categorical<T> {
    items: Vec<T>,
    cumulative: Vec<f64>,
}

impl<T: Clone> Categorical<T> {
    /// Build from items and matching probabilities (must sum to 1 ± 1e-9).
    pub fn new(items: Vec<T>, probs: &[f64]) -> Result<Self> {
        if items.is_empty() || items.len() != probs.len() {
            return Err(CoreError::Config(format!(
                "categorical distribution needs matching non-empty items/probs, got {}/{}",
                items.len(),
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(CoreError::Config(
                "categorical probabilities must lie in [0, 1]".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(CoreError::Config(format!(
                "categorical probabilities sum to {total}, expected 1"
            )));
        }
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in probs {
            acc += p;
            cumulative.push(acc);
        }
        // Guard the final bucket against rounding so u ~ U[0,1) always lands.
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(Self { items, cumulative })
    }

    /// Point mass on a single item.
    pub fn point_mass(item: T) -> Self {
        Self {
            items: vec![item],
            cumulative: vec![1.0],
        }
    }

    pub fn items(&self) -> &[T] {
        &self.items
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &T {
        let u: f64 = rng.gen();
        let idx = self.cumulative.partition_point(|c| *c <= u);
        &self.items[idx.min(self.items.len() - 1)]
    }
}
