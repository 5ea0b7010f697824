//! MinHash signatures over shingle sets and a banded locality-sensitive
//! hash index for candidate-set queries.
//!
//! The hash family is derived from a single 64-bit seed: permutation `p`
//! uses the key `splitmix64(seed + p + 1)` and hashes element `e` as
//! `mix64(e ^ key)`, where `mix64` is the splitmix64 finalizer. Fixed
//! constants make signatures reproducible across runs and platforms.

use std::collections::{HashMap, HashSet};

use crate::corpus::ShingleSet;
use crate::error::LshError;

/// Slot value of the empty-set signature: no real element hashes there in
/// practice, so empty signatures share buckets with (almost) nothing.
pub const EMPTY_SLOT: u64 = u64::MAX;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const BAND_SALT: u64 = 0xB5EC_75D1_0C0A_AE29;

/// splitmix64 finalizer: a fast, well-mixed 64-bit permutation.
#[inline]
fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

#[inline]
fn permutation_key(seed: u64, p: usize) -> u64 {
    mix64(seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(p as u64 + 1)))
}

/// Signature length, banding, and hash-family seed.
///
/// `bands * rows` must equal `permutations`; the implied similarity
/// threshold of the banding scheme is `(1/bands)^(1/rows)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LshConfig {
    permutations: usize,
    bands: usize,
    rows: usize,
    seed: u64,
}

impl LshConfig {
    pub fn new(
        permutations: usize,
        bands: usize,
        rows: usize,
        seed: u64,
    ) -> Result<Self, LshError> {
        if permutations == 0 || bands == 0 || rows == 0 {
            return Err(LshError::ZeroParameter);
        }
        if bands * rows != permutations {
            return Err(LshError::BadBanding {
                permutations,
                bands,
                rows,
            });
        }
        Ok(Self {
            permutations,
            bands,
            rows,
            seed,
        })
    }

    pub fn permutations(&self) -> usize {
        self.permutations
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Approximate Jaccard similarity above which items tend to collide in
    /// at least one band: `(1/b)^(1/r)`.
    pub fn similarity_threshold(&self) -> f64 {
        (1.0 / self.bands as f64).powf(1.0 / self.rows as f64)
    }
}

/// 10 permutations in 10 bands of 1 row: a ~0.1 similarity threshold, so
/// queries return nearly everything and the small remainder is highly
/// distant.
impl Default for LshConfig {
    fn default() -> Self {
        Self {
            permutations: 10,
            bands: 10,
            rows: 1,
            seed: 0,
        }
    }
}

/// A MinHash sketch: one minimum per permutation. Serializes as a plain
/// JSON array of slot values.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct MinHashSignature {
    values: Vec<u64>,
}

impl MinHashSignature {
    pub fn from_values(values: Vec<u64>) -> Self {
        Self { values }
    }

    /// The signature of the empty set: every slot at the sentinel.
    pub fn empty(permutations: usize) -> Self {
        Self {
            values: vec![EMPTY_SLOT; permutations],
        }
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Sketches a shingle set: slot `p` is the minimum of `h_p` over the
/// elements, or the sentinel for an empty set. Deterministic given the
/// config seed.
pub fn minhash_signature(set: &ShingleSet, config: &LshConfig) -> MinHashSignature {
    let p = config.permutations;
    let keys: Vec<u64> = (0..p).map(|i| permutation_key(config.seed, i)).collect();
    let mut slots = vec![EMPTY_SLOT; p];
    for &element in set.codes() {
        for (slot, &key) in slots.iter_mut().zip(&keys) {
            let h = mix64(element ^ key);
            if h < *slot {
                *slot = h;
            }
        }
    }
    MinHashSignature { values: slots }
}

/// Fraction of positions where the two signatures agree; an unbiased
/// estimator of the Jaccard similarity of the underlying sets when both
/// come from the same hash family.
pub fn estimate_jaccard(a: &MinHashSignature, b: &MinHashSignature) -> Result<f64, LshError> {
    if a.len() != b.len() {
        return Err(LshError::SignatureLength {
            a: a.len(),
            b: b.len(),
        });
    }
    let matching = a
        .values
        .iter()
        .zip(&b.values)
        .filter(|(x, y)| x == y)
        .count();
    Ok(matching as f64 / a.len() as f64)
}

/// Elementwise minimum of two signatures; equals the signature of the union
/// of the underlying sets exactly.
pub fn merge_signatures(
    a: &MinHashSignature,
    b: &MinHashSignature,
) -> Result<MinHashSignature, LshError> {
    if a.len() != b.len() {
        return Err(LshError::SignatureLength {
            a: a.len(),
            b: b.len(),
        });
    }
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| x.min(y))
        .collect();
    Ok(MinHashSignature { values })
}

/// Banded hash index over MinHash signatures. Immutable after construction;
/// queries are safe from any number of threads.
#[derive(Debug)]
pub struct LshIndex {
    config: LshConfig,
    ids: Vec<String>,
    signatures: Vec<MinHashSignature>,
    /// One bucket table per band, mapping band key to item positions.
    buckets: Vec<HashMap<u64, Vec<usize>>>,
}

impl LshIndex {
    /// Indexes `(id, signature)` items. Every item lands in exactly one
    /// bucket per band.
    pub fn build(
        items: Vec<(String, MinHashSignature)>,
        config: LshConfig,
    ) -> Result<Self, LshError> {
        let mut buckets: Vec<HashMap<u64, Vec<usize>>> = vec![HashMap::new(); config.bands];
        for (idx, (_, sig)) in items.iter().enumerate() {
            if sig.len() != config.permutations {
                return Err(LshError::ConfigMismatch {
                    query: sig.len(),
                    expected: config.permutations,
                });
            }
            for (band, table) in buckets.iter_mut().enumerate() {
                let key = band_key(&config, band, sig);
                table.entry(key).or_default().push(idx);
            }
        }
        let (ids, signatures) = items.into_iter().unzip();
        Ok(Self {
            config,
            ids,
            signatures,
            buckets,
        })
    }

    pub fn config(&self) -> &LshConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn signature(&self, idx: usize) -> &MinHashSignature {
        &self.signatures[idx]
    }

    /// Positions of all items sharing at least one band key with the query.
    pub fn query(&self, q: &MinHashSignature) -> Result<HashSet<usize>, LshError> {
        if q.len() != self.config.permutations {
            return Err(LshError::ConfigMismatch {
                query: q.len(),
                expected: self.config.permutations,
            });
        }
        let mut candidates = HashSet::new();
        for (band, table) in self.buckets.iter().enumerate() {
            let key = band_key(&self.config, band, q);
            if let Some(members) = table.get(&key) {
                candidates.extend(members.iter().copied());
            }
        }
        Ok(candidates)
    }
}

/// Key for one band: a seeded mix over the band index and the `r` slot
/// values it covers. Folding the band index in prevents cross-band bucket
/// collisions.
fn band_key(config: &LshConfig, band: usize, sig: &MinHashSignature) -> u64 {
    let mut h = mix64(config.seed ^ BAND_SALT ^ (band as u64));
    let start = band * config.rows;
    for &v in &sig.values()[start..start + config.rows] {
        h = mix64(h ^ v);
    }
    h
}
