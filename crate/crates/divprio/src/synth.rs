//! Synthetic clustered corpora for desk-scale experiments.
//!
//! The generator plants fault clusters: every cluster has its own token
//! vocabulary, every member is a mutated copy of the cluster's base
//! document, and every member detects the cluster's fault. Orders that
//! visit all clusters early therefore detect all faults early, which is
//! exactly the structure diversity-first prioritization should exploit.
//!
//! Tokens are fixed-width (6 characters plus a space), so member sources
//! stay position-aligned and byte-level metrics see clusters too.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{FaultMatrix, TestCase, TestSuite};
use crate::evaluation::ExperimentInput;

const TOKEN_CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
const TOKEN_LEN: usize = 6;
/// Token plus separator.
pub const TOKEN_BYTES: usize = TOKEN_LEN + 1;

/// Shape of a generated corpus.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Suite size.
    pub tests: usize,
    /// Number of fault clusters; one fault per cluster.
    pub clusters: usize,
    /// Document length in tokens (7 bytes each).
    pub tokens_per_doc: usize,
    /// Per-position probability that a member resamples the base token.
    /// At 0.15, two members of a cluster share ~72% of their text.
    pub mutation_rate: f64,
    /// Vocabulary size per cluster.
    pub codebook_size: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            tests: 200,
            clusters: 10,
            tokens_per_doc: 292, // ~2 KiB per document
            mutation_rate: 0.15,
            codebook_size: 40,
            seed: 0,
        }
    }
}

/// Generates a suite and its fault matrix. Deterministic per config.
pub fn generate(config: &SynthConfig) -> (TestSuite, FaultMatrix) {
    assert!(config.clusters >= 1, "need at least one cluster");
    assert!(
        config.tests >= config.clusters,
        "need at least one test per cluster"
    );
    assert!(
        (0.0..=1.0).contains(&config.mutation_rate),
        "mutation rate must be a probability"
    );
    assert!(config.codebook_size >= 1 && config.tokens_per_doc >= 1);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let token = |rng: &mut ChaCha8Rng| -> [u8; TOKEN_BYTES] {
        let mut t = [b' '; TOKEN_BYTES];
        for slot in t.iter_mut().take(TOKEN_LEN) {
            *slot = TOKEN_CHARS[rng.gen_range(0..TOKEN_CHARS.len())];
        }
        t
    };

    // Disjoint vocabularies keep clusters far apart under every metric.
    let codebooks: Vec<Vec<[u8; TOKEN_BYTES]>> = (0..config.clusters)
        .map(|_| (0..config.codebook_size).map(|_| token(&mut rng)).collect())
        .collect();
    let bases: Vec<Vec<usize>> = (0..config.clusters)
        .map(|_| {
            (0..config.tokens_per_doc)
                .map(|_| rng.gen_range(0..config.codebook_size))
                .collect()
        })
        .collect();

    // Balanced cluster sizes, shuffled through the manifest.
    let mut assignment: Vec<usize> = (0..config.tests).map(|i| i % config.clusters).collect();
    use rand::seq::SliceRandom;
    assignment.shuffle(&mut rng);

    let mut cases = Vec::with_capacity(config.tests);
    let mut members: Vec<HashSet<String>> = vec![HashSet::new(); config.clusters];
    for (i, &cluster) in assignment.iter().enumerate() {
        let id = format!("t{i:04}");
        let mut source = Vec::with_capacity(config.tokens_per_doc * TOKEN_BYTES);
        for &base_token in &bases[cluster] {
            let idx = if rng.gen::<f64>() < config.mutation_rate {
                rng.gen_range(0..config.codebook_size)
            } else {
                base_token
            };
            source.extend_from_slice(&codebooks[cluster][idx]);
        }
        members[cluster].insert(id.clone());
        cases.push(TestCase::new(id, source));
    }

    let suite = TestSuite::new(Some(format!("synthetic-{}", config.seed)), cases)
        .expect("generated ids are unique");
    let faults = FaultMatrix::new(
        members
            .into_iter()
            .enumerate()
            .map(|(c, tests)| (format!("fault_{c:02}"), tests))
            .collect(),
        &suite,
    )
    .expect("every cluster has members");
    (suite, faults)
}

/// One experiment input per round, re-seeding the generator each time, so
/// deterministic techniques vary across rounds the way they vary across
/// real suite versions.
pub fn experiment_inputs(base: &SynthConfig, rounds: usize) -> Vec<ExperimentInput> {
    (0..rounds)
        .map(|round| {
            let config = SynthConfig {
                seed: base.seed.wrapping_add(round as u64),
                ..*base
            };
            let (suite, faults) = generate(&config);
            ExperimentInput {
                suite_label: "synthetic".to_string(),
                version: format!("v{round:02}"),
                suite,
                faults,
            }
        })
        .collect()
}
