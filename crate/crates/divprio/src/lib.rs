//! Similarity-based test case prioritization.
//!
//! Orders a regression test suite so the most mutually dissimilar tests run
//! first, on the heuristic that similar tests tend to catch the same faults.
//! The crate bundles:
//!
//! - [`corpus`] — suite and fault-matrix ingestion plus the derived
//!   representations (byte-code vectors, k-shingle sets);
//! - [`metrics`] — Manhattan, Jaccard, and normalized compression distance,
//!   with symmetric distance matrices and a binary matrix cache;
//! - [`lsh`] — MinHash signatures and a banded locality-sensitive hash
//!   index for sub-quadratic similarity queries;
//! - [`prioritizer`] — the greedy max-min pairwise ordering, the
//!   compression-marginal greedy, the LSH loop, and the random baseline;
//! - [`evaluation`] — APFD scoring, Mann-Whitney U, Vargha-Delaney A, BCa
//!   bootstrap confidence intervals, and the multi-round experiment runner;
//! - [`synth`] — a clustered synthetic corpus generator for desk-scale
//!   experiments.
//!
//! Start with the runnable examples (`cargo run --example <name>`); each
//! one demonstrates one capability end to end. The `divprio` binary wraps
//! the same APIs for shell use.

pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod lsh;
pub mod metrics;
pub mod prioritizer;
pub mod synth;

pub mod cli;

pub use corpus::{
    load_fault_matrix, load_suite, save_suite, to_numeric_vector, to_shingle_set, FaultMatrix,
    NumericVector, Preprocessing, ShingleSet, TestCase, TestSuite,
};
pub use lsh::{
    estimate_jaccard, merge_signatures, minhash_signature, LshConfig, LshIndex, MinHashSignature,
};
pub use metrics::{
    build_distance_matrix, distance_to_set, jaccard_distance, manhattan, ncd, ncd_ms_score,
    Compressor, DistanceMatrix, Lz4Compressor, Metric,
};
pub use prioritizer::{
    prioritize_lsh, prioritize_ncd_ms, prioritize_pairwise, prioritize_random, run_technique,
    Mode, PrioritizedOrder, Technique, TechniqueParams,
};
