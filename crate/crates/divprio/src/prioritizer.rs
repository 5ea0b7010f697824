//! Prioritized test orders: greedy pairwise max-min over a distance matrix,
//! the compression-marginal greedy, the LSH-based loop, and the random
//! baseline.
//!
//! Every technique returns a true permutation of the suite and breaks score
//! ties by manifest order, so orders are reproducible across runs and
//! worker counts.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{to_shingle_set, TestSuite};
use crate::error::PrioritizerError;
use crate::lsh::{
    estimate_jaccard, merge_signatures, minhash_signature, LshConfig, LshIndex, MinHashSignature,
};
use crate::metrics::{build_distance_matrix, Compressor, DistanceMatrix, Metric};

/// An ordering of a suite with per-step selection scores and timing.
///
/// `scores[0]` is the seeding score of the technique (distance to the whole
/// suite for pairwise, marginal size over the empty set for the
/// compression greedy, estimated distance to the empty sketch for LSH,
/// zero for random).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrioritizedOrder {
    pub technique: String,
    pub params: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    pub order: Vec<String>,
    pub scores: Vec<f64>,
    pub prep_seconds: f64,
    pub algo_seconds: f64,
}

impl PrioritizedOrder {
    /// Total preparation plus algorithm time; the per-run input to AMET.
    pub fn elapsed_seconds(&self) -> f64 {
        self.prep_seconds + self.algo_seconds
    }

    /// Plain-text form: one test id per line, for piping into runners.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for id in &self.order {
            out.push_str(id);
            out.push('\n');
        }
        out
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("order serializes")
    }

    /// Zeroes wall-clock fields so otherwise-identical runs serialize
    /// byte-identically.
    pub fn without_timing(mut self) -> Self {
        self.prep_seconds = 0.0;
        self.algo_seconds = 0.0;
        self
    }
}

/// Whether the greedy loop rewards distance (diversity) or proximity (the
/// similarity-maximizing sanity check).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Maximize,
    Minimize,
}

impl Mode {
    fn as_str(&self) -> &'static str {
        match self {
            Mode::Maximize => "maximize",
            Mode::Minimize => "minimize",
        }
    }

    #[inline]
    fn better(&self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Mode::Maximize => candidate > incumbent,
            Mode::Minimize => candidate < incumbent,
        }
    }
}

/// Strictly-better scan in ascending index order, so the lowest manifest
/// index wins ties.
fn arg_best(scores: &[f64], remaining: &[bool], mode: Mode) -> usize {
    let mut best: Option<usize> = None;
    for i in 0..scores.len() {
        if !remaining[i] {
            continue;
        }
        match best {
            None => best = Some(i),
            Some(b) => {
                if mode.better(scores[i], scores[b]) {
                    best = Some(i);
                }
            }
        }
    }
    best.expect("at least one remaining candidate")
}

/// Greedy pairwise prioritization: seed with the test farthest from the
/// whole suite, then repeatedly take the test farthest from the prioritized
/// set (minimum distance to any member). `Minimize` inverts both choices.
///
/// The min-distance to the prioritized set is tracked incrementally (one
/// update per remaining test per step), which is observationally equivalent
/// to recomputing it from scratch and keeps the loop at O(n^2).
pub fn prioritize_pairwise(
    suite: &TestSuite,
    matrix: &DistanceMatrix,
    mode: Mode,
) -> Result<PrioritizedOrder, PrioritizerError> {
    if suite.is_empty() {
        return Err(PrioritizerError::EmptySuite);
    }
    let started = Instant::now();
    let n = suite.len();
    let midx: Vec<usize> = suite
        .ids()
        .map(|id| {
            matrix
                .index_of(id)
                .ok_or_else(|| PrioritizerError::MatrixIdMismatch(id.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let d = |i: usize, j: usize| matrix.get(midx[i], midx[j]);

    let mut order_idx = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);

    if n == 1 {
        order_idx.push(0);
        scores.push(0.0);
    } else {
        // Seed: distance of each test to the full suite (self excluded).
        let mut cur: Vec<f64> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| d(i, j))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let mut remaining = vec![true; n];

        let first = arg_best(&cur, &remaining, mode);
        scores.push(cur[first]);
        order_idx.push(first);
        remaining[first] = false;

        // From here on `cur` tracks the min distance to the prioritized set.
        for i in 0..n {
            if remaining[i] {
                cur[i] = d(i, first);
            }
        }
        while order_idx.len() < n {
            let pick = arg_best(&cur, &remaining, mode);
            scores.push(cur[pick]);
            order_idx.push(pick);
            remaining[pick] = false;
            for i in 0..n {
                if remaining[i] {
                    cur[i] = cur[i].min(d(i, pick));
                }
            }
        }
    }

    let ids: Vec<String> = suite.ids().map(str::to_string).collect();
    let mut params = BTreeMap::new();
    params.insert("metric".to_string(), matrix.metric().to_string());
    if !matrix.params().is_empty() {
        params.insert("metric_params".to_string(), matrix.params().to_string());
    }
    params.insert("mode".to_string(), mode.as_str().to_string());
    Ok(PrioritizedOrder {
        technique: format!("pairwise-{}({})", mode.as_str(), matrix.metric()),
        params,
        seed: None,
        order: order_idx.into_iter().map(|i| ids[i].clone()).collect(),
        scores,
        prep_seconds: 0.0,
        algo_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Compression-marginal greedy: at every step take the test whose marginal
/// compressed size over the concatenated prioritized set is largest. With
/// an empty set this reduces to the standalone compressed size, which seeds
/// the order.
pub fn prioritize_ncd_ms(
    suite: &TestSuite,
    compressor: &dyn Compressor,
) -> Result<PrioritizedOrder, PrioritizerError> {
    if suite.is_empty() {
        return Err(PrioritizerError::EmptySuite);
    }
    let started = Instant::now();
    let n = suite.len();
    let cases = suite.cases();
    let total_len: usize = cases.iter().map(|c| c.len()).sum();

    let mut ps_bytes: Vec<u8> = Vec::with_capacity(total_len);
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut order_idx = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);

    while !remaining.is_empty() {
        let c_ps = compressor.compress_len(&ps_bytes)? as f64;
        // Candidates fan out to the pool; each worker segment keeps a scratch
        // buffer pre-filled with the prioritized bytes. Results come back in
        // candidate order, so the ascending tie-break is preserved.
        let ps = &ps_bytes;
        let step_scores: Vec<f64> = remaining
            .par_iter()
            .map_init(
                || {
                    let mut buf = Vec::with_capacity(ps.len() + 4096);
                    buf.extend_from_slice(ps);
                    buf
                },
                |buf, &i| {
                    buf.truncate(ps.len());
                    buf.extend_from_slice(cases[i].source());
                    Ok(compressor.compress_len(buf)? as f64 - c_ps)
                },
            )
            .collect::<Result<_, PrioritizerError>>()?;

        let mut best = 0;
        for (k, &s) in step_scores.iter().enumerate() {
            if s > step_scores[best] {
                best = k;
            }
        }
        let pick = remaining.remove(best);
        scores.push(step_scores[best]);
        order_idx.push(pick);
        ps_bytes.extend_from_slice(cases[pick].source());
    }

    let ids: Vec<String> = suite.ids().map(str::to_string).collect();
    let mut params = BTreeMap::new();
    params.insert("compressor".to_string(), compressor.name().to_string());
    Ok(PrioritizedOrder {
        technique: "ncd-multiset".to_string(),
        params,
        seed: None,
        order: order_idx.into_iter().map(|i| ids[i].clone()).collect(),
        scores,
        prep_seconds: 0.0,
        algo_seconds: started.elapsed().as_secs_f64(),
    })
}

/// LSH-based prioritization.
///
/// Builds MinHash signatures and the banded index (the preparation phase),
/// then repeatedly queries with the cumulative signature of the prioritized
/// set: candidates returned by the query are the *similar* items, so the
/// pick comes from the distant remainder, by maximum estimated Jaccard
/// distance to the cumulative sketch. When the remainder is empty the same
/// criterion selects among the not-yet-prioritized candidates instead.
pub fn prioritize_lsh(
    suite: &TestSuite,
    config: &LshConfig,
    shingle_k: usize,
) -> Result<PrioritizedOrder, PrioritizerError> {
    if suite.is_empty() {
        return Err(PrioritizerError::EmptySuite);
    }
    let prep_started = Instant::now();
    let n = suite.len();
    let signatures: Vec<MinHashSignature> = suite
        .cases()
        .par_iter()
        .map(|c| minhash_signature(&to_shingle_set(c, shingle_k), config))
        .collect();
    let items: Vec<(String, MinHashSignature)> = suite
        .ids()
        .map(str::to_string)
        .zip(signatures.iter().cloned())
        .collect();
    let index = LshIndex::build(items, *config)?;
    let prep_seconds = prep_started.elapsed().as_secs_f64();

    let algo_started = Instant::now();
    let mut query = MinHashSignature::empty(config.permutations());
    let mut remaining = vec![true; n];
    let mut order_idx = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);

    for _ in 0..n {
        let candidates = index.query(&query)?;
        let mut pick: Option<(usize, f64)> = None;
        // Distant set first: remaining items the query did not reach.
        for i in 0..n {
            if !remaining[i] || candidates.contains(&i) {
                continue;
            }
            let dist = 1.0 - estimate_jaccard(&signatures[i], &query)?;
            if pick.is_none_or(|(_, best)| dist > best) {
                pick = Some((i, dist));
            }
        }
        if pick.is_none() {
            // Distant set exhausted; fall back to the candidate set minus
            // the already-prioritized items under the same criterion.
            for i in 0..n {
                if !remaining[i] {
                    continue;
                }
                let dist = 1.0 - estimate_jaccard(&signatures[i], &query)?;
                if pick.is_none_or(|(_, best)| dist > best) {
                    pick = Some((i, dist));
                }
            }
        }
        let (i, dist) = pick.expect("remaining is non-empty");
        remaining[i] = false;
        order_idx.push(i);
        scores.push(dist);
        query = merge_signatures(&query, &signatures[i])?;
    }

    let ids: Vec<String> = suite.ids().map(str::to_string).collect();
    let mut params = BTreeMap::new();
    params.insert("shingle_k".to_string(), shingle_k.to_string());
    params.insert(
        "lsh_permutations".to_string(),
        config.permutations().to_string(),
    );
    params.insert("lsh_bands".to_string(), config.bands().to_string());
    params.insert("lsh_rows".to_string(), config.rows().to_string());
    params.insert("lsh_seed".to_string(), config.seed().to_string());
    Ok(PrioritizedOrder {
        technique: "lsh".to_string(),
        params,
        seed: None,
        order: order_idx.into_iter().map(|i| ids[i].clone()).collect(),
        scores,
        prep_seconds,
        algo_seconds: algo_started.elapsed().as_secs_f64(),
    })
}

/// Uniformly random permutation, deterministic per seed.
pub fn prioritize_random(suite: &TestSuite, seed: u64) -> Result<PrioritizedOrder, PrioritizerError> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    if suite.is_empty() {
        return Err(PrioritizerError::EmptySuite);
    }
    let started = Instant::now();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<String> = suite.ids().map(str::to_string).collect();
    order.shuffle(&mut rng);
    let n = order.len();
    Ok(PrioritizedOrder {
        technique: "random".to_string(),
        params: BTreeMap::from([("seed".to_string(), seed.to_string())]),
        seed: Some(seed),
        order,
        scores: vec![0.0; n],
        prep_seconds: 0.0,
        algo_seconds: started.elapsed().as_secs_f64(),
    })
}

/// The investigated techniques, by acronym.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Technique {
    /// Random permutation baseline.
    Rnd,
    /// Pairwise greedy over Manhattan distance.
    Mnh,
    /// Pairwise greedy over Jaccard distance on shingle sets.
    Jac,
    /// Pairwise greedy over normalized compression distance.
    Ncd,
    /// Compression-marginal greedy against the whole prioritized set.
    NcdMs,
    /// MinHash/LSH-based ordering.
    Lsh,
    /// Sanity check: pairwise greedy over NCD, minimizing distance.
    Sc,
}

impl Technique {
    pub const ALL: [Technique; 7] = [
        Technique::Rnd,
        Technique::Mnh,
        Technique::Jac,
        Technique::Ncd,
        Technique::NcdMs,
        Technique::Lsh,
        Technique::Sc,
    ];

    pub fn acronym(&self) -> &'static str {
        match self {
            Technique::Rnd => "RND",
            Technique::Mnh => "MNH",
            Technique::Jac => "JAC",
            Technique::Ncd => "NCD",
            Technique::NcdMs => "NCD-MS",
            Technique::Lsh => "LSH",
            Technique::Sc => "SC",
        }
    }

    /// Parses an acronym, case-insensitively.
    pub fn parse(s: &str) -> Option<Technique> {
        match s.to_ascii_uppercase().as_str() {
            "RND" => Some(Technique::Rnd),
            "MNH" => Some(Technique::Mnh),
            "JAC" => Some(Technique::Jac),
            "NCD" => Some(Technique::Ncd),
            "NCD-MS" => Some(Technique::NcdMs),
            "LSH" => Some(Technique::Lsh),
            "SC" => Some(Technique::Sc),
            _ => None,
        }
    }

    /// Whether the output depends on the run seed.
    pub fn is_seeded(&self) -> bool {
        matches!(self, Technique::Rnd)
    }
}

impl std::fmt::Display for Technique {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.acronym())
    }
}

/// Shared knobs for running any technique.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TechniqueParams {
    pub shingle_k: usize,
    pub lsh: LshConfig,
}

impl Default for TechniqueParams {
    fn default() -> Self {
        Self {
            shingle_k: 5,
            lsh: LshConfig::default(),
        }
    }
}

/// Runs one technique end to end, measuring preparation (distance matrix or
/// index construction) separately from the prioritization loop, and labels
/// the result with the technique acronym and its full parameter record.
pub fn run_technique(
    suite: &TestSuite,
    technique: Technique,
    params: &TechniqueParams,
    compressor: &dyn Compressor,
    seed: u64,
) -> Result<PrioritizedOrder, PrioritizerError> {
    let mut order = match technique {
        Technique::Rnd => prioritize_random(suite, seed)?,
        Technique::Mnh => pairwise(suite, Metric::Manhattan, Mode::Maximize)?,
        Technique::Jac => pairwise(
            suite,
            Metric::Jaccard {
                k: params.shingle_k,
            },
            Mode::Maximize,
        )?,
        Technique::Ncd => pairwise(suite, Metric::Ncd { compressor }, Mode::Maximize)?,
        Technique::Sc => pairwise(suite, Metric::Ncd { compressor }, Mode::Minimize)?,
        Technique::NcdMs => prioritize_ncd_ms(suite, compressor)?,
        Technique::Lsh => prioritize_lsh(suite, &params.lsh, params.shingle_k)?,
    };
    if technique == Technique::Jac {
        order
            .params
            .insert("shingle_k".to_string(), params.shingle_k.to_string());
    }
    order.technique = technique.acronym().to_string();
    Ok(order)
}

fn pairwise(
    suite: &TestSuite,
    metric: Metric<'_>,
    mode: Mode,
) -> Result<PrioritizedOrder, PrioritizerError> {
    let prep_started = Instant::now();
    let matrix = build_distance_matrix(suite, metric)?;
    let prep_seconds = prep_started.elapsed().as_secs_f64();
    let mut order = prioritize_pairwise(suite, &matrix, mode)?;
    order.prep_seconds = prep_seconds;
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TestCase;
    use crate::metrics::{distance_to_set, Lz4Compressor};
    use rand::{Rng, SeedableRng};
    use std::collections::HashMap;

    fn suite_of(ids: &[&str]) -> TestSuite {
        TestSuite::new(
            None,
            ids.iter()
                .map(|id| TestCase::new(*id, id.as_bytes().to_vec()))
                .collect(),
        )
        .unwrap()
    }

    fn matrix_abc() -> DistanceMatrix {
        // d(A,B)=1, d(A,C)=10, d(B,C)=10
        DistanceMatrix::from_values(
            "toy",
            "",
            vec!["A".into(), "B".into(), "C".into()],
            vec![
                vec![0.0, 1.0, 10.0],
                vec![1.0, 0.0, 10.0],
                vec![10.0, 10.0, 0.0],
            ],
        )
        .unwrap()
    }

    #[test]
    fn pairwise_hand_trace() {
        let suite = suite_of(&["A", "B", "C"]);
        let order = prioritize_pairwise(&suite, &matrix_abc(), Mode::Maximize).unwrap();
        assert_eq!(order.order, ["C", "A", "B"]);
        assert_eq!(order.scores, [10.0, 10.0, 1.0]);
    }

    #[test]
    fn pairwise_minimize_inverts_the_choice() {
        let suite = suite_of(&["A", "B", "C"]);
        let order = prioritize_pairwise(&suite, &matrix_abc(), Mode::Minimize).unwrap();
        assert_eq!(order.order, ["A", "B", "C"]);
        assert_eq!(order.scores, [1.0, 1.0, 10.0]);
    }

    #[test]
    fn pairwise_singleton_suite() {
        let suite = suite_of(&["A"]);
        let m = DistanceMatrix::from_values("toy", "", vec!["A".into()], vec![vec![0.0]]).unwrap();
        let order = prioritize_pairwise(&suite, &m, Mode::Maximize).unwrap();
        assert_eq!(order.order, ["A"]);
        assert_eq!(order.scores, [0.0]);
    }

    #[test]
    fn pairwise_rejects_matrix_id_mismatch() {
        let suite = suite_of(&["A", "X"]);
        assert!(matches!(
            prioritize_pairwise(&suite, &matrix_abc(), Mode::Maximize),
            Err(PrioritizerError::MatrixIdMismatch(id)) if id == "X"
        ));
    }

    /// Reference implementation of the greedy loop that recomputes the
    /// distance to the prioritized set from scratch at every step.
    pub(crate) fn naive_pairwise(
        suite: &TestSuite,
        matrix: &DistanceMatrix,
        mode: Mode,
    ) -> (Vec<String>, Vec<f64>) {
        let ids: Vec<String> = suite.ids().map(str::to_string).collect();
        if ids.len() == 1 {
            return (ids, vec![0.0]);
        }
        let all: Vec<&str> = ids.iter().map(String::as_str).collect();
        let mut remaining: Vec<&str> = all.clone();
        let mut prioritized: Vec<&str> = Vec::new();
        let mut scores = Vec::new();

        let pick_best = |cands: &[&str], pool: &[&str]| -> (usize, f64) {
            let mut best_at = 0;
            let mut best_score =
                distance_to_set(cands[0], pool.iter().copied(), matrix).unwrap();
            for (at, cand) in cands.iter().enumerate().skip(1) {
                let s = distance_to_set(cand, pool.iter().copied(), matrix).unwrap();
                if mode.better(s, best_score) {
                    best_at = at;
                    best_score = s;
                }
            }
            (best_at, best_score)
        };

        let (at, score) = pick_best(&remaining, &all);
        prioritized.push(remaining.remove(at));
        scores.push(score);
        while !remaining.is_empty() {
            let (at, score) = pick_best(&remaining, &prioritized);
            prioritized.push(remaining.remove(at));
            scores.push(score);
        }
        (prioritized.iter().map(|s| s.to_string()).collect(), scores)
    }

    #[test]
    fn pairwise_matches_naive_oracle_on_small_random_suites() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(101);
        for trial in 0..50 {
            let n = rng.gen_range(1..=8);
            let ids: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
            let mut rows = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in i + 1..n {
                    let v = (rng.gen_range(0..100) as f64) / 10.0;
                    rows[i][j] = v;
                    rows[j][i] = v;
                }
            }
            let matrix = DistanceMatrix::from_values("rand", "", ids.clone(), rows).unwrap();
            let suite = TestSuite::new(
                None,
                ids.iter()
                    .map(|id| TestCase::new(id.clone(), Vec::new()))
                    .collect(),
            )
            .unwrap();
            for mode in [Mode::Maximize, Mode::Minimize] {
                let fast = prioritize_pairwise(&suite, &matrix, mode).unwrap();
                let (naive_order, naive_scores) = naive_pairwise(&suite, &matrix, mode);
                assert_eq!(fast.order, naive_order, "trial {trial}, mode {mode:?}");
                assert_eq!(fast.scores, naive_scores, "trial {trial}, mode {mode:?}");
            }
        }
    }

    #[test]
    fn ncd_ms_singleton_suite() {
        let suite = suite_of(&["only"]);
        let order = prioritize_ncd_ms(&suite, &Lz4Compressor).unwrap();
        assert_eq!(order.order, ["only"]);
    }

    #[test]
    fn ncd_ms_prefers_unrelated_over_duplicate() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let base: Vec<u8> = (0..1500).map(|_| rng.gen_range(b'a'..=b'z')).collect();
        let unrelated: Vec<u8> = (0..1500).map(|_| rng.gen()).collect();
        // The duplicate precedes the unrelated test in the manifest, so only
        // a genuinely higher marginal size can move the unrelated test up.
        let suite = TestSuite::new(
            None,
            vec![
                TestCase::new("x", base.clone()),
                TestCase::new("x-copy", base),
                TestCase::new("y", unrelated),
            ],
        )
        .unwrap();
        let order = prioritize_ncd_ms(&suite, &Lz4Compressor).unwrap();
        let pos: HashMap<&str, usize> = order
            .order
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        assert!(
            pos["y"] < pos["x-copy"],
            "unrelated test should outrank the duplicate: {:?}",
            order.order
        );
    }

    #[test]
    fn ncd_ms_matches_stepwise_recomputation_oracle() {
        use crate::metrics::ncd_ms_score;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for trial in 0..10 {
            let n = rng.gen_range(1..=8);
            let cases: Vec<TestCase> = (0..n)
                .map(|i| {
                    let len = rng.gen_range(0..400);
                    let bytes: Vec<u8> =
                        (0..len).map(|_| rng.gen_range(b'a'..=b'f')).collect();
                    TestCase::new(format!("t{i}"), bytes)
                })
                .collect();
            let suite = TestSuite::new(None, cases).unwrap();
            let fast = prioritize_ncd_ms(&suite, &Lz4Compressor).unwrap();

            // Naive oracle: recompute every candidate's marginal size from
            // scratch with the public scoring operation at every step.
            let mut remaining: Vec<&TestCase> = suite.cases().iter().collect();
            let mut prioritized: Vec<&TestCase> = Vec::new();
            let mut expected = Vec::new();
            while !remaining.is_empty() {
                let mut best_at = 0;
                let mut best =
                    ncd_ms_score(remaining[0], &prioritized, &Lz4Compressor).unwrap();
                for (at, cand) in remaining.iter().enumerate().skip(1) {
                    let s = ncd_ms_score(cand, &prioritized, &Lz4Compressor).unwrap();
                    if s > best {
                        best = s;
                        best_at = at;
                    }
                }
                let picked = remaining.remove(best_at);
                prioritized.push(picked);
                expected.push(picked.id().to_string());
            }
            assert_eq!(fast.order, expected, "trial {trial}");
        }
    }

    #[test]
    fn lsh_first_pick_is_manifest_first_on_all_distinct_sets() {
        // Every signature is maximally distant from the empty query, so the
        // seeding tie resolves to manifest order.
        let suite = TestSuite::new(
            None,
            vec![
                TestCase::new("first", b"alpha beta gamma delta".to_vec()),
                TestCase::new("second", b"epsilon zeta eta theta".to_vec()),
                TestCase::new("third", b"iota kappa lambda mu nu".to_vec()),
            ],
        )
        .unwrap();
        let order = prioritize_lsh(&suite, &LshConfig::default(), 5).unwrap();
        assert_eq!(order.order[0], "first");
        assert_eq!(order.scores[0], 1.0);
    }

    #[test]
    fn lsh_picks_the_alien_before_cluster_copies() {
        // Four byte-identical tests plus one disjoint-alphabet test: after
        // the first pick the copies match the cumulative sketch exactly
        // (estimated distance 0), so the alien must come second.
        let cluster = b"the same body of test code repeated verbatim".to_vec();
        let suite = TestSuite::new(
            None,
            vec![
                TestCase::new("c0", cluster.clone()),
                TestCase::new("c1", cluster.clone()),
                TestCase::new("c2", cluster.clone()),
                TestCase::new("alien", b"0123456789!@#$%^&*()0123456789".to_vec()),
                TestCase::new("c3", cluster),
            ],
        )
        .unwrap();
        let order = prioritize_lsh(&suite, &LshConfig::default(), 5).unwrap();
        assert_eq!(order.order[0], "c0");
        assert_eq!(order.order[1], "alien");
    }

    #[test]
    fn lsh_output_is_a_permutation_at_various_sizes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut corpora = 0;
        for &n in &[10usize, 100, 1000] {
            let trials = if n == 1000 { 4 } else { 48 };
            for _ in 0..trials {
                corpora += 1;
                let cases: Vec<TestCase> = (0..n)
                    .map(|i| {
                        let len = rng.gen_range(0..60);
                        let bytes: Vec<u8> =
                            (0..len).map(|_| rng.gen_range(b'a'..=b'z')).collect();
                        TestCase::new(format!("t{i}"), bytes)
                    })
                    .collect();
                let suite = TestSuite::new(None, cases).unwrap();
                let order = prioritize_lsh(&suite, &LshConfig::default(), 5).unwrap();
                let mut sorted: Vec<&String> = order.order.iter().collect();
                sorted.sort();
                sorted.dedup();
                assert_eq!(sorted.len(), n, "order must be a permutation");
            }
        }
        assert_eq!(corpora, 100);
    }

    #[test]
    fn random_is_deterministic_per_seed() {
        let suite = suite_of(&["a", "b", "c", "d", "e"]);
        let one = prioritize_random(&suite, 42).unwrap();
        let two = prioritize_random(&suite, 42).unwrap();
        assert_eq!(one.order, two.order);
        let other = prioritize_random(&suite, 43).unwrap();
        assert_eq!(one.order.len(), other.order.len());
    }

    #[test]
    fn random_singleton() {
        let suite = suite_of(&["only"]);
        let order = prioritize_random(&suite, 1).unwrap();
        assert_eq!(order.order, ["only"]);
    }

    #[test]
    fn random_is_uniform_over_permutations() {
        let suite = suite_of(&["a", "b", "c"]);
        let mut counts: HashMap<Vec<String>, usize> = HashMap::new();
        let trials = 10_000;
        for seed in 0..trials {
            let order = prioritize_random(&suite, seed).unwrap();
            *counts.entry(order.order).or_default() += 1;
        }
        assert_eq!(counts.len(), 6, "all 6 permutations should occur");
        for (perm, count) in counts {
            let freq = count as f64 / trials as f64;
            assert!(
                (freq - 1.0 / 6.0).abs() <= 0.02,
                "permutation {perm:?} frequency {freq:.4} outside 1/6 +- 0.02"
            );
        }
    }

    #[test]
    fn every_technique_returns_a_permutation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let cases: Vec<TestCase> = (0..12)
            .map(|i| {
                let len = rng.gen_range(1..300);
                let bytes: Vec<u8> = (0..len).map(|_| rng.gen_range(b' '..=b'~')).collect();
                TestCase::new(format!("t{i:02}"), bytes)
            })
            .collect();
        let suite = TestSuite::new(None, cases).unwrap();
        let params = TechniqueParams::default();
        for technique in Technique::ALL {
            let order = run_technique(&suite, technique, &params, &Lz4Compressor, 3).unwrap();
            assert_eq!(order.technique, technique.acronym());
            assert_eq!(order.scores.len(), order.order.len());
            let mut sorted = order.order.clone();
            sorted.sort();
            let mut expected: Vec<String> = suite.ids().map(str::to_string).collect();
            expected.sort();
            assert_eq!(sorted, expected, "{technique} must permute the suite");
        }
    }

    #[test]
    fn maximize_and_minimize_first_picks_are_argmax_argmin() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let n = rng.gen_range(2..=6);
            let ids: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
            // All-distinct pairwise distances so the seed scores are unique.
            let mut pool: Vec<f64> = (1..=(n * n) as u32).map(f64::from).collect();
            let mut rows = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in i + 1..n {
                    let at = rng.gen_range(0..pool.len());
                    let v = pool.swap_remove(at);
                    rows[i][j] = v;
                    rows[j][i] = v;
                }
            }
            let matrix = DistanceMatrix::from_values("rand", "", ids.clone(), rows).unwrap();
            let suite = TestSuite::new(
                None,
                ids.iter()
                    .map(|id| TestCase::new(id.clone(), Vec::new()))
                    .collect(),
            )
            .unwrap();
            let seed_scores: Vec<f64> = ids
                .iter()
                .map(|id| {
                    distance_to_set(id, ids.iter().map(String::as_str), &matrix).unwrap()
                })
                .collect();
            let max = prioritize_pairwise(&suite, &matrix, Mode::Maximize).unwrap();
            let min = prioritize_pairwise(&suite, &matrix, Mode::Minimize).unwrap();
            // The seed scores are minima over distinct pair distances, so the
            // closest pair still ties; resolve ties by lowest index like the
            // algorithm does.
            let mut argmax = 0;
            let mut argmin = 0;
            for i in 1..n {
                if seed_scores[i] > seed_scores[argmax] {
                    argmax = i;
                }
                if seed_scores[i] < seed_scores[argmin] {
                    argmin = i;
                }
            }
            assert_eq!(max.order[0], ids[argmax]);
            assert_eq!(min.order[0], ids[argmin]);
        }
    }

    #[test]
    fn ncd_ms_is_identical_across_pool_sizes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let cases: Vec<TestCase> = (0..20)
            .map(|i| {
                let len = rng.gen_range(50..500);
                let bytes: Vec<u8> = (0..len).map(|_| rng.gen_range(b'a'..=b'k')).collect();
                TestCase::new(format!("t{i:02}"), bytes)
            })
            .collect();
        let suite = TestSuite::new(None, cases).unwrap();
        let run = || prioritize_ncd_ms(&suite, &Lz4Compressor).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(run);
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(run);
        assert_eq!(single.order, multi.order);
        assert_eq!(single.scores, multi.scores);
    }
}
