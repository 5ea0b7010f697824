//! Scores orderings with APFD, times techniques (AMET), and compares
//! techniques with a Mann-Whitney U test, the Vargha-Delaney A effect size,
//! and BCa bootstrap confidence intervals.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::corpus::{FaultMatrix, TestSuite};
use crate::error::EvaluationError;
use crate::metrics::Compressor;
use crate::prioritizer::{run_technique, PrioritizedOrder, Technique, TechniqueParams};

/// APFD of one ordering against a fault matrix.
///
/// `tf` holds the 1-based position at which each fault is first detected;
/// the score is `100 * (1 - sum(tf) / (n * m) + 1 / (2n))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApfdResult {
    pub order_id: String,
    pub apfd: f64,
    pub n: usize,
    pub m: usize,
    pub tf: Vec<(String, usize)>,
}

/// Computes APFD. The order must cover exactly the suite the fault matrix
/// was validated against.
pub fn apfd(order: &PrioritizedOrder, faults: &FaultMatrix) -> Result<ApfdResult, EvaluationError> {
    let n = faults.n();
    let m = faults.m();
    let mut position: HashMap<&str, usize> = HashMap::with_capacity(order.order.len());
    for (i, id) in order.order.iter().enumerate() {
        position.insert(id.as_str(), i + 1);
    }
    if order.order.len() != position.len() {
        return Err(EvaluationError::IdMismatch {
            detail: "order contains duplicate ids".to_string(),
        });
    }
    for id in faults.test_ids() {
        if !position.contains_key(id.as_str()) {
            return Err(EvaluationError::IdMismatch {
                detail: format!("order is missing suite test {id:?}"),
            });
        }
    }
    if order.order.len() != n {
        return Err(EvaluationError::IdMismatch {
            detail: format!(
                "order has {} tests but the suite has {n}",
                order.order.len()
            ),
        });
    }

    let mut tf = Vec::with_capacity(m);
    let mut tf_sum = 0usize;
    for fault in faults.fault_ids() {
        let detecting = faults
            .detecting_tests(fault)
            .expect("fault ids come from the matrix");
        let first = detecting
            .iter()
            .map(|t| position[t.as_str()])
            .min()
            .expect("every fault has a detecting test");
        tf_sum += first;
        tf.push((fault.clone(), first));
    }

    let apfd = 100.0 * (1.0 - tf_sum as f64 / (n as f64 * m as f64) + 1.0 / (2.0 * n as f64));
    Ok(ApfdResult {
        order_id: order.technique.clone(),
        apfd,
        n,
        m,
        tf,
    })
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// Pooled average ranks (ties averaged) for the concatenation of `x` and
/// `y`, returned in the original element order (x first).
fn average_ranks(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len() + y.len();
    let mut idx: Vec<usize> = (0..n).collect();
    let value = |i: usize| if i < x.len() { x[i] } else { y[i - x.len()] };
    idx.sort_by(|&a, &b| value(a).partial_cmp(&value(b)).expect("finite samples"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && value(idx[j]) == value(idx[i]) {
            j += 1;
        }
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

const EXACT_ENUMERATION_LIMIT: u128 = 10_000_000;

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Two-sided Mann-Whitney U test.
///
/// Small samples (`min(|x|, |y|) < 8`) use exact enumeration of all rank
/// assignments; larger ones use the normal approximation with tie and
/// continuity corrections.
pub fn mann_whitney_u(x: &[f64], y: &[f64]) -> Result<f64, EvaluationError> {
    if x.is_empty() || y.is_empty() {
        return Err(EvaluationError::EmptySample);
    }
    let (n1, n2) = (x.len(), y.len());
    let n = n1 + n2;
    let ranks = average_ranks(x, y);
    let r1: f64 = ranks[..n1].iter().sum();
    let u1 = r1 - (n1 * (n1 + 1)) as f64 / 2.0;
    let mu = (n1 * n2) as f64 / 2.0;
    let observed_dev = (u1 - mu).abs();

    let small = n1.min(n2) < 8;
    if small && binomial(n, n1.min(n2)) <= EXACT_ENUMERATION_LIMIT {
        // Permutation test: enumerate every assignment of pooled ranks to
        // the smaller sample (the U deviation is the same from either side,
        // since U1 + U2 = n1*n2) and count those at least as extreme.
        let k = n1.min(n2);
        let k_mu = (k * (n - k)) as f64 / 2.0;
        let k_offset = (k * (k + 1)) as f64 / 2.0;

        fn next_combination(choose: &mut [usize], n: usize) -> bool {
            let k = choose.len();
            let mut i = k;
            while i > 0 {
                i -= 1;
                if choose[i] != i + n - k {
                    choose[i] += 1;
                    for j in i + 1..k {
                        choose[j] = choose[j - 1] + 1;
                    }
                    return true;
                }
            }
            false
        }

        let mut choose: Vec<usize> = (0..k).collect();
        let mut extreme: u64 = 0;
        let mut total: u64 = 0;
        loop {
            let rsum: f64 = choose.iter().map(|&i| ranks[i]).sum();
            let u = rsum - k_offset;
            if (u - k_mu).abs() >= observed_dev - 1e-9 {
                extreme += 1;
            }
            total += 1;
            if !next_combination(&mut choose, n) {
                break;
            }
        }
        return Ok(extreme as f64 / total as f64);
    }

    // Normal approximation with tie correction.
    let mut tie_term = 0.0;
    {
        let mut sorted = ranks.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut i = 0;
        while i < n {
            let mut j = i + 1;
            while j < n && sorted[j] == sorted[i] {
                j += 1;
            }
            let t = (j - i) as f64;
            tie_term += t * t * t - t;
            i = j;
        }
    }
    let n_f = n as f64;
    let variance =
        (n1 as f64 * n2 as f64 / 12.0) * ((n_f + 1.0) - tie_term / (n_f * (n_f - 1.0)));
    if variance <= 0.0 {
        return Ok(1.0);
    }
    let z = ((observed_dev - 0.5).max(0.0)) / variance.sqrt();
    let p = 2.0 * (1.0 - std_normal().cdf(z));
    Ok(p.min(1.0))
}

/// Vargha-Delaney A: the probability that a draw from `x` exceeds a draw
/// from `y`, counting ties as half.
pub fn vda(x: &[f64], y: &[f64]) -> Result<f64, EvaluationError> {
    if x.is_empty() || y.is_empty() {
        return Err(EvaluationError::EmptySample);
    }
    let mut wins = 0.0;
    for &a in x {
        for &b in y {
            if a > b {
                wins += 1.0;
            } else if a == b {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (x.len() * y.len()) as f64)
}

/// Conventional interpretation of an A value, by distance from 0.5.
pub fn vda_magnitude(a: f64) -> &'static str {
    let scaled = a.max(1.0 - a);
    if scaled < 0.56 {
        "negligible"
    } else if scaled < 0.64 {
        "small"
    } else if scaled < 0.71 {
        "medium"
    } else {
        "large"
    }
}

/// Bias-corrected and accelerated bootstrap confidence interval for the
/// mean: bias correction from the fraction of replicates below the observed
/// mean, acceleration from jackknife skewness. Deterministic per seed.
///
/// An all-equal sample collapses the interval to the point.
pub fn bootstrap_ci_mean(
    x: &[f64],
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<(f64, f64), EvaluationError> {
    let n = x.len();
    if n < 2 {
        return Err(EvaluationError::SampleTooSmall(n));
    }
    let total: f64 = x.iter().sum();
    let mean = total / n as f64;
    if x.iter().all(|&v| v == x[0]) {
        return Ok((mean, mean));
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut boots = Vec::with_capacity(replicates);
    for _ in 0..replicates {
        let mut sum = 0.0;
        for _ in 0..n {
            sum += x[rng.gen_range(0..n)];
        }
        boots.push(sum / n as f64);
    }

    let below = boots.iter().filter(|&&b| b < mean).count() as f64;
    let b = replicates as f64;
    let p0 = (below / b).clamp(1.0 / (b + 1.0), b / (b + 1.0));
    let normal = std_normal();
    let z0 = normal.inverse_cdf(p0);

    // Jackknife acceleration from leave-one-out means.
    let jack: Vec<f64> = x.iter().map(|&v| (total - v) / (n as f64 - 1.0)).collect();
    let jack_mean = jack.iter().sum::<f64>() / n as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for &j in &jack {
        let d = jack_mean - j;
        num += d * d * d;
        den += d * d;
    }
    let accel = if den == 0.0 {
        0.0
    } else {
        num / (6.0 * den.powf(1.5))
    };

    let alpha = (1.0 - level) / 2.0;
    let adjusted = |z_alpha: f64| -> f64 {
        let t = z0 + z_alpha;
        normal.cdf(z0 + t / (1.0 - accel * t))
    };
    let a_lo = adjusted(normal.inverse_cdf(alpha));
    let a_hi = adjusted(normal.inverse_cdf(1.0 - alpha));

    boots.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let quantile = |p: f64| -> f64 {
        let rank = (p * replicates as f64).ceil() as usize;
        boots[rank.clamp(1, replicates) - 1]
    };
    Ok((quantile(a_lo), quantile(a_hi)))
}

/// One suite version to prioritize and score.
#[derive(Debug, Clone)]
pub struct ExperimentInput {
    pub suite_label: String,
    pub version: String,
    pub suite: TestSuite,
    pub faults: FaultMatrix,
}

/// How summary statistics aggregate rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Grouping {
    /// One summary per technique over every round of every suite.
    Pooled,
    /// One summary per (suite, technique).
    PerSuite,
}

impl Grouping {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pooled" => Some(Grouping::Pooled),
            "per-suite" | "suite" => Some(Grouping::PerSuite),
            _ => None,
        }
    }
}

/// Experiment-wide knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub techniques: Vec<Technique>,
    /// One execution round per (input, seed); the random baseline is
    /// re-seeded per round, deterministic techniques ignore the seed.
    pub seeds: Vec<u64>,
    pub params: TechniqueParams,
    pub bootstrap_replicates: usize,
    pub bootstrap_seed: u64,
    pub significance_level: f64,
    pub grouping: Grouping,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            techniques: Technique::ALL.to_vec(),
            seeds: vec![0],
            params: TechniqueParams::default(),
            bootstrap_replicates: 1000,
            bootstrap_seed: 0,
            significance_level: 0.05,
            grouping: Grouping::Pooled,
        }
    }
}

/// One technique execution on one (suite, seed) round.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundRecord {
    pub suite: String,
    pub version: String,
    pub technique: String,
    pub seed: u64,
    pub apfd: f64,
    pub prep_seconds: f64,
    pub algo_seconds: f64,
}

/// Pairwise statistical comparison of two techniques' APFD samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub technique_a: String,
    pub technique_b: String,
    pub p_value: f64,
    pub vda: f64,
    pub significant: bool,
    pub magnitude: String,
    pub mean_a: f64,
    pub ci_a: (f64, f64),
    pub mean_b: f64,
    pub ci_b: (f64, f64),
}

/// Mean APFD and AMET with confidence intervals for one technique within
/// one group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TechniqueSummary {
    pub group: String,
    pub technique: String,
    pub rounds: usize,
    pub mean_apfd: f64,
    pub apfd_ci: (f64, f64),
    pub mean_amet_seconds: f64,
    pub amet_ci: (f64, f64),
}

/// One cell of the per-suite VDA-versus-random table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VdaCell {
    pub suite: String,
    pub technique: String,
    pub vda_vs_rnd: f64,
}

/// Everything an experiment produces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rounds: Vec<RoundRecord>,
    pub comparisons: Vec<ComparisonReport>,
    pub summaries: Vec<TechniqueSummary>,
    pub vda_vs_rnd: Vec<VdaCell>,
}

impl ExperimentReport {
    /// Zeroes all wall-clock fields so reruns serialize byte-identically.
    pub fn without_timing(mut self) -> Self {
        for r in &mut self.rounds {
            r.prep_seconds = 0.0;
            r.algo_seconds = 0.0;
        }
        for s in &mut self.summaries {
            s.mean_amet_seconds = 0.0;
            s.amet_ci = (0.0, 0.0);
        }
        self
    }

    /// Sample of APFD values for one technique, in round order.
    pub fn apfd_sample(&self, technique: &str) -> Vec<f64> {
        self.rounds
            .iter()
            .filter(|r| r.technique == technique)
            .map(|r| r.apfd)
            .collect()
    }

    /// Mean AMET (prep + algo) for one technique.
    pub fn mean_amet(&self, technique: &str) -> Option<f64> {
        let times: Vec<f64> = self
            .rounds
            .iter()
            .filter(|r| r.technique == technique)
            .map(|r| r.prep_seconds + r.algo_seconds)
            .collect();
        if times.is_empty() {
            None
        } else {
            Some(times.iter().sum::<f64>() / times.len() as f64)
        }
    }
}

/// Runs every technique over every (input, seed) round and assembles
/// rounds, pairwise comparisons, grouped summaries, and the per-suite
/// VDA-versus-random table.
///
/// Deterministic techniques execute once per input and their APFD and
/// timing are replicated across that input's rounds.
pub fn run_experiment(
    inputs: &[ExperimentInput],
    config: &ExperimentConfig,
    compressor: &dyn Compressor,
) -> Result<ExperimentReport, EvaluationError> {
    if inputs.is_empty() {
        return Err(EvaluationError::NoInputs);
    }
    let seeds: &[u64] = if config.seeds.is_empty() {
        &[0]
    } else {
        &config.seeds
    };
    let mut techniques = Vec::new();
    for t in &config.techniques {
        if !techniques.contains(t) {
            techniques.push(*t);
        }
    }

    let mut rounds = Vec::new();
    for input in inputs {
        for &technique in &techniques {
            let mut cached: Option<PrioritizedOrder> = None;
            for &seed in seeds {
                let order = if technique.is_seeded() {
                    run_technique(&input.suite, technique, &config.params, compressor, seed)?
                } else if let Some(prev) = &cached {
                    prev.clone()
                } else {
                    let order = run_technique(
                        &input.suite,
                        technique,
                        &config.params,
                        compressor,
                        seed,
                    )?;
                    cached = Some(order.clone());
                    order
                };
                let score = apfd(&order, &input.faults)?;
                rounds.push(RoundRecord {
                    suite: input.suite_label.clone(),
                    version: input.version.clone(),
                    technique: technique.acronym().to_string(),
                    seed,
                    apfd: score.apfd,
                    prep_seconds: order.prep_seconds,
                    algo_seconds: order.algo_seconds,
                });
            }
        }
    }

    let sample = |technique: Technique, suite: Option<&str>| -> (Vec<f64>, Vec<f64>) {
        let mut apfds = Vec::new();
        let mut amets = Vec::new();
        for r in &rounds {
            if r.technique == technique.acronym()
                && suite.is_none_or(|s| r.suite == s)
            {
                apfds.push(r.apfd);
                amets.push(r.prep_seconds + r.algo_seconds);
            }
        }
        (apfds, amets)
    };

    // Pairwise comparisons over pooled samples, every unordered pair.
    let mut comparisons = Vec::new();
    let mut ci_counter = 0u64;
    let mut next_ci_seed = || {
        ci_counter += 1;
        config
            .bootstrap_seed
            .wrapping_add(ci_counter.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    };
    let ci_of = |xs: &[f64], seed: u64| -> Result<(f64, f64), EvaluationError> {
        if xs.len() < 2 {
            let v = xs.first().copied().unwrap_or(f64::NAN);
            return Ok((v, v));
        }
        bootstrap_ci_mean(xs, config.bootstrap_replicates, 0.95, seed)
    };
    for i in 0..techniques.len() {
        for j in i + 1..techniques.len() {
            let (a, _) = sample(techniques[i], None);
            let (b, _) = sample(techniques[j], None);
            let p_value = mann_whitney_u(&a, &b)?;
            let effect = vda(&a, &b)?;
            let mean_a = a.iter().sum::<f64>() / a.len() as f64;
            let mean_b = b.iter().sum::<f64>() / b.len() as f64;
            comparisons.push(ComparisonReport {
                technique_a: techniques[i].acronym().to_string(),
                technique_b: techniques[j].acronym().to_string(),
                p_value,
                vda: effect,
                significant: p_value < config.significance_level,
                magnitude: vda_magnitude(effect).to_string(),
                mean_a,
                ci_a: ci_of(&a, next_ci_seed())?,
                mean_b,
                ci_b: ci_of(&b, next_ci_seed())?,
            });
        }
    }

    // Grouped mean/CI summaries.
    let groups: Vec<Option<String>> = match config.grouping {
        Grouping::Pooled => vec![None],
        Grouping::PerSuite => {
            let mut seen = Vec::new();
            for input in inputs {
                if !seen.contains(&input.suite_label) {
                    seen.push(input.suite_label.clone());
                }
            }
            seen.into_iter().map(Some).collect()
        }
    };
    let mut summaries = Vec::new();
    for group in &groups {
        for &technique in &techniques {
            let (apfds, amets) = sample(technique, group.as_deref());
            if apfds.is_empty() {
                continue;
            }
            let mean_apfd = apfds.iter().sum::<f64>() / apfds.len() as f64;
            let mean_amet = amets.iter().sum::<f64>() / amets.len() as f64;
            summaries.push(TechniqueSummary {
                group: group.clone().unwrap_or_else(|| "pooled".to_string()),
                technique: technique.acronym().to_string(),
                rounds: apfds.len(),
                mean_apfd,
                apfd_ci: ci_of(&apfds, next_ci_seed())?,
                mean_amet_seconds: mean_amet,
                amet_ci: ci_of(&amets, next_ci_seed())?,
            });
        }
    }

    // Per-suite VDA against the random baseline, when it was run.
    let mut vda_vs_rnd = Vec::new();
    if techniques.contains(&Technique::Rnd) {
        let mut suites = Vec::new();
        for input in inputs {
            if !suites.contains(&input.suite_label) {
                suites.push(input.suite_label.clone());
            }
        }
        for suite in &suites {
            let (rnd, _) = sample(Technique::Rnd, Some(suite));
            for &technique in &techniques {
                if technique == Technique::Rnd {
                    continue;
                }
                let (tech, _) = sample(technique, Some(suite));
                vda_vs_rnd.push(VdaCell {
                    suite: suite.clone(),
                    technique: technique.acronym().to_string(),
                    vda_vs_rnd: vda(&tech, &rnd)?,
                });
            }
        }
    }

    Ok(ExperimentReport {
        rounds,
        comparisons,
        summaries,
        vda_vs_rnd,
    })
}

/// `suite,version,technique,seed,apfd,prep_seconds,algo_seconds`, one row
/// per execution round.
pub fn rounds_csv(rounds: &[RoundRecord]) -> String {
    let mut out = String::from("suite,version,technique,seed,apfd,prep_seconds,algo_seconds\n");
    for r in rounds {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.suite, r.version, r.technique, r.seed, r.apfd, r.prep_seconds, r.algo_seconds
        ));
    }
    out
}

/// Per-suite VDA-versus-random table: one row per suite, one column per
/// technique.
pub fn vda_table_csv(report: &ExperimentReport) -> String {
    let mut techniques = Vec::new();
    let mut suites = Vec::new();
    for cell in &report.vda_vs_rnd {
        if !techniques.contains(&cell.technique) {
            techniques.push(cell.technique.clone());
        }
        if !suites.contains(&cell.suite) {
            suites.push(cell.suite.clone());
        }
    }
    let by_key: BTreeMap<(&str, &str), f64> = report
        .vda_vs_rnd
        .iter()
        .map(|c| ((c.suite.as_str(), c.technique.as_str()), c.vda_vs_rnd))
        .collect();
    let mut out = String::from("suite");
    for t in &techniques {
        out.push(',');
        out.push_str(t);
    }
    out.push('\n');
    for suite in &suites {
        out.push_str(suite);
        for t in &techniques {
            out.push(',');
            match by_key.get(&(suite.as_str(), t.as_str())) {
                Some(v) => out.push_str(&format!("{v:.2}")),
                None => out.push_str(""),
            }
        }
        out.push('\n');
    }
    out
}

/// Mean APFD with its confidence interval, per group and technique.
pub fn apfd_summary_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("group,technique,rounds,mean_apfd,ci_low,ci_high\n");
    for s in &report.summaries {
        out.push_str(&format!(
            "{},{},{},{:.2},{:.2},{:.2}\n",
            s.group, s.technique, s.rounds, s.mean_apfd, s.apfd_ci.0, s.apfd_ci.1
        ));
    }
    out
}

/// Mean AMET (seconds) with its confidence interval, per group and
/// technique.
pub fn amet_summary_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("group,technique,rounds,mean_amet_seconds,ci_low,ci_high\n");
    for s in &report.summaries {
        out.push_str(&format!(
            "{},{},{},{:.4},{:.4},{:.4}\n",
            s.group, s.technique, s.rounds, s.mean_amet_seconds, s.amet_ci.0, s.amet_ci.1
        ));
    }
    out
}
