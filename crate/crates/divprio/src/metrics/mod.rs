//! Pairwise distances between test cases: Manhattan on byte-code vectors,
//! Jaccard on shingle sets, and normalized compression distance, plus the
//! min-aggregation distance from a test to a set.

mod matrix;

pub use matrix::{
    build_distance_matrix, cached_distance_matrix, suite_content_hash, DistanceMatrix, Metric,
};

use std::cell::RefCell;

use crate::corpus::{NumericVector, ShingleSet, TestCase};
use crate::error::MetricsError;

/// Sum of absolute differences between corresponding components, with the
/// shorter vector zero-padded. The tail of the longer vector therefore
/// contributes its own byte values.
pub fn manhattan(a: &NumericVector, b: &NumericVector) -> f64 {
    let (x, y) = (a.values(), b.values());
    let common = x.len().min(y.len());
    let mut sum: u64 = x[..common]
        .iter()
        .zip(&y[..common])
        .map(|(&p, &q)| u64::from(p.abs_diff(q)))
        .sum();
    sum += x[common..].iter().map(|&v| u64::from(v)).sum::<u64>();
    sum += y[common..].iter().map(|&v| u64::from(v)).sum::<u64>();
    sum as f64
}

/// Jaccard distance `1 - |a ∩ b| / |a ∪ b|` between two shingle sets.
///
/// Two empty sets are treated as identical (distance 0), the least
/// surprising total extension of the 0/0 case.
pub fn jaccard_distance(a: &ShingleSet, b: &ShingleSet) -> Result<f64, MetricsError> {
    if a.k() != b.k() {
        return Err(MetricsError::ShingleKMismatch { a: a.k(), b: b.k() });
    }
    if a.is_empty() && b.is_empty() {
        return Ok(0.0);
    }
    let inter = a.intersection_len(b);
    let union = a.len() + b.len() - inter;
    Ok(1.0 - inter as f64 / union as f64)
}

/// Approximates Kolmogorov complexity by compressed length.
///
/// Implementations must be deterministic: identical input, identical length,
/// across runs and platforms.
pub trait Compressor: Send + Sync {
    fn name(&self) -> &str;

    /// Length in bytes of the compressed form of `data`.
    fn compress_len(&self, data: &[u8]) -> Result<usize, MetricsError>;
}

/// The bundled high-speed default: raw LZ4 block compression at the default
/// (fast) level, no frame header, no checksums. A fixed parameter set keeps
/// compressed lengths bit-reproducible across runs.
#[derive(Debug, Clone, Copy, Default)]
pub struct Lz4Compressor;

impl Compressor for Lz4Compressor {
    fn name(&self) -> &str {
        "lz4"
    }

    fn compress_len(&self, data: &[u8]) -> Result<usize, MetricsError> {
        thread_local! {
            static SCRATCH: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
        }
        SCRATCH.with(|scratch| {
            let mut buf = scratch.borrow_mut();
            let max = lz4_flex::block::get_maximum_output_size(data.len());
            if buf.len() < max {
                buf.resize(max, 0);
            }
            lz4_flex::block::compress_into(data, &mut buf).map_err(|e| {
                MetricsError::Compressor {
                    name: "lz4".to_string(),
                    message: e.to_string(),
                }
            })
        })
    }
}

/// Normalized compression distance
/// `(C(xy) - min(C(x), C(y))) / max(C(x), C(y))`.
///
/// The concatenation is taken in a canonical order (lexicographically
/// smaller byte sequence first), so the result is exactly symmetric in its
/// arguments even though real compressors are order-sensitive. Values above
/// 1.2 are reported unclamped with a warning; real compressors can slightly
/// exceed 1 on incompressible inputs.
///
/// Self-distance with the bundled lz4 compressor: for documents made of
/// distinct lines (the shape of real test sources) the measured bound is
/// `ncd(x, x) <= 0.20` (worst observed 0.179 over 30k samples, 50 B - 6 KiB;
/// ~0.03 for multi-KiB files). Internally repetitive inputs are a known
/// blind spot of the fast-LZ4 matcher, whose recency-only hash table then
/// re-compresses a second copy instead of referencing the first; adversarial
/// low-entropy inputs measured up to `ncd(x, x) = 1.10`.
pub fn ncd(a: &[u8], b: &[u8], compressor: &dyn Compressor) -> Result<f64, MetricsError> {
    let (x, y) = if a <= b { (a, b) } else { (b, a) };
    let cx = compressor.compress_len(x)?;
    let cy = compressor.compress_len(y)?;
    let mut joined = Vec::with_capacity(x.len() + y.len());
    joined.extend_from_slice(x);
    joined.extend_from_slice(y);
    let cxy = compressor.compress_len(&joined)?;
    Ok(ncd_from_lengths(cx, cy, cxy))
}

pub(crate) fn ncd_from_lengths(cx: usize, cy: usize, cxy: usize) -> f64 {
    let cmin = cx.min(cy) as f64;
    let cmax = cx.max(cy) as f64;
    if cmax == 0.0 {
        return 0.0;
    }
    let value = (cxy as f64 - cmin) / cmax;
    if value > 1.2 {
        log::warn!(
            "ncd value {value:.4} exceeds 1.2 (C(x)={cx}, C(y)={cy}, C(xy)={cxy}); reporting unclamped"
        );
    }
    value
}

/// Marginal compressed size of a candidate given the already-prioritized
/// set: `C(concat(prioritized) · candidate) - C(concat(prioritized))`.
///
/// A larger score means the candidate shares less information with the set.
/// Stream compressors can produce a slightly negative score on pathological
/// inputs; that is logged rather than treated as an error.
pub fn ncd_ms_score(
    candidate: &TestCase,
    prioritized: &[&TestCase],
    compressor: &dyn Compressor,
) -> Result<f64, MetricsError> {
    let ps_len: usize = prioritized.iter().map(|t| t.len()).sum();
    let mut buf = Vec::with_capacity(ps_len + candidate.len());
    for t in prioritized {
        buf.extend_from_slice(t.source());
    }
    let c_ps = compressor.compress_len(&buf)?;
    buf.extend_from_slice(candidate.source());
    let c_joint = compressor.compress_len(&buf)?;
    let score = c_joint as f64 - c_ps as f64;
    if score < 0.0 {
        log::warn!(
            "negative marginal compressed size {score} for candidate {:?}",
            candidate.id()
        );
    }
    Ok(score)
}

/// Distance from a test to a set of tests: the minimum matrix entry between
/// `t` and the members, with `t` itself excluded.
pub fn distance_to_set<'a>(
    t: &str,
    members: impl IntoIterator<Item = &'a str>,
    matrix: &DistanceMatrix,
) -> Result<f64, MetricsError> {
    let ti = matrix
        .index_of(t)
        .ok_or_else(|| MetricsError::UnknownMatrixId(t.to_string()))?;
    let mut best: Option<f64> = None;
    for member in members {
        if member == t {
            continue;
        }
        let mi = matrix
            .index_of(member)
            .ok_or_else(|| MetricsError::UnknownMatrixId(member.to_string()))?;
        let d = matrix.get(ti, mi);
        best = Some(match best {
            Some(b) if b <= d => b,
            _ => d,
        });
    }
    best.ok_or_else(|| MetricsError::EmptyDistanceSet { id: t.to_string() })
}
