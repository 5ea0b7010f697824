//! Symmetric pairwise distance matrices: construction, CSV export, and a
//! binary cache keyed by (metric, params, suite content hash).

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::corpus::{to_numeric_vector, to_shingle_set, TestSuite};
use crate::error::MetricsError;
use crate::metrics::{jaccard_distance, manhattan, ncd_from_lengths, Compressor};

/// Which pairwise distance to compute, with its parameters.
#[derive(Clone, Copy)]
pub enum Metric<'a> {
    Manhattan,
    Jaccard { k: usize },
    Ncd { compressor: &'a dyn Compressor },
}

impl Metric<'_> {
    pub fn label(&self) -> &'static str {
        match self {
            Metric::Manhattan => "manhattan",
            Metric::Jaccard { .. } => "jaccard",
            Metric::Ncd { .. } => "ncd",
        }
    }

    pub fn params_string(&self) -> String {
        match self {
            Metric::Manhattan => String::new(),
            Metric::Jaccard { k } => format!("k={k}"),
            Metric::Ncd { compressor } => format!("compressor={}", compressor.name()),
        }
    }
}

/// A symmetric n x n matrix of pairwise distances under one metric, with
/// provenance. The diagonal is zero and only one triangle is ever computed;
/// the other is mirrored, so symmetry holds exactly.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    metric: String,
    params: String,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from explicit rows, validating shape, symmetry, and a
    /// zero diagonal. Useful for fixtures and reference oracles.
    pub fn from_values(
        metric: impl Into<String>,
        params: impl Into<String>,
        ids: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self, MetricsError> {
        let n = ids.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(MetricsError::MatrixShape {
                ids: n,
                rows: rows.len(),
            });
        }
        for (i, row) in rows.iter().enumerate() {
            if row[i] != 0.0 {
                return Err(MetricsError::MatrixDiagonal { i, value: row[i] });
            }
            for (j, &v) in row.iter().enumerate().skip(i + 1) {
                if v != rows[j][i] {
                    return Err(MetricsError::MatrixAsymmetry {
                        i,
                        j,
                        a: v,
                        b: rows[j][i],
                    });
                }
            }
        }
        let data = rows.into_iter().flatten().collect();
        Ok(Self::assemble(metric.into(), params.into(), ids, data))
    }

    fn assemble(metric: String, params: String, ids: Vec<String>, data: Vec<f64>) -> Self {
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        Self {
            metric,
            params,
            ids,
            index,
            data,
        }
    }

    pub fn metric(&self) -> &str {
        &self.metric
    }

    pub fn params(&self) -> &str {
        &self.params
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Distance between positions `i` and `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ids.len() + j]
    }

    pub fn get_by_id(&self, a: &str, b: &str) -> Result<f64, MetricsError> {
        let i = self
            .index_of(a)
            .ok_or_else(|| MetricsError::UnknownMatrixId(a.to_string()))?;
        let j = self
            .index_of(b)
            .ok_or_else(|| MetricsError::UnknownMatrixId(b.to_string()))?;
        Ok(self.get(i, j))
    }

    /// Writes the matrix as CSV with a header row and a leading id column.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        write!(w, "id")?;
        for id in &self.ids {
            write!(w, ",{id}")?;
        }
        writeln!(w)?;
        for (i, id) in self.ids.iter().enumerate() {
            write!(w, "{id}")?;
            for j in 0..self.ids.len() {
                write!(w, ",{}", self.get(i, j))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = Vec::new();
        self.write_csv(&mut out).expect("write to vec");
        String::from_utf8(out).expect("csv is utf-8")
    }

    const CACHE_MAGIC: &'static [u8; 8] = b"DPDMAT\x01\n";

    /// Writes the compact binary cache form.
    pub fn write_cache(&self, path: impl AsRef<Path>, suite_hash: &str) -> Result<(), MetricsError> {
        let path = path.as_ref();
        let mut out = Vec::new();
        out.extend_from_slice(Self::CACHE_MAGIC);
        for field in [&self.metric, &self.params, &suite_hash.to_string()] {
            out.extend_from_slice(&(field.len() as u32).to_le_bytes());
            out.extend_from_slice(field.as_bytes());
        }
        out.extend_from_slice(&(self.ids.len() as u64).to_le_bytes());
        for id in &self.ids {
            out.extend_from_slice(&(id.len() as u32).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(path, out).map_err(|source| MetricsError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Reads a cache file back, returning `None` when the stored key
    /// (metric, params, suite hash) does not match the expected one.
    pub fn read_cache(
        path: impl AsRef<Path>,
        metric: &str,
        params: &str,
        suite_hash: &str,
    ) -> Result<Option<Self>, MetricsError> {
        struct Cursor<'a> {
            bytes: &'a [u8],
            at: usize,
        }
        impl<'a> Cursor<'a> {
            fn take(&mut self, n: usize) -> Option<&'a [u8]> {
                let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len())?;
                let slice = &self.bytes[self.at..end];
                self.at = end;
                Some(slice)
            }
            fn str_field(&mut self) -> Option<&'a str> {
                let len = u32::from_le_bytes(self.take(4)?.try_into().ok()?) as usize;
                std::str::from_utf8(self.take(len)?).ok()
            }
        }

        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|source| MetricsError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let corrupt = |message: &str| MetricsError::Cache {
            path: path.to_path_buf(),
            message: message.to_string(),
        };

        let mut cur = Cursor {
            bytes: &bytes,
            at: 0,
        };
        if cur.take(8) != Some(Self::CACHE_MAGIC.as_slice()) {
            return Err(corrupt("bad magic"));
        }
        let stored_metric = cur.str_field().ok_or_else(|| corrupt("truncated key"))?;
        let stored_params = cur.str_field().ok_or_else(|| corrupt("truncated key"))?;
        let stored_hash = cur.str_field().ok_or_else(|| corrupt("truncated key"))?;
        if stored_metric != metric || stored_params != params || stored_hash != suite_hash {
            return Ok(None);
        }
        let n = u64::from_le_bytes(
            cur.take(8)
                .ok_or_else(|| corrupt("truncated size"))?
                .try_into()
                .unwrap(),
        ) as usize;
        let mut ids = Vec::with_capacity(n);
        for _ in 0..n {
            ids.push(
                cur.str_field()
                    .ok_or_else(|| corrupt("truncated ids"))?
                    .to_string(),
            );
        }
        let mut data = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            let raw = cur.take(8).ok_or_else(|| corrupt("truncated data"))?;
            data.push(f64::from_le_bytes(raw.try_into().unwrap()));
        }
        if cur.at != bytes.len() {
            return Err(corrupt("trailing bytes"));
        }
        Ok(Some(Self::assemble(
            metric.to_string(),
            params.to_string(),
            ids,
            data,
        )))
    }
}

/// SHA-256 over ids and source bytes, in suite order. Any change to ids,
/// ordering, or content changes the hash.
pub fn suite_content_hash(suite: &TestSuite) -> String {
    let mut hasher = Sha256::new();
    for case in suite.cases() {
        hasher.update((case.id().len() as u64).to_le_bytes());
        hasher.update(case.id().as_bytes());
        hasher.update((case.len() as u64).to_le_bytes());
        hasher.update(case.source());
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Computes the full pairwise distance matrix for a suite.
///
/// Only the upper triangle is computed (pairs fan out to the rayon pool);
/// the result is identical for any worker count.
pub fn build_distance_matrix(
    suite: &TestSuite,
    metric: Metric<'_>,
) -> Result<DistanceMatrix, MetricsError> {
    let n = suite.len();
    let ids: Vec<String> = suite.ids().map(str::to_string).collect();

    let triangle: Vec<Vec<f64>> = match metric {
        Metric::Manhattan => {
            let vectors: Vec<_> = suite.cases().iter().map(to_numeric_vector).collect();
            (0..n)
                .into_par_iter()
                .map(|i| {
                    (i + 1..n)
                        .map(|j| Ok(manhattan(&vectors[i], &vectors[j])))
                        .collect::<Result<Vec<_>, MetricsError>>()
                })
                .collect::<Result<_, _>>()?
        }
        Metric::Jaccard { k } => {
            let sets: Vec<_> = suite
                .cases()
                .par_iter()
                .map(|c| to_shingle_set(c, k))
                .collect();
            (0..n)
                .into_par_iter()
                .map(|i| {
                    (i + 1..n)
                        .map(|j| jaccard_distance(&sets[i], &sets[j]))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<_, _>>()?
        }
        Metric::Ncd { compressor } => {
            let standalone: Vec<usize> = suite
                .cases()
                .par_iter()
                .map(|c| compressor.compress_len(c.source()))
                .collect::<Result<_, _>>()?;
            (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut joined = Vec::new();
                    (i + 1..n)
                        .map(|j| {
                            let (a, b) = (suite.cases()[i].source(), suite.cases()[j].source());
                            let (x, y) = if a <= b { (a, b) } else { (b, a) };
                            joined.clear();
                            joined.extend_from_slice(x);
                            joined.extend_from_slice(y);
                            let cxy = compressor.compress_len(&joined)?;
                            Ok(ncd_from_lengths(standalone[i], standalone[j], cxy))
                        })
                        .collect::<Result<Vec<_>, MetricsError>>()
                })
                .collect::<Result<_, _>>()?
        }
    };

    let mut data = vec![0.0; n * n];
    for (i, row) in triangle.iter().enumerate() {
        for (offset, &v) in row.iter().enumerate() {
            let j = i + 1 + offset;
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    Ok(DistanceMatrix::assemble(
        metric.label().to_string(),
        metric.params_string(),
        ids,
        data,
    ))
}

/// Loads the matrix from `cache_path` when its key matches, otherwise builds
/// it and writes the cache. Returns the matrix and whether it came from the
/// cache.
pub fn cached_distance_matrix(
    suite: &TestSuite,
    metric: Metric<'_>,
    cache_path: impl AsRef<Path>,
) -> Result<(DistanceMatrix, bool), MetricsError> {
    let cache_path = cache_path.as_ref();
    let hash = suite_content_hash(suite);
    if cache_path.exists() {
        if let Some(matrix) = DistanceMatrix::read_cache(
            cache_path,
            metric.label(),
            &metric.params_string(),
            &hash,
        )? {
            return Ok((matrix, true));
        }
    }
    let matrix = build_distance_matrix(suite, metric)?;
    matrix.write_cache(cache_path, &hash)?;
    Ok((matrix, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TestCase;
    use crate::metrics::{ncd, Lz4Compressor};
    use rand::{Rng, SeedableRng};

    fn random_suite(seed: u64, n: usize, max_len: usize) -> TestSuite {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let cases = (0..n)
            .map(|i| {
                let len = rng.gen_range(0..max_len);
                let bytes: Vec<u8> = (0..len).map(|_| rng.gen_range(b' '..=b'~')).collect();
                TestCase::new(format!("t{i:03}"), bytes)
            })
            .collect();
        TestSuite::new(Some(format!("random-{seed}")), cases).unwrap()
    }

    #[test]
    fn single_test_suite_yields_zero_matrix() {
        let suite = TestSuite::new(None, vec![TestCase::new("only", b"x".to_vec())]).unwrap();
        let m = build_distance_matrix(&suite, Metric::Manhattan).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn matrix_is_symmetric_with_zero_diagonal() {
        let suite = random_suite(1, 12, 400);
        for metric in [
            Metric::Manhattan,
            Metric::Jaccard { k: 5 },
            Metric::Ncd {
                compressor: &Lz4Compressor,
            },
        ] {
            let m = build_distance_matrix(&suite, metric).unwrap();
            for i in 0..m.len() {
                assert_eq!(m.get(i, i), 0.0);
                for j in 0..m.len() {
                    assert_eq!(m.get(i, j), m.get(j, i));
                }
            }
        }
    }

    #[test]
    fn matrix_entries_match_per_pair_recomputation() {
        let suite = random_suite(2, 10, 300);
        let c = Lz4Compressor;
        let m = build_distance_matrix(&suite, Metric::Ncd { compressor: &c }).unwrap();
        for i in 0..suite.len() {
            for j in 0..suite.len() {
                let expected = if i == j {
                    0.0
                } else {
                    ncd(
                        suite.cases()[i].source(),
                        suite.cases()[j].source(),
                        &c,
                    )
                    .unwrap()
                };
                assert_eq!(m.get(i, j), expected, "mismatch at ({i}, {j})");
            }
        }
    }

    #[test]
    fn matrix_is_identical_across_pool_sizes() {
        let suite = random_suite(3, 16, 500);
        let build = || {
            build_distance_matrix(
                &suite,
                Metric::Ncd {
                    compressor: &Lz4Compressor,
                },
            )
            .unwrap()
        };
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(build);
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(build);
        assert_eq!(single.ids(), multi.ids());
        for i in 0..single.len() {
            for j in 0..single.len() {
                assert_eq!(single.get(i, j).to_bits(), multi.get(i, j).to_bits());
            }
        }
    }

    #[test]
    fn from_values_rejects_asymmetry_and_nonzero_diagonal() {
        let ids = vec!["a".to_string(), "b".to_string()];
        assert!(matches!(
            DistanceMatrix::from_values(
                "toy",
                "",
                ids.clone(),
                vec![vec![0.0, 1.0], vec![2.0, 0.0]]
            ),
            Err(MetricsError::MatrixAsymmetry { .. })
        ));
        assert!(matches!(
            DistanceMatrix::from_values("toy", "", ids, vec![vec![1.0, 2.0], vec![2.0, 0.0]]),
            Err(MetricsError::MatrixDiagonal { .. })
        ));
    }

    #[test]
    fn csv_export_has_id_header_and_column() {
        let m = DistanceMatrix::from_values(
            "toy",
            "",
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 1.5], vec![1.5, 0.0]],
        )
        .unwrap();
        assert_eq!(m.to_csv_string(), "id,a,b\na,0,1.5\nb,1.5,0\n");
    }

    #[test]
    fn cache_round_trips_and_rejects_stale_key() {
        let suite = random_suite(4, 6, 200);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.dpdmat");

        let (built, from_cache) =
            cached_distance_matrix(&suite, Metric::Jaccard { k: 5 }, &path).unwrap();
        assert!(!from_cache);
        let (loaded, from_cache) =
            cached_distance_matrix(&suite, Metric::Jaccard { k: 5 }, &path).unwrap();
        assert!(from_cache);
        assert_eq!(built.ids(), loaded.ids());
        for i in 0..built.len() {
            for j in 0..built.len() {
                assert_eq!(built.get(i, j).to_bits(), loaded.get(i, j).to_bits());
            }
        }

        // Different k means a different key; the cache must be rebuilt.
        let (_, from_cache) =
            cached_distance_matrix(&suite, Metric::Jaccard { k: 4 }, &path).unwrap();
        assert!(!from_cache);

        // A different suite content invalidates the stored key too.
        let other = random_suite(5, 6, 200);
        let (_, from_cache) =
            cached_distance_matrix(&other, Metric::Jaccard { k: 4 }, &path).unwrap();
        assert!(!from_cache);
    }
}
