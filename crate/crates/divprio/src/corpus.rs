//! Test-suite ingestion: manifests, raw source bytes, derived representations,
//! and fault data.
//!
//! A suite is described by a JSON manifest (an array of `{"id", "path"}`
//! objects, order significant). Sources are read verbatim; every derived
//! representation ([`NumericVector`], [`ShingleSet`]) is computed from the
//! raw bytes so results do not depend on text encodings.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CorpusError;

/// One test artifact: an identifier plus the raw bytes of its source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    id: String,
    source: Vec<u8>,
}

impl TestCase {
    pub fn new(id: impl Into<String>, source: impl Into<Vec<u8>>) -> Self {
        Self {
            id: id.into(),
            source: source.into(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn source(&self) -> &[u8] {
        &self.source
    }

    /// Number of source bytes.
    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }
}

/// An ordered collection of test cases with unique ids.
///
/// The construction order is preserved: it is the identity permutation that
/// baselines and tie-breaking rules refer back to.
#[derive(Debug, Clone)]
pub struct TestSuite {
    name: Option<String>,
    cases: Vec<TestCase>,
    by_id: HashMap<String, usize>,
}

impl TestSuite {
    /// Builds a suite from cases, rejecting empty or duplicate ids.
    pub fn new(name: Option<String>, cases: Vec<TestCase>) -> Result<Self, CorpusError> {
        let mut by_id = HashMap::with_capacity(cases.len());
        for (idx, case) in cases.iter().enumerate() {
            if case.id.is_empty() {
                return Err(CorpusError::EmptyId { index: idx });
            }
            if by_id.insert(case.id.clone(), idx).is_some() {
                return Err(CorpusError::DuplicateId(case.id.clone()));
            }
        }
        Ok(Self { name, cases, by_id })
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn cases(&self) -> &[TestCase] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    /// Manifest position of a test id, if present.
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&TestCase> {
        self.index_of(id).map(|i| &self.cases[i])
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.cases.iter().map(|c| c.id())
    }
}

/// Optional source transforms applied at load time. Both default to off:
/// metrics normally see sources byte-exactly as stored on disk.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preprocessing {
    /// Collapse every run of ASCII whitespace to a single space.
    pub collapse_whitespace: bool,
    /// Map ASCII uppercase letters to lowercase.
    pub lowercase: bool,
}

impl Preprocessing {
    pub fn is_noop(&self) -> bool {
        !self.collapse_whitespace && !self.lowercase
    }

    pub fn apply(&self, source: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(source.len());
        let mut in_space = false;
        for &b in source {
            let b = if self.lowercase {
                b.to_ascii_lowercase()
            } else {
                b
            };
            if self.collapse_whitespace && b.is_ascii_whitespace() {
                if !in_space {
                    out.push(b' ');
                }
                in_space = true;
            } else {
                out.push(b);
                in_space = false;
            }
        }
        out
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    id: String,
    path: String,
}

/// Loads a suite from a JSON manifest, reading every source file verbatim.
///
/// Relative paths in the manifest are resolved against the manifest's
/// directory. The suite name is the manifest file stem.
pub fn load_suite(manifest_path: impl AsRef<Path>) -> Result<TestSuite, CorpusError> {
    load_suite_with(manifest_path, Preprocessing::default())
}

/// [`load_suite`] with explicit preprocessing flags.
pub fn load_suite_with(
    manifest_path: impl AsRef<Path>,
    prep: Preprocessing,
) -> Result<TestSuite, CorpusError> {
    let manifest_path = manifest_path.as_ref();
    let raw = fs::read(manifest_path).map_err(|source| CorpusError::Io {
        path: manifest_path.to_path_buf(),
        source,
    })?;
    let entries: Vec<ManifestEntry> =
        serde_json::from_slice(&raw).map_err(|source| CorpusError::ManifestParse {
            path: manifest_path.to_path_buf(),
            source,
        })?;
    if entries.is_empty() {
        return Err(CorpusError::EmptyManifest(manifest_path.to_path_buf()));
    }

    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut cases = Vec::with_capacity(entries.len());
    let mut seen: HashSet<&str> = HashSet::with_capacity(entries.len());
    for (idx, entry) in entries.iter().enumerate() {
        if entry.id.is_empty() {
            return Err(CorpusError::EmptyId { index: idx });
        }
        if !seen.insert(&entry.id) {
            return Err(CorpusError::DuplicateId(entry.id.clone()));
        }
        let path = base.join(&entry.path);
        let mut source = fs::read(&path).map_err(|source| CorpusError::MissingSource {
            id: entry.id.clone(),
            path: path.clone(),
            source,
        })?;
        if !prep.is_noop() {
            source = prep.apply(&source);
        }
        cases.push(TestCase::new(entry.id.clone(), source));
    }

    let name = manifest_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned());
    TestSuite::new(name, cases)
}

/// Writes a suite to `dir` as one source file per case plus `manifest.json`,
/// and returns the manifest path. Loading that manifest reproduces the suite
/// byte-exactly (ids, order, and contents).
pub fn save_suite(suite: &TestSuite, dir: impl AsRef<Path>) -> Result<PathBuf, CorpusError> {
    let dir = dir.as_ref();
    let sources = dir.join("sources");
    fs::create_dir_all(&sources).map_err(|source| CorpusError::Io {
        path: sources.clone(),
        source,
    })?;

    let mut entries = Vec::with_capacity(suite.len());
    for (idx, case) in suite.cases().iter().enumerate() {
        let rel = format!("sources/case_{idx:05}.bin");
        let path = dir.join(&rel);
        fs::write(&path, case.source()).map_err(|source| CorpusError::Io { path, source })?;
        entries.push(ManifestEntry {
            id: case.id().to_string(),
            path: rel,
        });
    }

    let manifest_path = dir.join("manifest.json");
    let json = serde_json::to_vec_pretty(&entries).expect("manifest entries serialize");
    fs::write(&manifest_path, json).map_err(|source| CorpusError::Io {
        path: manifest_path.clone(),
        source,
    })?;
    Ok(manifest_path)
}

/// A test source as a vector of numeric codes, one per byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumericVector(Vec<u8>);

impl NumericVector {
    pub fn values(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<u8>> for NumericVector {
    fn from(values: Vec<u8>) -> Self {
        Self(values)
    }
}

/// Replaces each source byte with its numeric code. Length is preserved.
pub fn to_numeric_vector(case: &TestCase) -> NumericVector {
    NumericVector(case.source().to_vec())
}

/// The set of distinct k-byte substrings of a source, stored as `u64` codes.
///
/// For `k <= 8` the code is a lossless big-endian packing of the window, so
/// set equality is exact. For `k > 8` windows are hashed to 64 bits and
/// distinct shingles may collide (vanishingly rare below ~2^32 shingles, but
/// possible).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShingleSet {
    k: usize,
    shingles: HashSet<u64>,
}

impl ShingleSet {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.shingles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shingles.is_empty()
    }

    pub fn codes(&self) -> &HashSet<u64> {
        &self.shingles
    }

    pub fn contains_window(&self, window: &[u8]) -> bool {
        window.len() == self.k && self.shingles.contains(&encode_shingle(window))
    }

    /// Builds a set directly from codes; mainly for constructing fixtures
    /// with a known exact Jaccard similarity.
    pub fn from_codes(k: usize, shingles: HashSet<u64>) -> Self {
        Self { k, shingles }
    }

    pub fn intersection_len(&self, other: &ShingleSet) -> usize {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .shingles
            .iter()
            .filter(|s| large.shingles.contains(*s))
            .count()
    }
}

/// Encodes one k-byte window as a `u64`: lossless packing for `k <= 8`,
/// an FNV-1a hash otherwise.
pub fn encode_shingle(window: &[u8]) -> u64 {
    if window.len() <= 8 {
        let mut v = 0u64;
        for &b in window {
            v = (v << 8) | u64::from(b);
        }
        v
    } else {
        let mut h = 0xcbf29ce484222325u64;
        for &b in window {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

/// The set of all distinct contiguous k-byte substrings of the source.
///
/// A source shorter than `k` yields an empty set (logged at warn level:
/// distances involving empty sets are still defined, but such stubs carry
/// no shingle signal).
pub fn to_shingle_set(case: &TestCase, k: usize) -> ShingleSet {
    assert!(k >= 1, "shingle length must be at least 1");
    let source = case.source();
    if source.len() < k {
        log::warn!(
            "test case {:?} is shorter than the shingle length (len {} < k {}); shingle set is empty",
            case.id(),
            source.len(),
            k
        );
        return ShingleSet {
            k,
            shingles: HashSet::new(),
        };
    }
    let mut shingles = HashSet::with_capacity(source.len() - k + 1);
    for window in source.windows(k) {
        shingles.insert(encode_shingle(window));
    }
    ShingleSet { k, shingles }
}

/// Ground truth for APFD: which tests detect which faults.
///
/// Load-time validation guarantees every referenced test exists in the suite
/// and every fault has at least one detecting test.
#[derive(Debug, Clone)]
pub struct FaultMatrix {
    fault_ids: Vec<String>,
    detects: HashMap<String, HashSet<String>>,
    test_ids: Vec<String>,
}

impl FaultMatrix {
    /// Builds a matrix from (fault, detecting tests) pairs, validated
    /// against the suite.
    pub fn new(
        faults: Vec<(String, HashSet<String>)>,
        suite: &TestSuite,
    ) -> Result<Self, CorpusError> {
        let mut fault_ids = Vec::with_capacity(faults.len());
        let mut detects: HashMap<String, HashSet<String>> = HashMap::with_capacity(faults.len());
        for (fault, tests) in faults {
            if tests.is_empty() {
                return Err(CorpusError::UndetectedFault(fault));
            }
            for test in &tests {
                if suite.index_of(test).is_none() {
                    return Err(CorpusError::UnknownTestId {
                        fault: fault.clone(),
                        test: test.clone(),
                    });
                }
            }
            match detects.entry(fault.clone()) {
                std::collections::hash_map::Entry::Occupied(mut e) => {
                    e.get_mut().extend(tests);
                }
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(tests);
                    fault_ids.push(fault);
                }
            }
        }
        Ok(Self {
            fault_ids,
            detects,
            test_ids: suite.ids().map(str::to_string).collect(),
        })
    }

    /// Number of faults.
    pub fn m(&self) -> usize {
        self.fault_ids.len()
    }

    /// Suite size the matrix was validated against.
    pub fn n(&self) -> usize {
        self.test_ids.len()
    }

    pub fn fault_ids(&self) -> &[String] {
        &self.fault_ids
    }

    pub fn test_ids(&self) -> &[String] {
        &self.test_ids
    }

    pub fn detecting_tests(&self, fault: &str) -> Option<&HashSet<String>> {
        self.detects.get(fault)
    }
}

/// Writes a fault matrix as CSV with header `fault_id,test_id`, one
/// detecting pair per row, faults in matrix order and test ids sorted.
pub fn save_fault_matrix(
    matrix: &FaultMatrix,
    path: impl AsRef<Path>,
) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let mut out = String::from("fault_id,test_id\n");
    for fault in matrix.fault_ids() {
        let mut tests: Vec<&String> = matrix
            .detecting_tests(fault)
            .expect("fault ids come from the matrix")
            .iter()
            .collect();
        tests.sort();
        for test in tests {
            out.push_str(fault);
            out.push(',');
            out.push_str(test);
            out.push('\n');
        }
    }
    fs::write(path, out).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a fault matrix from CSV with header `fault_id,test_id`, one
/// detecting pair per row.
///
/// A row with an empty `test_id` declares a fault nothing detects and is
/// rejected by name, as is any row referencing a test absent from the suite.
pub fn load_fault_matrix(
    path: impl AsRef<Path>,
    suite: &TestSuite,
) -> Result<FaultMatrix, CorpusError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|source| CorpusError::FaultCsv {
            path: path.to_path_buf(),
            source,
        })?;

    {
        let headers = reader.headers().map_err(|source| CorpusError::FaultCsv {
            path: path.to_path_buf(),
            source,
        })?;
        let got: Vec<&str> = headers.iter().map(str::trim).collect();
        if got != ["fault_id", "test_id"] {
            return Err(CorpusError::BadFaultHeader {
                path: path.to_path_buf(),
                found: got.join(","),
            });
        }
    }

    let mut order: Vec<String> = Vec::new();
    let mut pairs: HashMap<String, HashSet<String>> = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // 1-based, after the header
        let record = record.map_err(|source| CorpusError::FaultCsv {
            path: path.to_path_buf(),
            source,
        })?;
        if record.len() != 2 {
            return Err(CorpusError::MalformedFaultRow {
                line,
                found: record.iter().collect::<Vec<_>>().join(","),
            });
        }
        let fault = record[0].trim().to_string();
        let test = record[1].trim().to_string();
        if fault.is_empty() {
            return Err(CorpusError::MalformedFaultRow {
                line,
                found: record.iter().collect::<Vec<_>>().join(","),
            });
        }
        if test.is_empty() {
            return Err(CorpusError::UndetectedFault(fault));
        }
        if suite.index_of(&test).is_none() {
            return Err(CorpusError::UnknownTestId { fault, test });
        }
        pairs
            .entry(fault.clone())
            .or_insert_with(|| {
                order.push(fault.clone());
                HashSet::new()
            })
            .insert(test);
    }

    let faults = order
        .into_iter()
        .map(|f| {
            let tests = pairs.remove(&f).expect("fault recorded");
            (f, tests)
        })
        .collect();
    FaultMatrix::new(faults, suite)
}
