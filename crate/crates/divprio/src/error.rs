//! Error types, one enum per subsystem.

use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while loading suites and fault data.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest {path} is not a JSON array of {{id, path}} objects: {source}")]
    ManifestParse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("manifest {0} lists no test cases")]
    EmptyManifest(PathBuf),

    #[error("manifest entry {index} has an empty id")]
    EmptyId { index: usize },

    #[error("duplicate test id {0:?}")]
    DuplicateId(String),

    #[error("source for test {id:?} is missing at {path}: {source}")]
    MissingSource {
        id: String,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to read fault matrix {path}: {source}")]
    FaultCsv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("fault matrix {path} must start with header `fault_id,test_id`, found `{found}`")]
    BadFaultHeader { path: PathBuf, found: String },

    #[error("fault matrix row {line} is malformed: `{found}`")]
    MalformedFaultRow { line: usize, found: String },

    #[error("fault {0:?} is detected by no test")]
    UndetectedFault(String),

    #[error("fault {fault:?} references test {test:?} absent from the suite")]
    UnknownTestId { fault: String, test: String },
}

/// Errors raised by distance computations and matrix construction.
#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("shingle sets have different k ({a} vs {b})")]
    ShingleKMismatch { a: usize, b: usize },

    #[error("compressor {name} failed: {message}")]
    Compressor { name: String, message: String },

    #[error("distance to an empty set is undefined (candidate {id:?})")]
    EmptyDistanceSet { id: String },

    #[error("test id {0:?} is not covered by the distance matrix")]
    UnknownMatrixId(String),

    #[error("distance matrix is not square: {ids} ids vs {rows} rows")]
    MatrixShape { ids: usize, rows: usize },

    #[error("distance matrix is not symmetric at ({i}, {j}): {a} vs {b}")]
    MatrixAsymmetry { i: usize, j: usize, a: f64, b: f64 },

    #[error("distance matrix has nonzero diagonal at {i}: {value}")]
    MatrixDiagonal { i: usize, value: f64 },

    #[error("matrix cache {path}: {message}")]
    Cache { path: PathBuf, message: String },

    #[error("failed to write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Errors raised by MinHash signatures and the banded index.
#[derive(Debug, Error)]
pub enum LshError {
    #[error("bands x rows must equal permutations ({bands} x {rows} != {permutations})")]
    BadBanding {
        permutations: usize,
        bands: usize,
        rows: usize,
    },

    #[error("permutations, bands, and rows must all be positive")]
    ZeroParameter,

    #[error("signature length mismatch ({a} vs {b})")]
    SignatureLength { a: usize, b: usize },

    #[error("query signature length {query} does not match index configuration {expected}")]
    ConfigMismatch { query: usize, expected: usize },
}

/// Errors raised while producing prioritized orders.
#[derive(Debug, Error)]
pub enum PrioritizerError {
    #[error("suite is empty; nothing to prioritize")]
    EmptySuite,

    #[error("suite id {0:?} is missing from the distance matrix")]
    MatrixIdMismatch(String),

    #[error(transparent)]
    Metrics(#[from] MetricsError),

    #[error(transparent)]
    Lsh(#[from] LshError),
}

/// Errors raised by scoring and statistical comparison.
#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("order and fault matrix cover different suites: {detail}")]
    IdMismatch { detail: String },

    #[error("statistical sample is empty")]
    EmptySample,

    #[error("bootstrap needs at least two observations, got {0}")]
    SampleTooSmall(usize),

    #[error("experiment needs at least one suite/fault-matrix pair")]
    NoInputs,

    #[error(transparent)]
    Prioritizer(#[from] PrioritizerError),

    #[error("failed to write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
