//! Command-line surface: `prioritize`, `evaluate`, `compare`, and `gen`,
//! plus `rerun` to replay a config echo.
//!
//! Every successful run writes a JSON echo of its fully-resolved
//! configuration alongside its outputs; `divprio rerun <echo>` reproduces
//! the run. Exit codes: 0 success, 1 usage error, 2 input error, 3
//! internal error.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::corpus::{self, Preprocessing};
use crate::error::{CorpusError, EvaluationError, LshError, MetricsError, PrioritizerError};
use crate::evaluation::{
    self, run_experiment, ExperimentConfig, ExperimentInput, Grouping,
};
use crate::lsh::LshConfig;
use crate::metrics::Lz4Compressor;
use crate::prioritizer::{run_technique, PrioritizedOrder, Technique, TechniqueParams};
use crate::synth::{self, SynthConfig};

/// Classified failures, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag combinations: exit 1.
    Usage(String),
    /// Unreadable or invalid input files: exit 2.
    Input(String),
    /// Everything else: exit 3.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<LshError> for CliError {
    fn from(e: LshError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<PrioritizerError> for CliError {
    fn from(e: PrioritizerError) -> Self {
        match e {
            PrioritizerError::EmptySuite | PrioritizerError::MatrixIdMismatch(_) => {
                CliError::Input(e.to_string())
            }
            PrioritizerError::Lsh(inner) => CliError::Usage(inner.to_string()),
            PrioritizerError::Metrics(inner) => CliError::Internal(inner.to_string()),
        }
    }
}

impl From<EvaluationError> for CliError {
    fn from(e: EvaluationError) -> Self {
        match e {
            EvaluationError::IdMismatch { .. } | EvaluationError::NoInputs => {
                CliError::Input(e.to_string())
            }
            EvaluationError::Prioritizer(inner) => inner.into(),
            EvaluationError::Io { .. } => CliError::Internal(e.to_string()),
            EvaluationError::EmptySample | EvaluationError::SampleTooSmall(_) => {
                CliError::Internal(e.to_string())
            }
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Internal(e.to_string())
    }
}

const TECHNIQUE_CHOICES: &str = "rnd, mnh, jac, ncd, ncd-ms, lsh, sc";

#[derive(Parser)]
#[command(
    name = "divprio",
    about = "Similarity-based test case prioritization: order suites by diversity, score orderings with APFD, compare techniques statistically",
    version,
    disable_help_subcommand = true
)]
struct TopLevel {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Order a test suite with one technique and write the order file.
    Prioritize(PrioritizeArgs),
    /// Score an order file against a fault matrix with APFD.
    Evaluate(EvaluateArgs),
    /// Run techniques over suites and seeds; emit comparison tables.
    Compare(CompareArgs),
    /// Generate a synthetic clustered corpus on disk.
    Gen(GenArgs),
    /// Replay a previously written config echo.
    Rerun(RerunArgs),
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct CommonMetricArgs {
    /// Shingle length for Jaccard and LSH.
    #[arg(long, default_value_t = 5)]
    shingle_k: usize,
    /// Compressor backing NCD and NCD-MS (only the bundled `lz4`).
    #[arg(long, default_value = "lz4")]
    compressor: String,
    /// MinHash signature length.
    #[arg(long, default_value_t = 10)]
    lsh_perms: usize,
    /// Number of LSH bands.
    #[arg(long, default_value_t = 10)]
    lsh_bands: usize,
    /// Rows per LSH band (bands x rows must equal perms).
    #[arg(long, default_value_t = 1)]
    lsh_rows: usize,
    /// Collapse whitespace runs in sources at load time.
    #[arg(long, default_value_t = false)]
    collapse_whitespace: bool,
    /// Lowercase sources at load time.
    #[arg(long, default_value_t = false)]
    lowercase: bool,
}

impl CommonMetricArgs {
    fn technique_params(&self, seed: u64) -> Result<TechniqueParams, CliError> {
        if self.compressor != "lz4" {
            return Err(CliError::Usage(format!(
                "unknown compressor {:?}; the bundled compressor is `lz4`",
                self.compressor
            )));
        }
        let lsh = LshConfig::new(self.lsh_perms, self.lsh_bands, self.lsh_rows, seed)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(TechniqueParams {
            shingle_k: self.shingle_k,
            lsh,
        })
    }

    fn preprocessing(&self) -> Preprocessing {
        Preprocessing {
            collapse_whitespace: self.collapse_whitespace,
            lowercase: self.lowercase,
        }
    }
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct PrioritizeArgs {
    /// Technique acronym: rnd, mnh, jac, ncd, ncd-ms, lsh, or sc.
    #[arg(long, short)]
    technique: String,
    /// Suite manifest (JSON array of {"id", "path"}).
    #[arg(long)]
    manifest: PathBuf,
    /// Where to write the order file.
    #[arg(long)]
    out: PathBuf,
    /// Order file encoding: json or text (one id per line).
    #[arg(long, default_value = "json")]
    format: String,
    /// Seed for the random baseline and the LSH hash family.
    #[arg(long, env = "DIVPRIO_SEED")]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Affects wall-clock only.
    #[arg(long)]
    jobs: Option<usize>,
    /// Zero the timing fields so reruns are byte-identical.
    #[arg(long, default_value_t = false)]
    no_timing: bool,
    #[command(flatten)]
    metric: CommonMetricArgs,
}

#[derive(Args, Serialize, Deserialize, Clone)]
pub struct EvaluateArgs {
    /// Order file produced by `prioritize --format json`.
    #[arg(long)]
    order: PathBuf,
    /// Suite manifest the order refers to.
    #[arg(long)]
    manifest: PathBuf,
    /// Fault matrix CSV (`fault_id,test_id`).
    #[arg(long)]
    faults: PathBuf,
    /// Report encoding: text, json, or csv.
    #[arg(long, default_value = "text")]
    format: String,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct CompareArgs {
    /// Comma-separated technique acronyms, or `all` for the full roster.
    #[arg(long, value_delimiter = ',')]
    techniques: Vec<String>,
    /// Suite manifests; repeat the flag for multiple versions.
    #[arg(long, required = true)]
    manifest: Vec<PathBuf>,
    /// Fault matrices, one per manifest, in the same order.
    #[arg(long, required = true)]
    faults: Vec<PathBuf>,
    /// Output directory for the tables and the JSON report.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated seed list; one execution round per (suite, seed).
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Fallback seed when --seeds is not given.
    #[arg(long, env = "DIVPRIO_SEED")]
    seed: Option<u64>,
    /// Aggregate summaries over all rounds (`pooled`) or per suite
    /// (`per-suite`).
    #[arg(long, default_value = "pooled")]
    group_by: String,
    /// Worker threads (default: all cores). Affects wall-clock only.
    #[arg(long)]
    jobs: Option<usize>,
    /// Zero timing columns so reruns are byte-identical.
    #[arg(long, default_value_t = false)]
    no_timing: bool,
    #[command(flatten)]
    metric: CommonMetricArgs,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct GenArgs {
    /// Directory to create the corpus in.
    #[arg(long)]
    out: PathBuf,
    /// Suite size.
    #[arg(long, default_value_t = 200)]
    tests: usize,
    /// Number of planted fault clusters.
    #[arg(long, default_value_t = 10)]
    clusters: usize,
    /// Document length in 7-byte tokens.
    #[arg(long, default_value_t = 292)]
    tokens: usize,
    /// Per-position mutation probability within a cluster.
    #[arg(long, default_value_t = 0.15)]
    mutation: f64,
    #[arg(long, env = "DIVPRIO_SEED")]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct RerunArgs {
    /// A config echo written by a previous run.
    config: PathBuf,
}

/// A fully-resolved run description; what config echoes contain.
#[derive(Serialize, Deserialize, Clone)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum RunConfig {
    Prioritize(ResolvedPrioritize),
    Evaluate(EvaluateArgs),
    Compare(ResolvedCompare),
    Gen(ResolvedGen),
}

#[derive(Serialize, Deserialize, Clone)]
pub struct ResolvedPrioritize {
    technique: String,
    manifest: PathBuf,
    out: PathBuf,
    format: String,
    seed: u64,
    jobs: Option<usize>,
    no_timing: bool,
    #[serde(flatten)]
    metric: CommonMetricArgs,
}

#[derive(Serialize, Deserialize, Clone)]
pub struct ResolvedCompare {
    techniques: Vec<String>,
    manifest: Vec<PathBuf>,
    faults: Vec<PathBuf>,
    out: PathBuf,
    seeds: Vec<u64>,
    group_by: String,
    jobs: Option<usize>,
    no_timing: bool,
    #[serde(flatten)]
    metric: CommonMetricArgs,
}

#[derive(Serialize, Deserialize, Clone)]
pub struct ResolvedGen {
    out: PathBuf,
    tests: usize,
    clusters: usize,
    tokens: usize,
    mutation: f64,
    seed: u64,
}

/// Parses arguments and executes; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let parsed = match TopLevel::try_parse_from(args) {
        Ok(p) => p,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("{e}");
            return 1;
        }
    };
    let result = match parsed.command {
        Command::Prioritize(args) => resolve_prioritize(args).and_then(|c| dispatch(&c)),
        Command::Evaluate(args) => dispatch(&RunConfig::Evaluate(args)),
        Command::Compare(args) => resolve_compare(args).and_then(|c| dispatch(&c)),
        Command::Gen(args) => {
            let resolved = RunConfig::Gen(ResolvedGen {
                out: args.out,
                tests: args.tests,
                clusters: args.clusters,
                tokens: args.tokens,
                mutation: args.mutation,
                seed: args.seed.unwrap_or(0),
            });
            dispatch(&resolved)
        }
        Command::Rerun(args) => rerun(&args.config),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn resolve_prioritize(args: PrioritizeArgs) -> Result<RunConfig, CliError> {
    Ok(RunConfig::Prioritize(ResolvedPrioritize {
        technique: args.technique,
        manifest: args.manifest,
        out: args.out,
        format: args.format,
        seed: args.seed.unwrap_or(0),
        jobs: args.jobs,
        no_timing: args.no_timing,
        metric: args.metric,
    }))
}

fn resolve_compare(args: CompareArgs) -> Result<RunConfig, CliError> {
    let fallback = args.seed.unwrap_or(0);
    let seeds = if args.seeds.is_empty() {
        vec![fallback]
    } else {
        args.seeds
    };
    Ok(RunConfig::Compare(ResolvedCompare {
        techniques: args.techniques,
        manifest: args.manifest,
        faults: args.faults,
        out: args.out,
        seeds,
        group_by: args.group_by,
        jobs: args.jobs,
        no_timing: args.no_timing,
        metric: args.metric,
    }))
}

fn rerun(path: &Path) -> Result<(), CliError> {
    let raw = fs::read(path)
        .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
    let config: RunConfig = serde_json::from_slice(&raw)
        .map_err(|e| CliError::Input(format!("malformed config {}: {e}", path.display())))?;
    dispatch(&config)
}

fn dispatch(config: &RunConfig) -> Result<(), CliError> {
    match config {
        RunConfig::Prioritize(c) => {
            configure_pool(c.jobs);
            cmd_prioritize(c)?;
            write_echo(&sidecar_path(&c.out), config)
        }
        RunConfig::Evaluate(c) => {
            cmd_evaluate(c)?;
            match &c.out {
                Some(out) => write_echo(&sidecar_path(out), config),
                None => Ok(()),
            }
        }
        RunConfig::Compare(c) => {
            configure_pool(c.jobs);
            cmd_compare(c)?;
            write_echo(&c.out.join("config.json"), config)
        }
        RunConfig::Gen(c) => {
            cmd_gen(c)?;
            write_echo(&c.out.join("config.json"), config)
        }
    }
}

fn configure_pool(jobs: Option<usize>) {
    if let Some(jobs) = jobs {
        // Ignore failure: the global pool can only be configured once per
        // process, and a pool that already exists is fine for reruns.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global();
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut os = out.as_os_str().to_os_string();
    os.push(".config.json");
    PathBuf::from(os)
}

fn write_echo(path: &Path, config: &RunConfig) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(config)
        .map_err(|e| CliError::Internal(format!("cannot serialize config echo: {e}")))?;
    fs::write(path, json + "\n")
        .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

fn parse_technique(s: &str) -> Result<Technique, CliError> {
    Technique::parse(s).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown technique {s:?}; valid acronyms: {TECHNIQUE_CHOICES}"
        ))
    })
}

fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

fn cmd_prioritize(c: &ResolvedPrioritize) -> Result<(), CliError> {
    let technique = parse_technique(&c.technique)?;
    let params = c.metric.technique_params(c.seed)?;
    if c.format != "json" && c.format != "text" {
        return Err(CliError::Usage(format!(
            "unsupported order format {:?}; use json or text",
            c.format
        )));
    }
    let suite = corpus::load_suite_with(&c.manifest, c.metric.preprocessing())?;
    let mut order = run_technique(&suite, technique, &params, &Lz4Compressor, c.seed)?;
    if c.no_timing {
        order = order.without_timing();
    }
    let payload = match c.format.as_str() {
        "json" => order.to_json_pretty() + "\n",
        _ => order.to_text(),
    };
    write_output(&c.out, &payload)
}

fn cmd_evaluate(c: &EvaluateArgs) -> Result<(), CliError> {
    let suite = corpus::load_suite(&c.manifest)?;
    let faults = corpus::load_fault_matrix(&c.faults, &suite)?;
    let raw = fs::read(&c.order)
        .map_err(|e| CliError::Input(format!("cannot read order {}: {e}", c.order.display())))?;
    let order: PrioritizedOrder = serde_json::from_slice(&raw).map_err(|e| {
        CliError::Input(format!("order {} is not valid JSON: {e}", c.order.display()))
    })?;
    let result = evaluation::apfd(&order, &faults)?;

    let payload = match c.format.as_str() {
        "text" => format!("APFD: {:.2}\n", result.apfd),
        "json" => serde_json::to_string_pretty(&result).expect("result serializes") + "\n",
        "csv" => {
            let mut out = String::from("order,apfd,n,m,fault_id,tf\n");
            for (fault, tf) in &result.tf {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    result.order_id, result.apfd, result.n, result.m, fault, tf
                ));
            }
            out
        }
        other => {
            return Err(CliError::Usage(format!(
                "unsupported report format {other:?}; use text, json, or csv"
            )))
        }
    };
    match &c.out {
        Some(path) => write_output(path, &payload),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

fn cmd_compare(c: &ResolvedCompare) -> Result<(), CliError> {
    let mut techniques = Vec::new();
    if c.techniques.len() == 1 && c.techniques[0].eq_ignore_ascii_case("all") {
        techniques = Technique::ALL.to_vec();
    } else {
        for name in &c.techniques {
            techniques.push(parse_technique(name)?);
        }
    }
    if techniques.len() < 2 {
        return Err(CliError::Usage(format!(
            "compare needs at least two techniques (or `all`); valid acronyms: {TECHNIQUE_CHOICES}"
        )));
    }
    if c.manifest.len() != c.faults.len() {
        return Err(CliError::Usage(format!(
            "{} manifests but {} fault matrices; pass one --faults per --manifest",
            c.manifest.len(),
            c.faults.len()
        )));
    }
    let grouping = Grouping::parse(&c.group_by).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown grouping {:?}; use pooled or per-suite",
            c.group_by
        ))
    })?;
    let params = c.metric.technique_params(c.seeds[0])?;

    let mut inputs = Vec::with_capacity(c.manifest.len());
    for (manifest, faults_path) in c.manifest.iter().zip(&c.faults) {
        let suite = corpus::load_suite_with(manifest, c.metric.preprocessing())?;
        let faults = corpus::load_fault_matrix(faults_path, &suite)?;
        let label = manifest
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "suite".to_string());
        inputs.push(ExperimentInput {
            suite_label: label.clone(),
            version: label,
            suite,
            faults,
        });
    }

    let config = ExperimentConfig {
        techniques,
        seeds: c.seeds.clone(),
        params,
        bootstrap_replicates: 1000,
        bootstrap_seed: c.seeds[0],
        significance_level: 0.05,
        grouping,
    };
    let mut report = run_experiment(&inputs, &config, &Lz4Compressor)?;
    if c.no_timing {
        report = report.without_timing();
    }

    fs::create_dir_all(&c.out)
        .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", c.out.display())))?;
    write_output(&c.out.join("rounds.csv"), &evaluation::rounds_csv(&report.rounds))?;
    write_output(&c.out.join("vda_vs_rnd.csv"), &evaluation::vda_table_csv(&report))?;
    write_output(
        &c.out.join("apfd_summary.csv"),
        &evaluation::apfd_summary_csv(&report),
    )?;
    write_output(
        &c.out.join("amet_summary.csv"),
        &evaluation::amet_summary_csv(&report),
    )?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    write_output(&c.out.join("report.json"), &json)?;
    Ok(())
}

fn cmd_gen(c: &ResolvedGen) -> Result<(), CliError> {
    if c.clusters == 0 || c.tests < c.clusters {
        return Err(CliError::Usage(format!(
            "need clusters >= 1 and tests >= clusters (got {} tests, {} clusters)",
            c.tests, c.clusters
        )));
    }
    if !(0.0..=1.0).contains(&c.mutation) {
        return Err(CliError::Usage(format!(
            "mutation rate {} is not a probability",
            c.mutation
        )));
    }
    let (suite, faults) = synth::generate(&SynthConfig {
        tests: c.tests,
        clusters: c.clusters,
        tokens_per_doc: c.tokens,
        mutation_rate: c.mutation,
        codebook_size: 40,
        seed: c.seed,
    });
    fs::create_dir_all(&c.out)
        .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", c.out.display())))?;
    let manifest = corpus::save_suite(&suite, &c.out)?;
    let faults_path = c.out.join("faults.csv");
    corpus::save_fault_matrix(&faults, &faults_path)?;
    println!("{}", manifest.display());
    println!("{}", faults_path.display());
    Ok(())
}
