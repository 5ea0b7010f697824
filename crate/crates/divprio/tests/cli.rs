//! End-to-end tests of the `divprio` binary: exit codes, file formats, the
//! config echo, and output determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use divprio::corpus::{save_fault_matrix, save_suite};
use divprio::synth::{generate, SynthConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_divprio"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A small corpus on disk: (corpus dir, manifest path, faults path).
fn corpus(dir: &Path) -> (PathBuf, PathBuf) {
    let (suite, faults) = generate(&SynthConfig {
        tests: 24,
        clusters: 4,
        tokens_per_doc: 60,
        seed: 5,
        ..SynthConfig::default()
    });
    let manifest = save_suite(&suite, dir).unwrap();
    let faults_path = dir.join("faults.csv");
    save_fault_matrix(&faults, &faults_path).unwrap();
    (manifest, faults_path)
}

#[test]
fn prioritize_writes_an_order_with_every_test() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, _) = corpus(dir.path());
    let out_path = dir.path().join("order.json");
    let out = run(&[
        "prioritize",
        "--technique",
        "ncd",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let order: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    assert_eq!(order["technique"], "NCD");
    assert_eq!(order["order"].as_array().unwrap().len(), 24);
    assert_eq!(order["scores"].as_array().unwrap().len(), 24);
    // The config echo lands alongside the output.
    assert!(dir.path().join("order.json.config.json").exists());
}

#[test]
fn prioritize_text_format_is_one_id_per_line() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, _) = corpus(dir.path());
    let out_path = dir.path().join("order.txt");
    let out = run(&[
        "prioritize",
        "-t",
        "mnh",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--format",
        "text",
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().count(), 24);
    assert!(text.lines().all(|l| l.starts_with('t')));
}

#[test]
fn unknown_technique_is_a_usage_error_listing_acronyms() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, _) = corpus(dir.path());
    let out = run(&[
        "prioritize",
        "--technique",
        "foo",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        dir.path().join("x.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_of(&out);
    for acronym in ["rnd", "mnh", "jac", "ncd", "ncd-ms", "lsh", "sc"] {
        assert!(err.contains(acronym), "{err}");
    }
}

#[test]
fn lsh_banding_violation_is_a_usage_error_naming_the_constraint() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, _) = corpus(dir.path());
    let out = run(&[
        "prioritize",
        "-t",
        "lsh",
        "--lsh-bands",
        "3",
        "--lsh-rows",
        "4",
        "--lsh-perms",
        "10",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        dir.path().join("x.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("3 x 4 != 10"));
}

#[test]
fn missing_manifest_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "prioritize",
        "-t",
        "rnd",
        "--manifest",
        dir.path().join("absent.json").to_str().unwrap(),
        "--out",
        dir.path().join("x.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluate_prints_apfd_to_two_decimals() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, faults) = corpus(dir.path());
    let order = dir.path().join("order.json");
    assert!(run(&[
        "prioritize",
        "-t",
        "jac",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        order.to_str().unwrap(),
    ])
    .status
    .success());
    let out = run(&[
        "evaluate",
        "--order",
        order.to_str().unwrap(),
        "--manifest",
        manifest.to_str().unwrap(),
        "--faults",
        faults.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let re_ok = text.trim().strip_prefix("APFD: ").map(|v| {
        let parts: Vec<&str> = v.split('.').collect();
        parts.len() == 2 && parts[1].len() == 2
    });
    assert_eq!(re_ok, Some(true), "unexpected output {text:?}");
}

#[test]
fn evaluate_rejects_order_missing_a_suite_test() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, faults) = corpus(dir.path());
    let order = dir.path().join("order.json");
    assert!(run(&[
        "prioritize",
        "-t",
        "rnd",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        order.to_str().unwrap(),
    ])
    .status
    .success());
    // Drop one id from the order file.
    let mut parsed: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&order).unwrap()).unwrap();
    let removed = parsed["order"].as_array_mut().unwrap().pop().unwrap();
    parsed["scores"].as_array_mut().unwrap().pop();
    std::fs::write(&order, serde_json::to_vec(&parsed).unwrap()).unwrap();

    let out = run(&[
        "evaluate",
        "--order",
        order.to_str().unwrap(),
        "--manifest",
        manifest.to_str().unwrap(),
        "--faults",
        faults.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr_of(&out).contains(removed.as_str().unwrap()),
        "error must name the missing id: {}",
        stderr_of(&out)
    );
}

#[test]
fn evaluate_formats_agree_on_the_value() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, faults) = corpus(dir.path());
    let order = dir.path().join("order.json");
    assert!(run(&[
        "prioritize",
        "-t",
        "ncd",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        order.to_str().unwrap(),
    ])
    .status
    .success());
    let common = [
        "evaluate",
        "--order",
        order.to_str().unwrap(),
        "--manifest",
        manifest.to_str().unwrap(),
        "--faults",
        faults.to_str().unwrap(),
        "--format",
    ];
    let json_out = run(&[&common[..], &["json"]].concat());
    let csv_out = run(&[&common[..], &["csv"]].concat());
    assert!(json_out.status.success() && csv_out.status.success());
    let parsed: serde_json::Value =
        serde_json::from_slice(&json_out.stdout).unwrap();
    let apfd_json = parsed["apfd"].as_f64().unwrap();
    let csv_text = String::from_utf8_lossy(&csv_out.stdout);
    let apfd_csv: f64 = csv_text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(apfd_json, apfd_csv);
}

#[test]
fn compare_two_techniques_yields_one_pairwise_report() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, faults) = corpus(dir.path());
    let out_dir = dir.path().join("cmp");
    let out = run(&[
        "compare",
        "--techniques",
        "ncd,rnd",
        "--manifest",
        manifest.to_str().unwrap(),
        "--faults",
        faults.to_str().unwrap(),
        "--seeds",
        "1,2,3,4,5",
        "--out",
        out_dir.to_str().unwrap(),
        "--no-timing",
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["comparisons"].as_array().unwrap().len(), 1);
    assert_eq!(report["rounds"].as_array().unwrap().len(), 10);
    for file in [
        "rounds.csv",
        "vda_vs_rnd.csv",
        "apfd_summary.csv",
        "amet_summary.csv",
        "config.json",
    ] {
        assert!(out_dir.join(file).exists(), "missing {file}");
    }
}

#[test]
fn compare_all_covers_the_full_roster_and_reruns_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, faults) = corpus(dir.path());
    let run_once = |out_dir: &Path| {
        let out = run(&[
            "compare",
            "--techniques",
            "all",
            "--manifest",
            manifest.to_str().unwrap(),
            "--faults",
            faults.to_str().unwrap(),
            "--seeds",
            "7,8",
            "--out",
            out_dir.to_str().unwrap(),
            "--no-timing",
        ]);
        assert!(out.status.success(), "{}", stderr_of(&out));
    };
    let first = dir.path().join("cmp1");
    let second = dir.path().join("cmp2");
    run_once(&first);
    run_once(&second);

    let rounds = std::fs::read_to_string(first.join("rounds.csv")).unwrap();
    let techniques: std::collections::HashSet<&str> = rounds
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap())
        .collect();
    assert_eq!(techniques.len(), 7, "expected the full roster: {techniques:?}");

    for file in [
        "rounds.csv",
        "vda_vs_rnd.csv",
        "apfd_summary.csv",
        "amet_summary.csv",
        "report.json",
    ] {
        let a = std::fs::read(first.join(file)).unwrap();
        let b = std::fs::read(second.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn compare_requires_two_techniques() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, faults) = corpus(dir.path());
    let out = run(&[
        "compare",
        "--techniques",
        "ncd",
        "--manifest",
        manifest.to_str().unwrap(),
        "--faults",
        faults.to_str().unwrap(),
        "--out",
        dir.path().join("cmp").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_echo_reruns_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, _) = corpus(dir.path());
    let out_path = dir.path().join("order.json");
    assert!(run(&[
        "prioritize",
        "-t",
        "lsh",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--seed",
        "11",
        "--no-timing",
    ])
    .status
    .success());
    let original = std::fs::read(&out_path).unwrap();
    std::fs::remove_file(&out_path).unwrap();

    let echo = dir.path().join("order.json.config.json");
    let out = run(&["rerun", echo.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert_eq!(std::fs::read(&out_path).unwrap(), original);
}

#[test]
fn gen_produces_a_loadable_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_dir = dir.path().join("corpus");
    let out = run(&[
        "gen",
        "--out",
        corpus_dir.to_str().unwrap(),
        "--tests",
        "18",
        "--clusters",
        "3",
        "--seed",
        "2",
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let suite = divprio::corpus::load_suite(corpus_dir.join("manifest.json")).unwrap();
    assert_eq!(suite.len(), 18);
    let faults =
        divprio::corpus::load_fault_matrix(corpus_dir.join("faults.csv"), &suite).unwrap();
    assert_eq!(faults.m(), 3);
}

#[test]
fn env_seed_is_honored_as_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, _) = corpus(dir.path());
    let order_at = |path: &Path| -> Vec<String> {
        serde_json::from_slice::<serde_json::Value>(&std::fs::read(path).unwrap()).unwrap()
            ["order"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_str().unwrap().to_string())
            .collect()
    };

    let via_env = dir.path().join("env.json");
    let out = bin()
        .env("DIVPRIO_SEED", "1234")
        .args([
            "prioritize",
            "-t",
            "rnd",
            "--manifest",
            manifest.to_str().unwrap(),
            "--out",
            via_env.to_str().unwrap(),
            "--no-timing",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());

    let via_flag = dir.path().join("flag.json");
    assert!(run(&[
        "prioritize",
        "-t",
        "rnd",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        via_flag.to_str().unwrap(),
        "--seed",
        "1234",
        "--no-timing",
    ])
    .status
    .success());
    assert_eq!(order_at(&via_env), order_at(&via_flag));
}
