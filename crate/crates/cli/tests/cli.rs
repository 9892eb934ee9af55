//! End-to-end runs of the binary against golden outputs.
//!
//! Set `UPDATE_GOLDEN=1` to rewrite the golden files after an intended change.

use std::path::PathBuf;
use std::process::{Command, Output};

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn fixture(name: &str) -> String {
    crate_dir().join("tests/fixtures").join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spherevar")).args(args).env_remove("SPHEREVAR_SEED").output().expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} exited with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 output")
}

fn golden(name: &str, args: &[&str]) {
    let got = stdout_of(args);
    let path = crate_dir().join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &got).unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("missing golden {}: {e}", path.display()));
    assert_eq!(got, want, "output of {args:?} differs from {}", path.display());
}

#[test]
fn variance_golden() {
    golden("variance_uniform_s3.json", &["variance", "--spec", &fixture("uniform_s3.json")]);
    golden("variance_sigma_s3.json", &["variance", "--spec", &fixture("sigma_half_s3.json")]);
}

#[test]
fn variance_of_uniform_is_two() {
    let v: serde_json::Value =
        serde_json::from_str(&stdout_of(&["variance", "--spec", &fixture("uniform_s3.json")])).unwrap();
    assert_eq!(v["variance"], 2.0);
    assert_eq!(v["exact"], "2");
}

#[test]
fn convolve_golden() {
    golden(
        "convolve_s3.json",
        &[
            "convolve",
            "--first",
            &fixture("cospower1_s3.json"),
            "--second",
            &fixture("cospower3_s3.json"),
            "--grid",
            "16",
        ],
    );
    golden(
        "convolve_s1.csv",
        &[
            "convolve",
            "--first",
            r#"{"d":1,"kind":"cospower","k":1}"#,
            "--second",
            r#"{"d":1,"kind":"cospower","k":1}"#,
            "--grid",
            "16",
            "--format",
            "csv",
        ],
    );
}

#[test]
fn sum_general_golden() {
    golden("sum_general.json", &["sum-general"]);
}

#[test]
fn accumulate_golden() {
    golden("accumulate.json", &["accumulate", "--sigma", "0.1", "--k", "100"]);
    golden("accumulate_trajectory.csv", &["accumulate", "--sigmas", "0.1,0.2,0.3", "--trajectory", "--format", "csv"]);
    let v: serde_json::Value =
        serde_json::from_str(&stdout_of(&["accumulate", "--sigma", "0.1", "--k", "100"])).unwrap();
    assert!((v["variance"].as_f64().unwrap() - (2.0 - 2.0 * 0.95f64.powi(100))).abs() < 1e-11);
}

#[test]
fn threshold_golden() {
    golden("threshold.json", &["threshold", "--sigma-max", "1", "--k", "100"]);
}

#[test]
fn classify_golden() {
    golden("classify.csv", &["classify", "--v1", "0.5", "--v2", "1", "--format", "csv"]);
    golden("classify_high.json", &["classify", "--v1", "3", "--v2", "1"]);
    assert!(stdout_of(&["classify", "--v1", "0.5", "--v2", "1", "--format", "csv"]).contains("max{V1,V2}<V12<2"));
}

#[test]
fn sample_golden() {
    golden("sample.csv", &["sample", "--spec", &fixture("cospower1_s3.json"), "-n", "5", "--format", "csv"]);
    let csv = stdout_of(&["sample", "--spec", &fixture("cospower1_s3.json"), "-n", "5", "--format", "csv"]);
    assert!(csv.starts_with("x0,x1,x2,x3\n"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn simulate_sum_golden() {
    golden("simulate_sum.json", &["simulate-sum", "-n", "20000"]);
    golden(
        "simulate_sum_random.json",
        &[
            "simulate-sum",
            "--first",
            &fixture("cospower1_s3.json"),
            "--second",
            &fixture("sigma_half_s3.json"),
            "-n",
            "20000",
            "--completion",
            "random",
        ],
    );
}

#[test]
fn verify_identities_golden() {
    golden("identities_small.json", &["verify-identities", "--max-ab", "2", "--max-d", "3", "--max-tree", "4"]);
}

#[test]
fn default_identity_sweep_has_no_failures() {
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&["verify-identities"])).unwrap();
    assert_eq!(v["failures"].as_array().unwrap().len(), 0);
    assert_eq!(v["instances"].as_array().unwrap().len(), 9 * 9 * 9);
    let counts: Vec<&str> =
        v["tree_counts"].as_array().unwrap().iter().map(|t| t["closed_form"].as_str().unwrap()).collect();
    assert_eq!(counts, ["1", "3", "15", "105", "945", "10395"]);
    assert_eq!(v["all_hold"], true);
}

#[test]
fn verify_lemma_golden() {
    golden("lemma_small.csv", &["verify-lemma", "--max-k", "3", "--dims", "1,3", "--format", "csv"]);
}

#[test]
fn quantum_golden() {
    golden("quantum_sigma.json", &["quantum", "--spec", &fixture("sigma_half_s3.json"), "-n", "2000"]);
}

#[test]
fn figure2_golden() {
    golden("figure2.csv", &["figure2", "--format", "csv"]);
    let csv = stdout_of(&["figure2", "--format", "csv"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,sigma,variance"));
    assert_eq!(lines.count(), 500);
}

#[test]
fn reproduce_example_golden() {
    golden("reproduce_example.json", &["reproduce-example"]);
    golden("reproduce_example.csv", &["reproduce-example", "--format", "csv"]);
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&["reproduce-example"])).unwrap();
    assert_eq!(v["V(g1)"], "53/28");
    assert_eq!(v["V(g2)"], "7/4");
    assert_eq!(v["V(g1+g2)"], "445/224");
    assert!(v["max_gap"].as_f64().unwrap() < 1e-6);
}

#[test]
fn output_files_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, args: &[&str]| -> Vec<u8> {
        let path: PathBuf = dir.path().join(name);
        let mut all: Vec<&str> = args.to_vec();
        let p = path.to_string_lossy().into_owned();
        all.extend(["--output", &p]);
        assert!(run(&all).status.success());
        std::fs::read(&path).unwrap()
    };
    for args in [
        &["simulate-sum", "-n", "30000"][..],
        &["sample", "--spec", &fixture("sigma_half_s3.json"), "-n", "200", "--format", "csv"][..],
        &["quantum", "--spec", &fixture("uniform_s3.json"), "-n", "5000"][..],
        &["figure2", "--format", "csv"][..],
    ] {
        assert_eq!(write("a", args), write("b", args), "{args:?}");
    }
}

#[test]
fn seed_comes_from_flag_or_environment() {
    let args = ["sample", "--spec", &fixture("uniform_s3.json"), "-n", "3", "--format", "csv"];
    let default = stdout_of(&args);
    let explicit = stdout_of(&[&args[..], &["--seed", "12345"]].concat());
    assert_eq!(default, explicit);
    let other = stdout_of(&[&args[..], &["--seed", "7"]].concat());
    assert_ne!(default, other);
    let from_env =
        Command::new(env!("CARGO_BIN_EXE_spherevar")).args(args).env("SPHEREVAR_SEED", "7").output().unwrap();
    assert_eq!(String::from_utf8(from_env.stdout).unwrap(), other);
}

fn code(args: &[&str]) -> Option<i32> {
    run(args).status.code()
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["threshold", "--sigma-max", "1", "--k", "10"]), Some(0));
    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["no-such-command"]), Some(1));
    assert_eq!(code(&["variance", "--spec", &fixture("missing_k.json")]), Some(1));
    assert_eq!(code(&["variance", "--spec", "/nonexistent/spec.json"]), Some(1));
    assert_eq!(code(&["variance", "--spec", r#"{"d":3,"kind":"cospower","k":1,"extra":0}"#]), Some(1));
    assert_eq!(code(&["classify", "--v1", "2", "--v2", "1"]), Some(1));
    assert_eq!(code(&["accumulate", "--sigma", "5", "--k", "3"]), Some(1));
    // no room to refine
    assert_eq!(
        code(&["variance", "--spec", &fixture("sigma_half_s3.json"), "--nodes", "16", "--max-nodes", "16"]),
        Some(2)
    );
    // zero tolerance turns rounding-level gaps into violations
    assert_eq!(code(&["verify-lemma", "--max-k", "3", "--dims", "1", "--max-gap", "0"]), Some(3));
}

#[test]
fn diagnostics_are_one_line() {
    let out = run(&["variance", "--spec", &fixture("missing_k.json")]);
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: "));
}

#[test]
fn help_lists_every_subcommand() {
    let help = stdout_of(&["--help"]);
    for sub in [
        "variance",
        "convolve",
        "sum-general",
        "accumulate",
        "threshold",
        "classify",
        "sample",
        "simulate-sum",
        "verify-identities",
        "verify-lemma",
        "quantum",
        "figure2",
        "reproduce-example",
    ] {
        assert!(help.lines().any(|l| l.trim_start().starts_with(sub)), "{sub} missing from --help");
    }
}
