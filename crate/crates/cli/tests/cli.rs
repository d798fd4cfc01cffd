use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::DMatrix;
use peerfx::dgp::{generate, ScenarioSpec};
use peerfx::io::matrix_csv;

fn names(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|j| format!("{prefix}{j}")).collect()
}

fn write_matrix(dir: &Path, name: &str, prefix: &str, m: &DMatrix<f64>) {
    std::fs::write(dir.join(name), matrix_csv(&names(prefix, m.ncols()), m).unwrap()).unwrap();
}

fn inputs(dir: &Path) {
    let sc = ScenarioSpec {
        n: Some(90),
        seed: Some(5),
        ..Default::default()
    }
    .resolve()
    .unwrap();
    let gen = generate(&sc, 0).unwrap();
    write_matrix(dir, "adjacency.csv", "n", gen.graph.adjacency());
    write_matrix(dir, "outcomes.csv", "y", &gen.data.y);
    write_matrix(dir, "covariates.csv", "x", &gen.data.x);
}

fn config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peerfx"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

const ESTIMATE: &str = r#"
seed = 3
[inputs]
adjacency = "adjacency.csv"
outcomes = "outcomes.csv"
covariates = "covariates.csv"
[latent]
dim = 2
"#;

#[test]
fn estimate_writes_reports_and_refuses_to_overwrite() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    inputs(dir);
    let cfg = config(dir, "estimate.toml", ESTIMATE);
    let out = dir.join("run");
    let first = run(&["estimate"], &cfg, &out);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    for f in ["coefficients.csv", "fit.json", "latent.csv", "manifest.json"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let coef = std::fs::read_to_string(out.join("coefficients.csv")).unwrap();
    assert_eq!(coef.lines().count(), 1 + 2 * (2 + 2 * 5));
    assert!(coef.starts_with("block,regressor,equation,estimate,se,z,flagged"));
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "estimate");
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);

    let again = run(&["estimate"], &cfg, &out);
    assert_eq!(again.status.code(), Some(7));
}

#[test]
fn empty_basis_estimate_equals_naive_estimate() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    inputs(dir);
    let empty = config(
        dir,
        "empty.toml",
        &format!("{ESTIMATE}[sieve]\ndegree = 0\ntotal_degree_cap = 0\ninclude_constant = false\n"),
    );
    let naive = config(dir, "naive.toml", &format!("{ESTIMATE}[estimate]\nestimator = \"naive\"\n"));
    assert!(run(&["estimate"], &empty, &dir.join("empty")).status.success());
    assert!(run(&["estimate"], &naive, &dir.join("naive")).status.success());
    let a = std::fs::read(dir.join("empty/coefficients.csv")).unwrap();
    let b = std::fs::read(dir.join("naive/coefficients.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn exit_codes_distinguish_failure_classes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    inputs(dir);

    let no_seed = config(dir, "no_seed.toml", &ESTIMATE.replace("seed = 3", ""));
    assert_eq!(run(&["estimate"], &no_seed, &dir.join("a")).status.code(), Some(2));
    let seeded = run(&["estimate", "--seed", "4"], &no_seed, &dir.join("a2"));
    assert!(seeded.status.success());

    let unknown = config(dir, "unknown.toml", "seed = 1\nbogus = 2\n");
    assert_eq!(run(&["mc"], &unknown, &dir.join("b")).status.code(), Some(2));

    std::fs::write(dir.join("short.csv"), "y1,y2\n1,2\n3,4\n").unwrap();
    let mismatch = config(dir, "mismatch.toml", &ESTIMATE.replace("outcomes.csv", "short.csv"));
    let out = run(&["estimate"], &mismatch, &dir.join("c"));
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("adjacency.csv") && err.contains("short.csv"), "{err}");

    let n = 90;
    std::fs::write(dir.join("empty_graph.csv"), matrix_csv(&names("n", n), &DMatrix::zeros(n, n)).unwrap()).unwrap();
    let unidentified = config(
        dir,
        "unidentified.toml",
        &format!("{}[estimate]\nestimator = \"naive\"\n", ESTIMATE.replace("adjacency.csv", "empty_graph.csv")),
    );
    assert_eq!(run(&["estimate"], &unidentified, &dir.join("d")).status.code(), Some(4));

    let missing = dir.join("nope.toml");
    assert_eq!(run(&["mc"], &missing, &dir.join("e")).status.code(), Some(6));
}

#[test]
fn mc_table_has_one_row_per_sample_size() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let cfg = config(
        dir,
        "mc.toml",
        "seed = 2\n[mc]\nn_values = [60, 80, 100]\nestimator = { kind = \"naive\" }\n[mc.scenario]\nreps = 3\n",
    );
    let out = run(&["mc"], &cfg, &dir.join("mc"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mse = std::fs::read_to_string(dir.join("mc/mse.csv")).unwrap();
    let lines: Vec<&str> = mse.lines().collect();
    assert_eq!(lines[0], "N,D11,D12,D21,D22");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("60,") && lines[3].starts_with("100,"));
}
