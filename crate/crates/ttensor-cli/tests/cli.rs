//! End-to-end tests of the `ttensor` binary: exit codes, determinism of
//! generated artifacts, and the reproducibility contract of the experiment
//! CSVs (identical bytes modulo wall-time columns).

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

use ttensor::io::load_tensor;
use ttensor::tensor::identity_tensor;

fn ttensor(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ttensor"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

#[test]
fn gen_is_deterministic_in_the_seed() {
    let dir = TempDir::new().unwrap();
    let args = ["gen", "--n", "9", "--p", "3", "--density", "0.4", "--seed", "5"];
    assert_exit(&ttensor(&[&args[..], &["--out", "a.tns3"]].concat(), dir.path()), 0);
    assert_exit(&ttensor(&[&args[..], &["--out", "b.tns3"]].concat(), dir.path()), 0);
    assert_eq!(read(dir.path(), "a.tns3"), read(dir.path(), "b.tns3"));

    let other = ["gen", "--n", "9", "--p", "3", "--density", "0.4", "--seed", "6",
        "--out", "c.tns3"];
    assert_exit(&ttensor(&other, dir.path()), 0);
    assert_ne!(read(dir.path(), "a.tns3"), read(dir.path(), "c.tns3"));
}

#[test]
fn gen_rejects_bad_density() {
    let dir = TempDir::new().unwrap();
    let out = ttensor(
        &["gen", "--n", "4", "--p", "2", "--density", "1.5", "--out", "x.tns3"],
        dir.path(),
    );
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("density"));
}

#[test]
fn texp_at_time_zero_is_the_identity() {
    let dir = TempDir::new().unwrap();
    assert_exit(
        &ttensor(
            &["gen", "--n", "6", "--p", "3", "--density", "0.3", "--seed", "1",
                "--out", "net.tns3"],
            dir.path(),
        ),
        0,
    );
    assert_exit(
        &ttensor(
            &["texp", "--a", "net.tns3", "--t", "0", "--backend", "dense",
                "--out", "res.tns3"],
            dir.path(),
        ),
        0,
    );
    let res = load_tensor(dir.path().join("res.tns3")).unwrap();
    let id = identity_tensor(6, 3).unwrap();
    assert!(res.sub(&id).unwrap().norm_f() <= 1e-12);
}

#[test]
fn tfunc_backends_agree_through_files() {
    let dir = TempDir::new().unwrap();
    assert_exit(
        &ttensor(
            &["gen", "--n", "5", "--p", "4", "--density", "0.5", "--seed", "2",
                "--out", "net.tns3"],
            dir.path(),
        ),
        0,
    );
    for (backend, out) in [("dense", "d.tns3"), ("facewise", "f.tns3"), ("krylov", "k.tns3")] {
        assert_exit(
            &ttensor(
                &["tfunc", "-f", "exp", "--a", "net.tns3", "--backend", backend,
                    "--m", "10", "--tol", "1e-12", "--out", out],
                dir.path(),
            ),
            0,
        );
    }
    let d = load_tensor(dir.path().join("d.tns3")).unwrap();
    for name in ["f.tns3", "k.tns3"] {
        let other = load_tensor(dir.path().join(name)).unwrap();
        let rel = d.sub(&other).unwrap().norm_f() / d.norm_f();
        assert!(rel <= 1e-10, "{name} deviates by {rel}");
    }
}

#[test]
fn unknown_function_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let out = ttensor(
        &["tfunc", "-f", "sinh", "--a", "missing.tns3", "--out", "x.tns3"],
        dir.path(),
    );
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown function"));
}

#[test]
fn missing_input_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let out = ttensor(
        &["tfunc", "-f", "exp", "--a", "missing.tns3", "--out", "x.tns3"],
        dir.path(),
    );
    assert_exit(&out, 2);
}

#[test]
fn cycle_budget_exhaustion_exits_three_and_still_writes() {
    let dir = TempDir::new().unwrap();
    assert_exit(
        &ttensor(
            &["gen", "--n", "8", "--p", "4", "--density", "0.3", "--seed", "3",
                "--out", "net.tns3"],
            dir.path(),
        ),
        0,
    );
    let out = ttensor(
        &["tfunc", "-f", "exp", "--a", "net.tns3", "--backend", "krylov",
            "--m", "2", "--tol", "1e-16", "--max-cycles", "2", "--out", "best.tns3"],
        dir.path(),
    );
    assert_exit(&out, 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cycle budget"));
    // The best iterate is still delivered.
    assert!(dir.path().join("best.tns3").exists());
}

#[test]
fn comm_report_is_deterministic() {
    let dir = TempDir::new().unwrap();
    assert_exit(
        &ttensor(
            &["gen", "--n", "10", "--p", "4", "--density", "0.25", "--seed", "9",
                "--out", "net.tns3"],
            dir.path(),
        ),
        0,
    );
    let args = ["comm", "--input", "net.tns3", "--top-k", "5",
        "--triple", "1,2,1", "--triple", "3,3,2"];
    assert_exit(&ttensor(&[&args[..], &["--out", "r1.txt"]].concat(), dir.path()), 0);
    assert_exit(&ttensor(&[&args[..], &["--out", "r2.txt"]].concat(), dir.path()), 0);
    let r1 = read(dir.path(), "r1.txt");
    assert_eq!(r1, read(dir.path(), "r2.txt"));
    let text = String::from_utf8(r1).unwrap();
    assert!(text.contains("section,node,i,j,k,value"));
    // Centralities exist for the first min(n, p) = 4 nodes; top-k is capped
    // by that.
    assert_eq!(text.lines().filter(|l| l.starts_with("centrality,")).count(), 4);
    assert!(text.ends_with('\n'));
}

#[test]
fn comm_triple_out_of_range_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    assert_exit(
        &ttensor(
            &["gen", "--n", "4", "--p", "2", "--density", "0.5", "--seed", "4",
                "--out", "net.tns3"],
            dir.path(),
        ),
        0,
    );
    let out = ttensor(
        &["comm", "--input", "net.tns3", "--triple", "5,1,1"],
        dir.path(),
    );
    assert_exit(&out, 2);
}

/// Strips the trailing wall-time column from every per-cycle CSV row so
/// reproducibility can be asserted on the remaining bytes.
fn without_wall_time(csv: &str) -> String {
    csv.lines()
        .map(|line| match line.rsplit_once(',') {
            Some((head, _)) => format!("{head}\n"),
            None => format!("{line}\n"),
        })
        .collect()
}

#[test]
fn experiment_is_reproducible_modulo_wall_time() {
    let dir = TempDir::new().unwrap();
    let args = ["experiment", "--n", "8", "--p", "4", "--density", "0.3",
        "--seed", "12", "--m", "3", "--tol", "1e-10", "--svg"];
    assert_exit(&ttensor(&[&args[..], &["--out", "run1"]].concat(), dir.path()), 0);
    assert_exit(&ttensor(&[&args[..], &["--out", "run2"]].concat(), dir.path()), 0);

    let c1 = String::from_utf8(read(dir.path(), "run1/convergence.csv")).unwrap();
    let c2 = String::from_utf8(read(dir.path(), "run2/convergence.csv")).unwrap();
    assert_eq!(without_wall_time(&c1), without_wall_time(&c2));
    assert!(c1.starts_with("cycle,scheme,case,m,update_norm,true_rel_error,wall_time_ms\n"));
    assert!(c1.ends_with('\n'));

    // The summary carries no timing and must match byte for byte.
    assert_eq!(read(dir.path(), "run1/summary.csv"), read(dir.path(), "run2/summary.csv"));
    let summary = String::from_utf8(read(dir.path(), "run1/summary.csv")).unwrap();
    assert!(summary.starts_with("m,scheme,case,cycles,status\n"));
    // 1 m value x 2 schemes x 2 cases.
    assert_eq!(summary.lines().count(), 5);
    for line in summary.lines().skip(1) {
        assert!(line.ends_with("converged"), "unexpected summary row: {line}");
    }

    let svg = String::from_utf8(read(dir.path(), "run1/convergence.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<polyline").count(), 4);
}

#[test]
fn bench_smoke_completes_quickly() {
    let dir = TempDir::new().unwrap();
    let start = std::time::Instant::now();
    let out = ttensor(
        &["bench", "--n", "4", "--p", "4", "--m", "2", "--tol", "1e-8",
            "--sizes", "4", "--out", "bench.csv"],
        dir.path(),
    );
    assert_exit(&out, 0);
    assert!(start.elapsed().as_secs() < 30);
    let csv = String::from_utf8(read(dir.path(), "bench.csv")).unwrap();
    assert!(csv.starts_with("metric,scheme,n,p,m,value_ms\n"));
    assert!(csv.contains("cycle_mean,classical"));
    assert!(csv.contains("cycle_mean,global"));
    assert!(csv.contains("apply_bcirc,,4,4,,"));
    assert!(csv.ends_with('\n'));
}
