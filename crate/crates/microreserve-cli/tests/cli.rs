//! End-to-end pipeline tests through the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_microreserve")
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("spawn microreserve")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn spec_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy_portfolio.toml")
}

fn run_pipeline(dir: &Path, workers: &str) {
    let spec = spec_path();
    assert_ok(&run(dir, &["--seed", "7", "generate", "--spec", spec.to_str().unwrap()]));
    let txns = dir.join("transactions.csv");
    assert_ok(&run(
        dir,
        &["--as-of", "31-12-2012", "ingest", "--input", txns.to_str().unwrap()],
    ));
    assert_ok(&run(dir, &["--seed", "7", "--workers", workers, "fit"]));
    assert_ok(&run(
        dir,
        &[
            "--seed",
            "7",
            "--as-of",
            "31-12-2012",
            "--workers",
            workers,
            "simulate",
            "--dump-draws",
        ],
    ));
    assert_ok(&run(dir, &["--seed", "7", "ibnr"]));
    assert_ok(&run(dir, &["--seed", "7", "chainladder", "--bootstrap", "0"]));
    let truth = dir.join("truth.json");
    assert_ok(&run(dir, &["evaluate", "--truth", truth.to_str().unwrap()]));
    assert_ok(&run(dir, &["report"]));
}

#[test]
fn full_pipeline_smoke() {
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(dir.path(), "2");
    for artifact in [
        "transactions.csv",
        "truth.json",
        "periods.csv",
        "rbns_snapshot.csv",
        "triangle.csv",
        "models.json",
        "reserve_portfolio.csv",
        "reserve_claims.csv",
        "reserve_draws.csv",
        "ibnr_summary.csv",
        "chainladder_projection.csv",
        "metrics.csv",
        "report.txt",
    ] {
        assert!(dir.path().join(artifact).exists(), "missing {artifact}");
    }
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("Transitions in the training data"));
    assert!(report.contains("Best-estimate distribution"));
}

#[test]
fn pipeline_reports_are_byte_identical_across_seeds_and_workers() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(a.path(), "1");
    run_pipeline(b.path(), "4");
    for artifact in [
        "periods.csv",
        "models.json",
        "reserve_portfolio.csv",
        "reserve_claims.csv",
        "reserve_draws.csv",
        "ibnr_summary.csv",
        "metrics.csv",
        "report.txt",
    ] {
        let left = std::fs::read(a.path().join(artifact)).unwrap();
        let right = std::fs::read(b.path().join(artifact)).unwrap();
        assert_eq!(left, right, "artifact {artifact} differs across worker counts");
    }
}

#[test]
fn simulate_without_fit_is_a_named_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--seed", "1", "--as-of", "31-12-2012", "simulate"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("models not found"), "stderr: {stderr}");
}

#[test]
fn simulate_requires_as_of_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--seed", "1", "simulate"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--as-of"));
    let out = run(dir.path(), &["--as-of", "31-12-2012", "simulate"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

#[test]
fn artifacts_are_not_overwritten_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let spec = spec_path();
    assert_ok(&run(dir.path(), &["--seed", "7", "generate", "--spec", spec.to_str().unwrap()]));
    let again = run(dir.path(), &["--seed", "7", "generate", "--spec", spec.to_str().unwrap()]);
    assert!(!again.status.success());
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));
    assert_ok(&run(
        dir.path(),
        &["--seed", "7", "--force", "generate", "--spec", spec.to_str().unwrap()],
    ));
}

#[test]
fn chainladder_is_deterministic_given_a_seed() {
    // A triangle big enough for the bootstrap.
    let triangle = "\
accident_year,dev_0,dev_1,dev_2,dev_3
2006,310,148,62,30
2007,290,140,58,
2008,305,150,,
2009,300,,,
";
    let run_once = || {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("t.csv"), triangle).unwrap();
        let t = dir.path().join("t.csv");
        assert_ok(&run(
            dir.path(),
            &["--seed", "1", "chainladder", "--triangle", t.to_str().unwrap(), "--bootstrap", "500"],
        ));
        (
            std::fs::read(dir.path().join("chainladder_projection.csv")).unwrap(),
            std::fs::read(dir.path().join("chainladder_bootstrap.csv")).unwrap(),
        )
    };
    let (proj1, boot1) = run_once();
    let (proj2, boot2) = run_once();
    assert_eq!(proj1, proj2);
    assert_eq!(boot1, boot2);
}
