//! End-to-end checks of the binary: help surface, exit codes, and
//! cross-command consistency of the artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_cfcover")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("golden file {path:?}: {e}"))
}

fn write_tiny_pool(dir: &Path) -> PathBuf {
    let path = dir.join("pool.csv");
    let out = run_in(
        dir,
        &[
            "gen-toy",
            "--seed",
            "7",
            "--clusters-t1",
            "5",
            "--clusters-t0",
            "3",
            "--per-cluster",
            "10",
            "--out",
            "pool.csv",
        ],
    );
    assert!(out.status.success(), "{out:?}");
    path
}

#[test]
fn help_output_matches_the_golden_files() {
    let cases: [(&[&str], &str); 9] = [
        (&["--help"], "help.txt"),
        (&["gen-toy", "--help"], "gen-toy.txt"),
        (&["calibrate", "--help"], "calibrate.txt"),
        (&["acquire", "--help"], "acquire.txt"),
        (&["oracle", "--help"], "oracle.txt"),
        (&["oracle", "radius-sum", "--help"], "oracle-radius-sum.txt"),
        (&["oracle", "coverage", "--help"], "oracle-coverage.txt"),
        (&["bench", "--help"], "bench.txt"),
        (&["report", "--help"], "report.txt"),
    ];
    for (args, file) in cases {
        let out = Command::new(bin()).args(args).output().expect("runs");
        assert!(out.status.success(), "{args:?}");
        let text = String::from_utf8(out.stdout).expect("utf-8 help");
        assert_eq!(text, golden(file), "help drifted for {args:?}");
    }
}

#[test]
fn unknown_flags_print_usage_and_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["gen-toy", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Usage"), "no usage text in {err:?}");

    let out = run_in(tmp.path(), &["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validation_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    write_tiny_pool(tmp.path());
    let out = run_in(
        tmp.path(),
        &[
            "acquire", "--pool", "pool.csv", "--method", "nope", "--out", "r.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let out = run_in(tmp.path(), &["calibrate", "--pool", "missing.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gen_toy_runs_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "gen-toy".to_string(),
            "--seed".into(),
            "7".into(),
            "--clusters-t1".into(),
            "4".into(),
            "--clusters-t0".into(),
            "2".into(),
            "--per-cluster".into(),
            "6".into(),
            "--out".into(),
            out.to_string(),
        ]
    };
    for out in ["a.csv", "b.csv"] {
        let args: Vec<String> = args(out);
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        assert!(run_in(tmp.path(), &refs).status.success());
    }
    let a = fs::read(tmp.path().join("a.csv")).unwrap();
    let b = fs::read(tmp.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn oracle_refuses_oversized_instances_with_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["oracle", "coverage", "--n", "25"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds the exhaustive-search limit"));

    let out = run_in(tmp.path(), &["oracle", "radius-sum", "--n", "25"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_report_matches_acquire_for_the_same_seed() {
    let tmp = tempfile::tempdir().unwrap();
    write_tiny_pool(tmp.path());
    let out = run_in(
        tmp.path(),
        &[
            "acquire",
            "--pool",
            "pool.csv",
            "--steps",
            "5",
            "--delta",
            "0.2",
            "--seed",
            "1",
            "--out",
            "direct.csv",
        ],
    );
    assert!(out.status.success(), "{out:?}");
    fs::write(
        tmp.path().join("bench.conf"),
        "pool_csv=pool.csv\nmethods=fccm\nsteps=5\ndelta=0.2\nseeds=1\n",
    )
    .unwrap();
    let out = run_in(
        tmp.path(),
        &["bench", "--config", "bench.conf", "--out", "bdir"],
    );
    assert!(out.status.success(), "{out:?}");
    let direct = fs::read(tmp.path().join("direct.csv")).unwrap();
    let benched = fs::read(tmp.path().join("bdir/fccm.csv")).unwrap();
    assert_eq!(direct, benched);
}

#[test]
fn report_round_trips_between_formats() {
    let tmp = tempfile::tempdir().unwrap();
    write_tiny_pool(tmp.path());
    assert!(run_in(
        tmp.path(),
        &["acquire", "--pool", "pool.csv", "--steps", "4", "--delta", "0.2", "--out", "r.csv"],
    )
    .status
    .success());
    assert!(
        run_in(tmp.path(), &["report", "--in", "r.csv", "--out", "r.json"])
            .status
            .success()
    );
    assert!(run_in(
        tmp.path(),
        &["report", "--in", "r.json", "--out", "back.csv"]
    )
    .status
    .success());
    let original = fs::read(tmp.path().join("r.csv")).unwrap();
    let back = fs::read(tmp.path().join("back.csv")).unwrap();
    assert_eq!(original, back);
}

#[test]
fn order_file_lists_acquired_rows_by_step() {
    let tmp = tempfile::tempdir().unwrap();
    write_tiny_pool(tmp.path());
    assert!(run_in(
        tmp.path(),
        &[
            "acquire",
            "--pool",
            "pool.csv",
            "--steps",
            "3",
            "--step-len",
            "2",
            "--delta",
            "0.2",
            "--out",
            "r.csv",
            "--order-out",
            "order.csv",
        ],
    )
    .status
    .success());
    let text = fs::read_to_string(tmp.path().join("order.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,index,group"));
    let rows: Vec<Vec<usize>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 6);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0], i / 2 + 1);
        assert!(row[2] <= 1);
    }
    // pool rows are distinct acquisitions
    let mut seen: Vec<usize> = rows.iter().map(|r| r[1]).collect();
    seen.sort_unstable();
    seen.dedup();
    assert_eq!(seen.len(), 6);
}

#[test]
fn calibrate_prints_its_choice_and_writes_the_curve() {
    let tmp = tempfile::tempdir().unwrap();
    write_tiny_pool(tmp.path());
    let out = run_in(
        tmp.path(),
        &[
            "calibrate",
            "--pool",
            "pool.csv",
            "--grid-start",
            "0.1",
            "--grid-end",
            "0.5",
            "--grid-step",
            "0.1",
            "--threshold",
            "0.8",
            "--out",
            "curve.csv",
        ],
    );
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("grid points: 5"), "{stdout}");
    assert!(stdout.contains("chosen delta:"), "{stdout}");
    let curve = fs::read_to_string(tmp.path().join("curve.csv")).unwrap();
    assert!(curve.starts_with("delta,coverage,steps\n"));
    assert_eq!(curve.lines().count(), 6);
}
