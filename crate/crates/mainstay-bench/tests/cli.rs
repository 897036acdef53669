//! End-to-end checks of the `bench` binary: header shape, exit codes,
//! file output, and the worker-count environment override.

use std::process::Command;

use mainstay_bench::CSV_HEADER;

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bench"))
}

#[test]
fn stdout_starts_with_the_exact_header() {
    let output = bench()
        .args([
            "kendall",
            "--sizes",
            "30",
            "--dims",
            "2",
            "--workers",
            "1",
            "--reps",
            "3",
        ])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8(output.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.count(), 3, "sequential, pool, parallel_for");
}

#[test]
fn invalid_configurations_exit_nonzero() {
    let too_few_reps = bench().args(["kde", "--reps", "2"]).output().unwrap();
    assert_eq!(too_few_reps.status.code(), Some(2));

    let zero_size = bench()
        .args(["empty_jobs", "--sizes", "0", "--reps", "3"])
        .output()
        .unwrap();
    assert_eq!(zero_size.status.code(), Some(2));

    let unknown_workload = bench().args(["frobnicate"]).output().unwrap();
    assert_ne!(unknown_workload.status.code(), Some(0));
}

#[test]
fn out_flag_writes_the_csv_to_a_file() {
    let path = std::env::temp_dir().join(format!("bench-out-{}.csv", std::process::id()));
    let output = bench()
        .args(["interrupt_check", "--sizes", "1000", "--reps", "3"])
        .arg("--out")
        .arg(&path)
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(
        output.stdout.is_empty(),
        "rows went to the file, not stdout"
    );
    let written = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert!(written.starts_with(CSV_HEADER));
    assert_eq!(
        written.lines().count(),
        3,
        "header plus host and child rows"
    );
}

#[test]
fn workers_env_var_sets_the_default_worker_count() {
    let output = bench()
        .args(["empty_jobs", "--sizes", "10", "--reps", "3"])
        .env("MAINSTAY_WORKERS", "3")
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    let pool_row = stdout
        .lines()
        .find(|l| l.contains(",pool,"))
        .expect("a pool row");
    let workers_column: Vec<&str> = pool_row.split(',').collect();
    assert_eq!(workers_column[4], "3", "row: {pool_row}");
}
