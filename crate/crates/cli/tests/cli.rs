//! End-to-end tests against the built binary: exit codes, schemas,
//! determinism, and the environment seed override.

use flowbal_cli::csv::{Row, BASE_HEADER, LOSS_CURVE_HEADER};
use flowbal_core::{PolicyKind, StabilityFlag};
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flowbal"))
}

fn config(name: &str, json: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("flowbal-cli-{name}.json"));
    std::fs::write(&path, json).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn bad_policy_and_missing_config_exit_2() {
    let cfg = config(
        "bad-policy",
        r#"{"name": "t", "mode": "single", "policies": ["lru"], "lambda": 0.9}"#,
    );
    let out = bin().arg("simulate").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("policy"));

    let out = bin().args(["simulate", "--config", "/no/such/file.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_emits_one_parseable_row() {
    let cfg = config(
        "single-ref",
        r#"{"name": "ref", "mode": "single", "policies": ["jlw"], "lambda": "0.9",
            "horizon": 100000, "warmup": 10000, "base_seed": 5}"#,
    );
    let out = bin().arg("simulate").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(BASE_HEADER));
    let row = Row::parse(lines.next().unwrap()).unwrap();
    assert!(lines.next().is_none());
    assert_eq!(row.policy, PolicyKind::Jlw);
    assert_eq!(row.num_aps, 5);
    assert_eq!(row.beta, 20.0);
    assert_eq!(row.w, 5.0);
    assert_eq!(row.slots, 100_000);
    assert!(row.summary.mean_total_workload.is_finite());
    assert!(row.summary.mean_total_workload > 0.0);
    assert_eq!(row.summary.stability, StabilityFlag::Stable);
    assert!(row.analytic_jlw.is_none());
}

#[test]
fn repeated_runs_are_byte_identical_across_worker_counts() {
    let cfg = config(
        "determinism",
        r#"{"name": "det", "mode": "lambda-sweep", "policies": ["jlw", "rlb"],
            "lambda_grid": ["0.5", "0.8"], "horizon": 20000, "warmup": 2000,
            "base_seed": 99}"#,
    );
    let one = bin().arg("sweep").arg("--config").arg(&cfg).output().unwrap();
    let again = bin().arg("sweep").arg("--config").arg(&cfg).output().unwrap();
    let wide =
        bin().arg("sweep").arg("--config").arg(&cfg).args(["--workers", "4"]).output().unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, again.stdout);
    assert_eq!(one.stdout, wide.stdout);
}

#[test]
fn sweep_rows_carry_overlays_and_couple_policy_seeds() {
    let cfg = config(
        "eps-sweep",
        r#"{"name": "gap", "mode": "eps-sweep", "policies": ["jlw", "rlb"],
            "eps_grid": ["2.5", "0.5"], "horizon": 20000, "warmup": 2000,
            "base_seed": 4}"#,
    );
    let out = bin().arg("sweep").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let rows: Vec<Row> = text.lines().skip(1).map(|l| Row::parse(l).unwrap()).collect();
    assert_eq!(rows.len(), 4);
    assert!((rows[0].eps - 2.5).abs() < 1e-9);
    assert!((rows[2].eps - 0.5).abs() < 1e-9);
    for row in &rows {
        assert_eq!(row.analytic_jlw, Some(30.0));
        assert_eq!(row.analytic_rlb, Some(40.0));
    }
    // Same grid point, different policy: the seed is shared so arrival and
    // size draws are coupled.
    assert_eq!(rows[0].seed, rows[1].seed);
    assert_ne!(rows[0].seed, rows[2].seed);
}

#[test]
fn env_seed_overrides_the_config_seed() {
    let cfg = config(
        "env-seed",
        r#"{"name": "seeded", "mode": "single", "policies": ["rlb"], "lambda": "0.5",
            "horizon": 5000, "warmup": 500, "base_seed": 1}"#,
    );
    let plain = bin().arg("simulate").arg("--config").arg(&cfg).output().unwrap();
    let forced = bin()
        .arg("simulate")
        .arg("--config")
        .arg(&cfg)
        .env("FLOWBAL_SEED", "42")
        .output()
        .unwrap();
    let seed_of = |o: &Output| Row::parse(stdout(o).lines().nth(1).unwrap()).unwrap().seed;
    assert_ne!(seed_of(&plain), seed_of(&forced));

    let bad = bin()
        .arg("simulate")
        .arg("--config")
        .arg(&cfg)
        .env("FLOWBAL_SEED", "not-a-seed")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("FLOWBAL_SEED"));
}

#[test]
fn guard_flag_trips_to_exit_3_under_simulate() {
    // One AP at offered load 4.5 blows through any finite guard.
    let cfg = config(
        "overload",
        r#"{"name": "overload", "mode": "single", "policies": ["bcf"], "num_aps": 1,
            "lambda": "0.9", "horizon": 500000, "warmup": 1000}"#,
    );
    let path = std::env::temp_dir().join("flowbal-cli-guard.csv");
    let out = bin()
        .arg("simulate")
        .arg("--config")
        .arg(&cfg)
        .args(["--guard", "800"])
        .arg("--out")
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr(&out));
    let text = std::fs::read_to_string(&path).unwrap();
    let row = Row::parse(text.lines().nth(1).unwrap()).unwrap();
    assert_eq!(row.summary.stability, StabilityFlag::SuspectedUnstable);
    assert!(row.slots < 500_000);
}

#[test]
fn sweep_mode_guard_trips_are_advisory_by_default() {
    let cfg = config(
        "overload-sweep",
        r#"{"name": "overload", "mode": "lambda-sweep", "policies": ["bcf"], "num_aps": 1,
            "lambda_grid": ["0.9"], "horizon": 500000, "warmup": 1000, "guard": 800}"#,
    );
    let out = bin().arg("sweep").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let row = Row::parse(text.lines().nth(1).unwrap()).unwrap();
    assert_eq!(row.summary.stability, StabilityFlag::SuspectedUnstable);

    // fail_on_instability promotes the trip back to a fatal exit.
    let cfg = config(
        "overload-sweep-fatal",
        r#"{"name": "overload", "mode": "lambda-sweep", "policies": ["bcf"], "num_aps": 1,
            "lambda_grid": ["0.9"], "horizon": 500000, "warmup": 1000, "guard": 800,
            "fail_on_instability": true}"#,
    );
    let out = bin().arg("sweep").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_rejects_sweep_configs() {
    let cfg = config(
        "mode-mismatch",
        r#"{"name": "t", "mode": "lambda-sweep", "policies": ["jlw"],
            "lambda_grid": [0.5], "horizon": 5000}"#,
    );
    let out = bin().arg("simulate").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sweep"));
}

#[test]
fn loss_curve_mode_emits_the_analytic_schema() {
    let cfg = config(
        "loss-curve",
        r#"{"name": "curve", "mode": "bcf-loss-curve", "delta_grid": [0, "0.5", 1]}"#,
    );
    let out = bin().arg("sweep").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], LOSS_CURVE_HEADER);
    assert_eq!(lines.len(), 4);
    // The fully polarized channel halves throughput and joins surely.
    assert_eq!(lines[3], "1,curve,1,1,0,1,0.5,1");
}

#[test]
fn analytic_queries_print_closed_forms() {
    let check = |args: &[&str], want: &str| {
        let out = bin().arg("analytic").args(args).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "args {args:?}: {}", stderr(&out));
        let text = stdout(&out);
        assert!(text.contains(want), "args {args:?}: got {text:?}, want {want:?}");
    };
    check(&["capacity", "--m", "7"], "capacity 7");
    check(&["jlw-limit", "--sigma2", "60"], "jlw_limit 30");
    check(&["rlb-limit", "--sigma2", "60", "--m", "5"], "rlb_limit_total 40");
    check(&["bcf-join", "--p1", "1", "--p2", "0"], "bcf_join_prob 1");
    check(&["bcf-loss", "--p1", "0.9", "--p2", "0.4"], "bcf_throughput_loss 0.33333333333333");
    check(&["flow-variance", "--w", "5", "--beta", "20"], "flow_size_variance 60");

    // Domain errors exit 2.
    let out = bin().args(["analytic", "bcf-join", "--p1", "0.2", "--p2", "0.8"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
