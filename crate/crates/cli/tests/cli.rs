//! End-to-end tests of the `valvetune` binary: subcommands, exit codes, and
//! artifact reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn valvetune() -> Command {
    Command::new(env!("CARGO_BIN_EXE_valvetune"))
}

fn write_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    let base = r#"
seed = 21
functional = "heur"
acquisition = "ei"
budget = 1
init_design = 2

[heur.steps]
levels = [10.0, 15.0, 10.0]
hold_s = 2.0
"#;
    std::fs::write(&path, format!("{base}\n{extra}")).unwrap();
    path
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn tune_produces_artifacts_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let out_dir = dir.path().join("run");
    let out = valvetune()
        .args(["tune", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("completed 3 evaluations"), "{stdout}");
    for file in [
        "log.jsonl",
        "report.json",
        "config_snapshot.json",
        "plot/cost_vs_iteration.csv",
        "plot/cost_vs_iteration.svg",
        "trajectories/iter_000.csv",
    ] {
        assert!(out_dir.join(file).exists(), "missing {file}");
    }
    // Every log line parses as JSON with the schema marker.
    let log = std::fs::read_to_string(out_dir.join("log.jsonl")).unwrap();
    for line in log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["schema_version"], 1);
    }
}

#[test]
fn identical_runs_reproduce_every_deterministic_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    for name in ["a", "b"] {
        let out = valvetune()
            .args(["tune", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(dir.path().join(name))
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    // Everything except the wall-clock sidecar must match byte for byte.
    for file in [
        "log.jsonl",
        "report.json",
        "config_snapshot.json",
        "plot/cost_vs_iteration.csv",
        "trajectories/iter_000.csv",
        "trajectories/iter_002.csv",
    ] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "artifact {file} differs between identical runs");
    }
}

#[test]
fn malformed_bounds_exit_with_code_two_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"
[[bounds.dims]]
name = "t_set"
lower = 0.3
upper = 0.1
scale = "linear"
"#,
    );
    let out = valvetune()
        .args(["tune", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("t_set"), "{}", stderr_of(&out));
}

#[test]
fn evaluate_prints_cost_and_refuses_out_of_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let out = valvetune()
        .args(["evaluate", "--config"])
        .arg(&config)
        .args(["--", "0.1", "0.02", "-2.0", "-20.0"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("J = "), "{stdout}");
    assert!(stdout.contains("per-step metrics"), "{stdout}");

    // t_obs below the 10 ms safety bound is refused.
    let out = valvetune()
        .args(["evaluate", "--config"])
        .arg(&config)
        .args(["--", "0.1", "0.005", "-2.0", "-20.0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("t_obs"), "{}", stderr_of(&out));
}

#[test]
fn repeated_evaluate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let run = || {
        let out = valvetune()
            .args(["evaluate", "--config"])
            .arg(&config)
            .args(["--", "0.08", "0.015", "-1.0", "-30.0"])
            .output()
            .unwrap();
        assert!(out.status.success());
        String::from_utf8_lossy(&out.stdout).into_owned()
    };
    assert_eq!(run(), run());
}

#[test]
fn baseline_grid_evaluates_the_full_lattice() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let out_dir = dir.path().join("grid");
    let out = valvetune()
        .args(["baseline", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .args(["--method", "grid", "--points-per-dim", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));
    let log = std::fs::read_to_string(out_dir.join("log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 16);
}

#[test]
fn resume_matches_an_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let full = dir.path().join("full");
    let out = valvetune()
        .args(["tune", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&full)
        .output()
        .unwrap();
    assert!(out.status.success());
    let full_log = std::fs::read_to_string(full.join("log.jsonl")).unwrap();

    let partial = dir.path().join("partial");
    std::fs::create_dir_all(&partial).unwrap();
    std::fs::copy(
        full.join("config_snapshot.json"),
        partial.join("config_snapshot.json"),
    )
    .unwrap();
    let head: String = full_log.lines().take(1).map(|l| format!("{l}\n")).collect();
    std::fs::write(partial.join("log.jsonl"), head).unwrap();

    let out = valvetune()
        .args(["resume", "--run"])
        .arg(&partial)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));
    let resumed = std::fs::read_to_string(partial.join("log.jsonl")).unwrap();
    assert_eq!(full_log, resumed);
}

#[test]
fn report_summarizes_a_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let run_dir = dir.path().join("run");
    valvetune()
        .args(["tune", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&run_dir)
        .output()
        .unwrap();
    let out = valvetune()
        .args(["report", "--run"])
        .arg(&run_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("history (3 evaluations)"), "{stdout}");
    assert!(stdout.contains("incumbent"), "{stdout}");
}

#[test]
fn output_env_variable_sets_the_default_base_directory() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let base = dir.path().join("envbase");
    let out = valvetune()
        .env("VALVETUNE_OUT", &base)
        .args(["tune", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(base.join("tune_heur_ei_seed21/log.jsonl").exists());
}
