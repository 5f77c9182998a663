use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kou-exit"))
        .args(args)
        .output()
        .unwrap()
}

fn run_with(cfg: &Path, args: &[&str]) -> Output {
    let mut all = vec!["--config", cfg.to_str().unwrap()];
    all.extend_from_slice(args);
    run(&all)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &tempfile::TempDir, body: &str) -> PathBuf {
    let path = dir.path().join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

const BASE_MODEL: &str = "[model]\na = 1.0\nsigma2 = 2.0\nlambda = 6.0\np = 0.2\nc = 2.0\nb = 8.0\n[kill]\ns = 1.0\n";

#[test]
fn usage_error_exits_with_2() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(run(&["roots", "--grid", "1:0:5"]).status.code(), Some(2));
}

#[test]
fn config_errors_exit_with_3() {
    assert_eq!(run(&["roots"]).status.code(), Some(3));
    assert_eq!(
        run_with(Path::new("/nonexistent/run.toml"), &["roots"]).status.code(),
        Some(3)
    );

    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(&dir, &format!("{BASE_MODEL}extra = 1\n"));
    assert_eq!(run_with(&unknown, &["roots"]).status.code(), Some(3));
    let bad_p = write_config(&dir, &BASE_MODEL.replace("p = 0.2", "p = 1.2"));
    let out = run_with(&bad_p, &["roots"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let outside = run_with(&config("positive_drift.toml"), &["joint", "--grid", "0:5:3"]);
    assert_eq!(outside.status.code(), Some(3));
}

#[test]
fn numerical_failure_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, &format!("{BASE_MODEL}[interval]\nT = 400.0\n"));
    let out = run_with(&cfg, &["exit"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out.stderr.is_empty());
}

#[test]
fn roots_table_lists_four_roots() {
    let out = run_with(&config("positive_drift.toml"), &["roots"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "root,value");
    assert_eq!(lines.len(), 5);
    let rho1: f64 = lines[1].strip_prefix("rho1,").unwrap().parse().unwrap();
    assert!((rho1 - 0.5504).abs() < 5e-4);
}

#[test]
fn exit_rows_hit_boundary_values() {
    let out = run_with(&config("positive_drift.toml"), &["exit", "--grid", "0:2:3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("T,x,q_up,q_down,q_total\n"));
    let row = text.lines().find(|l| l.starts_with("2,0,")).expect("row at T=2, x=0");
    let vals: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
    assert!((vals[2] - 1.0).abs() < 1e-10 && vals[3].abs() < 1e-10, "{row}");
}

#[test]
fn out_flag_writes_the_same_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("density.csv");
    let cfg = config("negative_drift.toml");
    let to_stdout = run_with(&cfg, &["density"]);
    let to_file = run_with(&cfg, &["density", "--out", path.to_str().unwrap()]);
    assert!(to_stdout.status.success() && to_file.status.success());
    assert!(to_file.stdout.is_empty());
    assert_eq!(fs::read(&path).unwrap(), to_stdout.stdout);
}

#[test]
fn closed_form_commands_succeed_on_both_configs() {
    for name in ["negative_drift.toml", "positive_drift.toml"] {
        for cmd in ["extrema", "passage", "joint", "prelimit", "verify"] {
            let out = run_with(&config(name), &[cmd]);
            assert!(
                out.status.success(),
                "{name} {cmd}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            assert!(stdout(&out).lines().count() > 1);
        }
    }
}

#[test]
fn simulate_is_reproducible_and_seed_sensitive() {
    let cfg = config("positive_drift.toml");
    let a = run_with(&cfg, &["simulate", "--paths", "4000", "--seed", "3"]);
    let b = run_with(&cfg, &["simulate", "--paths", "4000", "--seed", "3"]);
    let c = run_with(&cfg, &["simulate", "--paths", "4000", "--seed", "4"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert!(stdout(&a).starts_with("quantity,estimate,std_error,closed_form,z\n"));
}
