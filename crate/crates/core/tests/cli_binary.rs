use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn freqdiv(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freqdiv")).args(args).current_dir(dir).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn simulate_writes_csv_script_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "experiment = \"simulate\"\n[params]\nn_tr = 2\n[run]\nt_end = 20\n").unwrap();
    let out = freqdiv(&["simulate", "--config", "run.toml", "--out", "res"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["timeseries.csv", "timeseries.gp", "manifest.json"] {
        assert!(dir.path().join("res").join(f).is_file(), "{f}");
    }
    let csv = fs::read_to_string(dir.path().join("res/timeseries.csv")).unwrap();
    assert!(csv.starts_with("time_ns,n_a,n_b,n_c,P_1,P_2,trace,purity\n0.0,0,0,0,0,0,1,1\n"));
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "experiment = \"simulate\"\noutput_dir = \"a\"\n[run]\nt_end = 10\n").unwrap();
    let out = freqdiv(
        &["simulate", "--config", "run.toml", "--out", "b", "--truncation", "2", "--method", "expm"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = fs::read_to_string(dir.path().join("b/manifest.json")).unwrap();
    assert!(manifest.contains("\"method\": \"expm\""));
    assert!(!dir.path().join("a").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "experiment = \"simulate\"\n[params]\ng3 = \"ten\"\n").unwrap();
    let out = freqdiv(&["simulate", "--config", "bad.toml"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("params.g3"));
    assert_eq!(code(&freqdiv(&["simulate", "--config", "absent.toml"], dir.path())), 2);
    assert_eq!(code(&freqdiv(&["pulse", "--config", "bad.toml"], dir.path())), 2);
    assert_eq!(code(&freqdiv(&["simulate", "--method", "euler"], dir.path())), 2);
    assert_eq!(code(&freqdiv(&["simulate", "--truncation", "1"], dir.path())), 2);
    assert_eq!(code(&freqdiv(&["simulate", "--method", "expm"], dir.path())), 2);
}

#[test]
fn divergence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = "experiment = \"simulate\"\n[params]\nn_tr = 2\n[integrator]\ndt = 100\nsample_interval = 100\n[run]\nt_end = 5000\n";
    fs::write(dir.path().join("unstable.toml"), text).unwrap();
    let out = freqdiv(&["simulate", "--config", "unstable.toml", "--out", "res"], dir.path());
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn validate_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = freqdiv(&["validate"], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(code(&out), 0, "{stdout}");
    assert!(stdout.lines().count() >= 8 && stdout.lines().all(|l| l.starts_with("PASS ")), "{stdout}");
}
