use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use masquerade_cli::{dispatch_to, EXIT_CONFIG, EXIT_OK, EXIT_USAGE, EXIT_VIOLATION};

fn cfg(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name).display().to_string()
}

fn call(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("masquerade").chain(args.iter().copied());
    let code = dispatch_to(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> =
        fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    names
}

#[test]
fn usage_errors() {
    assert_eq!(call(&[]).0, EXIT_USAGE);
    assert_eq!(call(&["launch"]).0, EXIT_USAGE);
    assert_eq!(call(&["run"]).0, EXIT_USAGE);
    let (code, _, err) = call(&["sweep", "--config", &cfg("table1.cfg"), "--key", "mode", "--values", "ideal"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("mode"), "{err}");
    let (code, _, _) = call(&["compare", "--config", &cfg("table1.cfg"), "--modes", "fastest"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn help_is_not_an_error() {
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, EXIT_OK);
    for sub in ["run", "sweep", "verify", "compare"] {
        assert!(out.contains(sub));
    }
}

#[test]
fn config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    for text in ["colour=blue\n", "f=2\n", "rounds\n", "eta_model=trace\n"] {
        fs::write(&bad, text).unwrap();
        let (code, _, err) = call(&["run", "--config", bad.to_str().unwrap()]);
        assert_eq!(code, EXIT_CONFIG, "{text:?}: {err}");
        assert!(!err.is_empty());
    }
}

#[test]
fn run_writes_only_under_out() {
    let cwd = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_masquerade"))
        .args(["run", "--config", &cfg("table1.cfg"), "--out"])
        .arg(out.path().join("res"))
        .current_dir(cwd.path())
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_OK));
    assert!(listing(cwd.path()).is_empty());
    assert_eq!(listing(&out.path().join("res")), ["epochs.csv", "metrics.csv", "summary.csv", "summary.txt"]);
    let metrics = fs::read_to_string(out.path().join("res/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 10_001);
    assert!(!metrics.contains('\r'));
    let stdout = String::from_utf8(status.stdout).unwrap();
    assert_eq!(stdout, fs::read_to_string(out.path().join("res/summary.txt")).unwrap());
}

#[test]
fn run_without_out_writes_nothing() {
    let cwd = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_masquerade"))
        .args(["run", "--config", &cfg("fatal.cfg")])
        .current_dir(cwd.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_OK));
    assert!(listing(cwd.path()).is_empty());
}

#[test]
fn seed_override_changes_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    for (d, seed) in [(&a, "1"), (&b, "1"), (&c, "2")] {
        assert_eq!(
            call(&["run", "--config", &cfg("table1.cfg"), "--seed", seed, "--out", d.to_str().unwrap()]).0,
            EXIT_OK
        );
    }
    let read = |d: &Path| fs::read(d.join("metrics.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn sweep_token_price() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = call(&[
        "sweep",
        "--config",
        &cfg("table1.cfg"),
        "--key",
        "y",
        "--values",
        "10,40,80,160",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let csv = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    for (row, v) in rows.iter().zip(["10", "40", "80", "160"]) {
        assert!(row.starts_with(&format!("y={v},masquerade,0,")), "{row}");
    }
    assert!(out.lines().next().unwrap().starts_with("label"));
    assert!(dir.path().join("metrics_y=160_seed0.csv").exists());
}

#[test]
fn sweep_replicates() {
    let (code, out, _) =
        call(&["sweep", "--config", &cfg("table1.cfg"), "--key", "f", "--values", "0.2,0.8", "--seeds", "3"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().count(), 7);
}

#[test]
fn verify_valid_parameters_pass() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = call(&[
        "verify",
        "--config",
        &cfg("thm1valid.cfg"),
        "--epochs",
        "30",
        "--seeds",
        "20",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("total: 0 bound violation(s)"));
    assert_eq!(listing(dir.path()).len(), 20);
    let report = fs::read_to_string(dir.path().join("bounds_seed0.csv")).unwrap();
    assert_eq!(report.lines().count(), 32);
}

#[test]
fn verify_outside_preconditions_fails() {
    let (code, out, _) = call(&["verify", "--config", &cfg("table1.cfg")]);
    assert_eq!(code, EXIT_VIOLATION);
    assert!(out.contains("precondition"));
}

#[test]
fn verify_needs_constant_value() {
    assert_eq!(call(&["verify", "--config", &cfg("cauchy.cfg")]).0, EXIT_CONFIG);
}

#[test]
fn compare_baselines_share_the_stream() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = call(&["compare", "--config", &cfg("table1.cfg"), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(
        listing(dir.path()),
        ["metrics_ideal.csv", "metrics_masquerade.csv", "metrics_status-quo.csv", "summary.csv", "summary.txt"]
    );
    let csv = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let mev: Vec<u64> = csv.lines().skip(1).map(|l| l.split(',').nth(7).unwrap().parse().unwrap()).collect();
    // rows follow --modes; the masquerade user also needs a token to act
    let [masq, status_quo, ideal] = mev[..] else { panic!("{mev:?}") };
    assert_eq!(status_quo, ideal);
    assert!(masq <= ideal);
}

#[test]
fn compare_continuous_and_phased() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = call(&[
        "compare",
        "--config",
        &cfg("table1.cfg"),
        "--modes",
        "masquerade,phased",
        "--epochs",
        "5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("continuous_w_u"));
    let table = fs::read_to_string(dir.path().join("phase_compare.csv")).unwrap();
    assert!(table.starts_with("epoch,continuous_w_u,phased_w_u,difference\n"));
    assert!(table.lines().count() > 2);
}
