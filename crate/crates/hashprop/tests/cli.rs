use std::process::{Command, Output};

fn hashprop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hashprop")).args(args).output().expect("spawn hashprop")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(hashprop(&[]).status.code(), Some(2));
    assert_eq!(hashprop(&["diag", "--bogus"]).status.code(), Some(2));
    assert_eq!(hashprop(&["--config", "x.toml", "oracle"]).status.code(), Some(2));
    assert_eq!(hashprop(&["--threads", "0", "oracle"]).status.code(), Some(2));
}

#[test]
fn diag_prints_exact_constants() {
    let o = hashprop(&["diag", "--q", "2", "--l", "2", "--n", "4", "--tau", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("# alpha="), "{s}");
    assert!(s.lines().any(|l| l.starts_with("w,")), "{s}");
}

#[test]
fn gen_matrix_is_reproducible() {
    let args = ["--seed", "7", "gen-matrix", "--q", "3", "--l", "3", "--n", "8"];
    let (a, b) = (hashprop(&args), hashprop(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("hashprop-matrix q=3 l=3 n=8"));
}

#[test]
fn oracles_and_types_check_pass() {
    for args in [&["oracle"][..], &["types-check", "--n", "6", "--q", "3"]] {
        let o = hashprop(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stdout(&o));
        assert!(!stdout(&o).contains("FAIL"));
    }
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sw.toml");
    std::fs::write(
        &cfg,
        "name = \"tiny\"\nproblem = \"sw\"\nn = [6]\ntrials = 20\nredraws = 2\n[model]\nxy = [[0.445, 0.055], [0.055, 0.445]]\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = hashprop(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "run"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["tiny.csv", "tiny_trials.csv", "tiny.json", "tiny.gp"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let missing = hashprop(&["--config", dir.path().join("nope.toml").to_str().unwrap(), "run"]);
    assert_eq!(missing.status.code(), Some(2));
}
