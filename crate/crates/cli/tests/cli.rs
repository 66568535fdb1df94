use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cdmm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdmm"))
        .args(args)
        .env_remove("CDMM_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// The metrics JSON without its wall-clock section.
fn counts(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert!(v.as_object_mut().unwrap().remove("timings").is_some());
    v
}

fn field(text: &str, key: &str) -> Option<String> {
    text.lines()
        .find(|l| l.starts_with(&format!("  \"{key}\":")))
        .map(|l| l.split_once(':').unwrap().1.trim().trim_end_matches(',').to_string())
}

#[test]
fn ring_info_example() {
    let o = cdmm(&["ring-info", "--p", "2", "--e", "2", "--d", "2"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("modulus x^2+x+1"), "{out}");
    assert!(out.contains("T-prefix [0, 1, ξ, 3ξ+3]"), "{out}");
}

#[test]
fn rmfe_check_exhaustive() {
    let o = cdmm(&["rmfe-check", "--p", "2", "--e", "2", "--d", "1", "--n", "2", "--m", "3", "--exhaustive"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("256/256 pairs pass"));
    let o = cdmm(&["rmfe-check", "--p", "2", "--e", "64", "--n", "2", "--m", "3", "--exhaustive"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cdmm(&["rmfe-check", "--p", "2", "--e", "64", "--n", "2", "--m", "3", "--trials", "50"]);
    assert!(stdout(&o).contains("50/50 random pairs pass"));
}

#[test]
fn run_plain_example_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.json");
    let o = cdmm(&[
        "run", "--scheme", "plain", "--p", "2", "--e", "64", "--d", "1", "--t", "64", "--r", "64", "--s", "64",
        "--u", "2", "--v", "2", "--w", "1", "--N", "8", "--verify", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(field(&text, "recovery_threshold").as_deref(), Some("4"));
    assert_eq!(field(&text, "verified").as_deref(), Some("true"));
    assert_eq!(field(&text, "schema").as_deref(), Some("1"));
}

#[test]
fn same_seed_same_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = Command::new(env!("CARGO_BIN_EXE_cdmm"))
            .args([
                "run", "--scheme", "rmfe-i", "--p", "2", "--e", "16", "--t", "8", "--r", "8", "--s", "8", "--u",
                "2", "--v", "2", "--w", "1", "--N", "10", "--straggler-prob", "0.3", "--jitter", "4", "--repeat",
                "2", "--out", out.to_str().unwrap(),
            ])
            .env("CDMM_SEED", "77")
            .output()
            .unwrap();
        (o.status.code(), out)
    };
    let (ca, a) = run("a.json");
    let (cb, b) = run("b.json");
    assert_eq!((ca, cb), (Some(0), Some(0)));
    let (ja, jb) = (counts(&a), counts(&b));
    assert_eq!(ja, jb);
    assert_eq!(ja["config"]["seed"], 77);
}

#[test]
fn gen_then_run_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.grmx"), dir.path().join("b.grmx"));
    let g = |rows: &str, cols: &str, seed: &str, path: &Path| {
        cdmm(&["gen", "--rows", rows, "--cols", cols, "--seed", seed, "--out", path.to_str().unwrap(), "--e", "8"])
    };
    assert!(g("3", "5", "1", &a).status.success());
    assert!(g("5", "3", "2", &b).status.success());
    assert_eq!(fs::metadata(&a).unwrap().len(), 44 + 15 * 8);
    let o = cdmm(&[
        "run", "--scheme", "matdot", "--p", "2", "--e", "8", "--t", "3", "--r", "5", "--s", "3", "--w", "2",
        "--N", "4", "--verify", "--in-a", a.to_str().unwrap(), "--in-b", b.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(field(&text, "recovery_threshold").as_deref(), Some("3"));
    assert_eq!(field(&text, "scheme").as_deref(), Some("\"matdot\""));
}

#[test]
fn usage_errors_exit_2() {
    let base = ["run", "--p", "2", "--e", "8", "--t", "4", "--r", "4", "--s", "4", "--N", "8"];
    let with = |extra: &[&str]| {
        let mut v: Vec<&str> = base.to_vec();
        v.extend_from_slice(extra);
        cdmm(&v).status.code()
    };
    assert_eq!(with(&["--scheme", "nonsense"]), Some(2));
    assert_eq!(with(&["--scheme", "matdot", "--u", "2"]), Some(2));
    assert_eq!(with(&["--scheme", "plain", "--u", "3", "--v", "3"]), Some(2));
    assert_eq!(with(&["--scheme", "plain", "--straggler-prob", "1.0"]), Some(2));
    assert_eq!(cdmm(&["run", "--scheme", "plain"]).status.code(), Some(2));
    assert_eq!(cdmm(&["ring-info", "--p", "4", "--e", "1"]).status.code(), Some(2));
}

#[test]
fn too_many_stragglers_exit_1() {
    // N = 5, R = 4, failure probability 0.9: with this seed fewer than 4 survive
    let mut failed = false;
    for seed in 0..20 {
        let s = seed.to_string();
        let o = cdmm(&[
            "run", "--scheme", "plain", "--p", "2", "--e", "8", "--t", "4", "--r", "4", "--s", "4", "--u", "2",
            "--v", "2", "--N", "5", "--straggler-prob", "0.9", "--seed", &s, "--verify",
        ]);
        match o.status.code() {
            Some(0) => assert!(stdout(&o).contains("\"verified\": true")),
            Some(1) => {
                assert!(String::from_utf8_lossy(&o.stderr).contains("responses"));
                failed = true;
            }
            other => panic!("unexpected exit {other:?}"),
        }
    }
    assert!(failed);
}
