use std::path::Path;
use std::process::{Command, Output};

fn stgst(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stgst"))
        .args(args)
        .current_dir(dir)
        .env("STGST_THREADS", "2")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, body: &str) {
    std::fs::write(dir.join("cfg.json"), body).unwrap();
}

const TIGHT: &str =
    r#"{"mode": "separable", "Js": 2, "Jt": 2, "L": 3, "spatial_family": "itersine", "temporal_family": "itersine"}"#;

#[test]
fn synth_transform_classify_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_config(d, TIGHT);
    stdout(&stgst(
        &["synth", "--samples", "40", "--n", "8", "--t", "24", "--out-dir", "data"],
        d,
    ));
    assert!(d.join("data/manifest.json").exists());
    for out in ["a.csv", "b.csv"] {
        stdout(&stgst(
            &[
                "transform",
                "--config",
                "cfg.json",
                "--manifest",
                "data/manifest.json",
                "--out",
                out,
            ],
            d,
        ));
    }
    let a = std::fs::read(d.join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.csv")).unwrap());
    let header = String::from_utf8(a).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header.split(',').count(), 2 + 24 * 21);

    let run = || stdout(&stgst(&["classify", "--features", "a.csv", "--k", "3"], d));
    let first = run();
    assert_eq!(first, run());
    let doc: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert!(doc["accuracy"].as_f64().unwrap() >= 0.5);
}

#[test]
fn dims_matches_tree_size() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        r#"{"mode": "separable", "Js": 2, "Jt": 2, "L": 3, "pooling": "full_avg"}"#,
    );
    let out = stdout(&stgst(
        &[
            "dims",
            "--config",
            "cfg.json",
            "--n",
            "20",
            "--t",
            "64",
            "--channels",
            "3",
        ],
        dir.path(),
    ));
    assert_eq!(out.trim(), "63");
}

#[test]
fn verify_reports_pass_and_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), TIGHT);
    for check in [
        "frame",
        "theorem1",
        "theorem2",
        "permutation",
        "spectral-equivalence",
        "wavelet-stability",
    ] {
        let o = stgst(
            &["verify", check, "--config", "cfg.json", "--trials", "5", "--t", "12"],
            dir.path(),
        );
        let reports: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        let reports = reports.as_array().unwrap();
        assert!(!reports.is_empty());
        for r in reports {
            assert_eq!(r["pass"], true, "{check}: {r}");
            for key in ["check", "lhs", "rhs", "margin", "seed", "trials"] {
                assert!(r.get(key).is_some(), "{check} lacks {key}");
            }
        }
    }
}

#[test]
fn verify_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), r#"{"mode": "joint", "product": "strong", "J": 2, "L": 2}"#);
    let o = stgst(&["verify", "theorem1", "--config", "cfg.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = stgst(&["verify", "theorem1", "--config", "missing.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_lists_both_modes() {
    let dir = tempfile::tempdir().unwrap();
    let o = stgst(&["bench", "--sizes", "5x8,6x10", "--repeats", "1"], dir.path());
    let csv = stdout(&o);
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "N,T,mode,wall_time_seconds,flops_estimate");
    assert_eq!(lines.len(), 5);
    assert!(lines.iter().filter(|l| l.contains("joint-strong")).count() == 2);
    assert!(!stgst(&["bench", "--sizes", "5by8"], dir.path()).status.success());
}

#[test]
fn graph_build_writes_shift() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("g.json"),
        r#"{"n": 3, "edges": [[0, 1, 1.0], [1, 2, 1.0]]}"#,
    )
    .unwrap();
    stdout(&stgst(
        &[
            "graph",
            "build",
            "--edges",
            "g.json",
            "--shift",
            "lazy_random_walk",
            "--out",
            "s.json",
        ],
        dir.path(),
    ));
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(doc["n"], 3);
    assert_eq!(doc["symmetric"], false);
    assert_eq!(doc["matrix"][0][0], 0.5);
    assert_eq!(doc["matrix"][0][1], 0.25);
    assert_eq!(doc["matrix"][1][0], 0.5);
}

#[test]
fn plot_data_epsilon_starts_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), TIGHT);
    let csv = stdout(&stgst(
        &[
            "plot-data",
            "epsilon",
            "--config",
            "cfg.json",
            "--t",
            "8",
            "--epsilons",
            "0,0.05",
        ],
        dir.path(),
    ));
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "x,lhs,rhs");
    assert!(lines[1].starts_with("0,0,"));
}
