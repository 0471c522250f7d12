use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diskflow")).args(args).output().expect("spawn diskflow")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_into(dir: &Path, args: &[&str]) -> Output {
    let mut all = vec!["run"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", dir.to_str().unwrap()]);
    bin(&all)
}

#[test]
fn unknown_scenario_is_a_usage_error() {
    let o = bin(&["run", "thm-main4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown scenario"), "{}", stderr(&o));
}

#[test]
fn defaults_round_trip_through_a_config_file() {
    let o = bin(&["config", "--defaults", "fracpow-audit"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let doc: toml::Table = text.parse().unwrap();
    for key in ["grid", "body", "run", "data", "audit"] {
        assert!(doc.contains_key(key), "missing [{key}]");
    }
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, &text).unwrap();
    let out = tmp.path().join("run");
    let o = run_into(&out, &["fracpow-audit", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(out.join("config.toml")).unwrap(), text);

    // every scenario's defaults parse
    let o = bin(&["config", "--defaults"]);
    assert!(o.status.success());
    let all = String::from_utf8(o.stdout).unwrap();
    assert_eq!(all.matches("# ---- ").count(), 11);
}

#[test]
fn config_errors_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_into(tmp.path(), &["bessel-audit", "--set", "grid.radial_pts=3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("grid.radial_pts"), "{}", stderr(&o));
    let o = run_into(tmp.path(), &["fracpow-audit", "--set", "audit.mus=[0.5, 1.5]"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("audit.mus"), "{}", stderr(&o));
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "[run]\ndt = \"fast\"\n").unwrap();
    let o = run_into(tmp.path(), &["bessel-audit", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("run.dt"), "{}", stderr(&o));
}

#[test]
fn manifest_hashes_every_output() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_into(tmp.path(), &["bessel-audit", "--seed", "7", "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 7);
    assert_eq!(m["verdict"], "PASS");
    let listed: Vec<String> = m["files"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap().to_string()).collect();
    let mut on_disk: Vec<String> = fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    on_disk.sort();
    let mut sorted = listed.clone();
    sorted.sort();
    assert_eq!(sorted, on_disk);
    for f in m["files"].as_array().unwrap() {
        let bytes = fs::read(tmp.path().join(f["name"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    }
    let cfg = fs::read(tmp.path().join("config.toml")).unwrap();
    assert_eq!(m["config_sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&cfg)));
}

#[test]
fn reruns_are_bitwise_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert_eq!(run_into(&a, &["resolvent-audit", "--jobs", "1"]).status.code(), Some(0));
    assert_eq!(run_into(&b, &["resolvent-audit", "--jobs", "3"]).status.code(), Some(0));
    assert_eq!(run_into(&c, &["resolvent-audit", "--seed", "99"]).status.code(), Some(0));
    for table in ["resolvent_refinement.csv", "corrected_resolvent.csv"] {
        let x = fs::read(a.join(table)).unwrap();
        assert_eq!(x, fs::read(b.join(table)).unwrap(), "{table}");
        assert_ne!(x, fs::read(c.join(table)).unwrap(), "{table} ignores the seed");
    }
}

#[test]
fn gate_failure_exits_with_two() {
    // a fit window beyond R²/16 is flagged and cannot pass
    let tmp = tempfile::tempdir().unwrap();
    let o = run_into(tmp.path(), &["semigroup-decay", "--horizon", "400"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let summary = fs::read_to_string(tmp.path().join("summary.txt")).unwrap();
    assert!(summary.contains("FAIL"));
}

#[test]
fn theorem_flags_set_targets() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_into(
        tmp.path(),
        &["thm-main3", "--q", "1.333", "--p", "4", "--set", "grid.outer_radius=20", "--set", "grid.radial_points=64", "--horizon", "25", "--dt", "0.1"],
    );
    assert!(matches!(o.status.code(), Some(0) | Some(2)), "{}", stderr(&o));
    let v = fs::read_to_string(tmp.path().join("verdict.csv")).unwrap();
    let target = |q: &str| -> f64 {
        let line = v.lines().find(|l| l.starts_with(q)).unwrap();
        line.split(',').nth(2).unwrap().parse().unwrap()
    };
    assert!((target("v_L4") + (1.0 / 1.333 - 0.25)).abs() < 1e-12);
    assert!((target("ell") + 1.0 / 1.333).abs() < 1e-12);

    // checkpoints at elapsed 0, 1, 2, 4, 8, 16 and the end
    let mut snaps: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().path()).filter(|p| p.extension().is_some_and(|x| x == "snap")).collect();
    snaps.sort();
    assert_eq!(snaps.len(), 7);
    let last = diskflow::fsop::snapshot::read_snapshot(fs::File::open(snaps.last().unwrap()).unwrap()).unwrap();
    assert!((last.state.time - 25.0).abs() < 1e-9);
    assert_eq!(last.grid.radial_points, 64);
}

#[test]
fn shorthand_subcommands_set_their_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin(&["fracpow", "--mu", "0.5", "--eps", "0,0.1", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let cfg: toml::Table = fs::read_to_string(tmp.path().join("config.toml")).unwrap().parse().unwrap();
    assert_eq!(cfg["audit"]["mus"], toml::Value::Array(vec![0.5.into()]));
    assert_eq!(cfg["audit"]["lambdas"], toml::Value::Array(vec![0.0.into(), 0.1.into()]));
    let m: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["scenario"], "fracpow-audit");

    let o = bin(&["assemble", "--grid", "10,16,1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("Constrained"));
    assert_eq!(bin(&["assemble", "--grid", "10,16"]).status.code(), Some(1));
    assert_eq!(bin(&["resolvent-check"]).status.code(), Some(1));
}
