// Sorts before `acceptance`, whose failing lines stop `cargo test` early.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use bnlab_harness::run_quiet;
use tempfile::TempDir;

/// Small but complete configurations, one per subcommand.
const RUNS: &[(&str, &[&str])] = &[
    ("propagate", &["--set", "preset=fig5-with-rc", "--set", "depth=4", "--set", "width=32", "--set", "n=12"]),
    ("gamma", &["--set", "batch=gaussian", "--set", "n=4", "--set", "k=3", "--set", "samples=20000"]),
    ("gamma", &["--set", "n=7"]),
    ("rank-probe", &["--set", "trials=200", "--set", "with_bn=true"]),
    ("tree", &["--set", "depth=10", "--set", "arithmetic=rational", "--set", "mode=pruned"]),
    ("invariant", &["--set", "trials=500"]),
];

fn run(cmd: &str, extra: &[&str], out: &Path) -> u8 {
    let mut args = vec!["bnlab", cmd];
    args.extend_from_slice(extra);
    let out = out.to_str().unwrap().to_string();
    args.push("--out");
    args.push(&out);
    run_quiet(args)
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn schema_for(file: &str) -> Option<serde_json::Value> {
    let name = file.strip_suffix(".json")?;
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    Some(serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap())
}

#[test]
fn every_json_output_matches_its_schema() {
    let tmp = TempDir::new().unwrap();
    for (i, (cmd, extra)) in RUNS.iter().enumerate() {
        let dir = tmp.path().join(format!("{i}"));
        assert_eq!(run(cmd, extra, &dir), 0, "{cmd}");
        for (name, bytes) in files(&dir) {
            if !name.ends_with(".json") {
                continue;
            }
            let schema = schema_for(&name).unwrap_or_else(|| panic!("no schema for {name}"));
            let instance: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
            let validator = jsonschema::validator_for(&schema).unwrap();
            let errors: Vec<String> = validator.iter_errors(&instance).map(|e| e.to_string()).collect();
            assert!(errors.is_empty(), "{cmd} {name}: {errors:?}");
        }
    }
}

#[test]
fn every_csv_has_a_header() {
    let tmp = TempDir::new().unwrap();
    for (i, (cmd, extra)) in RUNS.iter().enumerate() {
        let dir = tmp.path().join(format!("{i}"));
        assert_eq!(run(cmd, extra, &dir), 0);
        for (name, bytes) in files(&dir) {
            if name.ends_with(".csv") {
                let mut r = csv::Reader::from_reader(bytes.as_slice());
                let header = r.headers().unwrap().clone();
                assert!(header.iter().all(|h| h.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')), "{name}");
                for row in r.records() {
                    assert_eq!(row.unwrap().len(), header.len(), "{name}");
                }
            }
        }
    }
}

#[test]
fn replay_reproduces_every_file() {
    let tmp = TempDir::new().unwrap();
    for (i, (cmd, extra)) in RUNS.iter().enumerate() {
        let first = tmp.path().join(format!("a{i}"));
        let second = tmp.path().join(format!("b{i}"));
        assert_eq!(run(cmd, extra, &first), 0);
        let manifest = first.join("manifest.json");
        assert_eq!(run_quiet(["bnlab", "replay", manifest.to_str().unwrap(), "--out", second.to_str().unwrap()]), 0);
        assert_eq!(files(&first), files(&second), "{cmd}");
    }
}

#[test]
fn thread_count_does_not_change_outputs() {
    let tmp = TempDir::new().unwrap();
    for (i, (cmd, extra)) in RUNS.iter().enumerate() {
        let mut outs = Vec::new();
        for threads in ["1", "3"] {
            let dir = tmp.path().join(format!("{i}-{threads}"));
            let mut args = extra.to_vec();
            args.extend(["--threads", threads]);
            assert_eq!(run(cmd, &args, &dir), 0);
            outs.push(files(&dir));
        }
        assert_eq!(outs[0], outs[1], "{cmd}");
    }
}

#[test]
fn config_file_and_set_overrides() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# circle probe\nn = 6\nsamples = 50 # unused by exact2d\nseed = 11\nformat = json\n").unwrap();
    let out = tmp.path().join("o");
    assert_eq!(run("gamma", &["--config", cfg.to_str().unwrap(), "--set", "n=8"], &out), 0);
    let m: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["params"]["n"], "8");
    assert_eq!(m["params"]["samples"], "50");
    assert_eq!(m["seed"], 11);
    assert_eq!(m["formats"], serde_json::json!(["json"]));
    assert!(!out.join("gamma.csv").exists());
    let g: serde_json::Value = serde_json::from_slice(&fs::read(out.join("gamma.json")).unwrap()).unwrap();
    assert_eq!(g["n"], 8);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let p = |s: &str| tmp.path().join(s);
    assert_eq!(run("gamma", &["--set", "bogus=1"], &p("a")), 2);
    assert_eq!(run("gamma", &["--set", "n=x"], &p("b")), 2);
    assert_eq!(run("invariant", &["--set", "trials=0"], &p("c")), 2);
    assert_eq!(run("gamma", &["--set", "k=3", "--set", "method=exact2d"], &p("d")), 3);
    assert_eq!(run("tree", &["--set", "mode=full", "--set", "depth=30"], &p("e")), 4);
    // Zero standard errors of slack cannot hold for a Monte Carlo mean.
    assert_eq!(run("invariant", &["--set", "trials=50", "--set", "sigmas=0", "--strict"], &p("f")), 5);
    assert_eq!(run("invariant", &["--set", "trials=50", "--set", "sigmas=0"], &p("g")), 0);
    assert_eq!(run("gamma", &["--config", "/nonexistent/cfg"], &p("h")), 1);
    assert_eq!(run_quiet(["bnlab", "replay", "/nonexistent/manifest.json"]), 1);
    assert_eq!(run_quiet(["bnlab", "frobnicate"]), 2);
}

#[test]
fn unwritable_output_is_io_error() {
    let tmp = TempDir::new().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    assert_eq!(run("gamma", &[], &blocker.join("sub")), 1);
}

#[test]
fn propagate_examples() {
    let tmp = TempDir::new().unwrap();
    let zero = tmp.path().join("zero");
    assert_eq!(run("propagate", &["--set", "depth=0", "--set", "width=8"], &zero), 0);
    let m: serde_json::Value = serde_json::from_slice(&fs::read(zero.join("trajectory_metrics.json")).unwrap()).unwrap();
    assert_eq!(m["layers"].as_array().unwrap().len(), 1);

    let fig3 = tmp.path().join("fig3");
    assert_eq!(run("propagate", &["--set", "preset=fig3", "--set", "depth=6", "--set", "width=64"], &fig3), 0);
    let mut r = csv::Reader::from_path(fig3.join("projection_2d.csv")).unwrap();
    let escaped = r.records().filter(|row| &row.as_ref().unwrap()[3] == "true").count();
    assert_eq!(escaped, 1);
}

#[test]
fn rank_probe_examples() {
    let tmp = TempDir::new().unwrap();
    let one = tmp.path().join("one");
    assert_eq!(run("rank-probe", &["--set", "trials=1"], &one), 0);
    let rows = csv::Reader::from_path(one.join("rank_probe.csv")).unwrap().records().count();
    assert_eq!(rows, 1);

    let bn = tmp.path().join("bn");
    assert_eq!(run("rank-probe", &["--set", "trials=300", "--set", "with_bn=true"], &bn), 0);
    let s: serde_json::Value = serde_json::from_slice(&fs::read(bn.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["with_bn"], true);
    assert_eq!(s["gamma_batch"], "recentred");
    let mean = s["mean_y"].as_f64().unwrap();
    let bound = s["n_over_gamma"].as_f64().unwrap() + 3.0 * s["std_err"].as_f64().unwrap();
    assert!(mean <= bound, "{mean} > {bound}");
}

#[test]
fn tree_examples() {
    let tmp = TempDir::new().unwrap();
    for (arith, dir) in [("float", "f"), ("rational", "r")] {
        let out = tmp.path().join(dir);
        assert_eq!(run("tree", &["--set", &format!("arithmetic={arith}"), "--set", "depth=12"], &out), 0);
        let r: serde_json::Value = serde_json::from_slice(&fs::read(out.join("theorem_report.json")).unwrap()).unwrap();
        let inner = r["item1"]["max_abs_inner"].as_f64().unwrap();
        if arith == "rational" {
            assert_eq!(inner, 0.0);
            assert_eq!(r["item1"]["exact"], true);
        } else {
            assert!(inner <= 1e-12);
        }
        let e = r["selected_extreme_column"].as_u64().unwrap();
        assert!(e == 1 || e == 10);
    }
    let small = tmp.path().join("small");
    assert_eq!(run("tree", &["--set", "x0=1,2,3", "--set", "depth=6"], &small), 0);
    let r: serde_json::Value = serde_json::from_slice(&fs::read(small.join("theorem_report.json")).unwrap()).unwrap();
    assert_eq!(r["item3_norm_ratio"]["vacuous"], true);
    assert_eq!(r["item4_escape_angle"]["vacuous"], true);
    assert!(!r["notes"].as_array().unwrap().is_empty());
}

#[test]
fn invariant_defaults_pass() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("inv");
    assert_eq!(run("invariant", &["--strict"], &out), 0);
    let r: serde_json::Value = serde_json::from_slice(&fs::read(out.join("invariant_report.json")).unwrap()).unwrap();
    assert_eq!(r["orthogonality_violations"], 0);
    assert_eq!(r["contraction"]["pass"], true);
}
