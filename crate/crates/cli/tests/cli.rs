use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nuthermo")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn enumerate_counts() {
    assert_eq!(json(&["enumerate", "ACGT", "--model", "bpm"])["count"], "4");
    assert_eq!(json(&["enumerate", "AAAA"])["count"], "1");
    assert_eq!(json(&["enumerate", "GGCC"])["count"], "6");
    assert_eq!(json(&["enumerate", "GGCC", "--pseudoknots"])["count"], "7");
    assert_eq!(json(&["enumerate", "GGCC", "--model", "bps", "--no-pseudoknots"])["count"], "6");
    let dump = json(&["enumerate", "ACGT", "--dump"]);
    assert_eq!(dump["structures"].as_array().unwrap().len(), 4);
}

#[test]
fn solve_examples() {
    let v = json(&["solve", "ACGT", "--model", "bpm", "--base", "2"]);
    assert_eq!(v["mfe"], "-2");
    assert_eq!(v["pf"], "9/1");
    let v = json(&["solve", "AAAA"]);
    assert_eq!(v["mfe"], "0");
    assert_eq!(v["pf"], "1/1");
    let v = json(&["solve", "GGCC", "--model", "bps", "--base", "3"]);
    assert_eq!(v["pf"], "9/1");
    let v = json(&["solve", "ACGT", "-k", "-1", "--threshold", "10"]);
    assert_eq!(v["ssel"], "2");
    assert_eq!(v["dmfe"], true);
    assert_eq!(v["dpf"], false);
    let v = json(&["solve", "ACGT", "--base", "1/2", "--decimal", "4"]);
    assert_eq!(v["pf"], "9/4");
    assert_eq!(v["pf_decimal"], "2.2500");
}

#[test]
fn reduce_examples() {
    assert_eq!(json(&["reduce", "ssel-via-pf", "ACGT", "--base", "2", "-k", "-1"])["answer"], "2");
    assert_eq!(json(&["reduce", "dmfe-via-dpf", "ACGT", "-k", "-1"])["answer"], "true");
    assert_eq!(json(&["reduce", "pf-via-dpf", "AAAA"])["answer"], "1/1");
    for name in ["mfe-via-dmfe", "mfe-via-ssel", "pf-via-ssel", "dos-via-pf", "dos-via-dpf", "pf-via-dpf"] {
        let v = json(&["reduce", name, "GGCC+CC", "--model", "bps", "--base", "3"]);
        assert_eq!(v["agrees"], true, "{name}");
        let t = &v["transcript"];
        assert!(t["call_count"].as_u64().unwrap() <= t["budget"].as_u64().unwrap(), "{name}");
    }
    assert_eq!(json(&["reduce", "dpf-via-pf", "ACGT", "--threshold", "9"])["answer"], "true");
    assert_eq!(json(&["reduce", "dmfe-via-mfe", "ACGT", "-k", "-3"])["answer"], "false");
}

#[test]
fn transcript_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    json(&["reduce", "mfe-via-dmfe", "ACGTACGT", "--transcript", path.to_str().unwrap()]);
    let t: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(t["reduction"], "mfe-via-dmfe");
    assert_eq!(t["answer"], "-4");
}

#[test]
fn levels_examples() {
    let v = json(&["levels", "--model", "bpm", "-n", "7"]);
    assert_eq!(v["levels"], serde_json::json!(["-3", "-2", "-1", "0"]));
    let dir = tempfile::tempdir().unwrap();
    let strands = write(dir.path(), "strands.txt", "# two strands\nGGGAAACCC\n\nGGGA\n");
    let dp = json(&["levels", "--model", "nn", "--dp", &strands, "toy-coarse"]);
    let sym = json(&["levels", "--model", "nn", "--dp", "--symmetry", &strands, "toy-coarse"]);
    let grid = json(&["levels", "--model", "nn", &strands, "toy-coarse"]);
    let set = |v: &Value| v["levels"].as_array().unwrap().iter().map(|x| x.as_str().unwrap().to_string()).collect::<Vec<_>>();
    assert!(!set(&dp).is_empty());
    for g in set(&dp) {
        assert!(set(&sym).contains(&g));
        assert!(set(&grid).contains(&g));
    }
}

#[test]
fn hardgen_examples() {
    let dir = tempfile::tempdir().unwrap();
    let w = write(dir.path(), "w.json", r#"{"weights":[2,2,2,2],"B":8}"#);
    let strand_path = dir.path().join("s.txt");
    let v = json(&["hardgen", "bps-from-4part", &w, "--strand-out", strand_path.to_str().unwrap()]);
    assert_eq!(v["strand"], "CCACCACCACCAAAGGGGGGGG");
    assert_eq!(v["K"], 4);
    assert_eq!(fs::read_to_string(&strand_path).unwrap().trim(), "CCACCACCACCAAAGGGGGGGG");
    let v = json(&["hardgen", "verify-bps", &w]);
    assert_eq!(v["status"], "pass");
    assert_eq!(v["summary"], "bps-from-4part: 24 = 1 * 24 [pass]");
    let t = write(dir.path(), "t.json", r#"{"X":[1],"Y":[1],"Z":[1],"T":[[1,1,1]]}"#);
    let v = json(&["hardgen", "4part-from-3dm", &t]);
    assert_eq!(v["alpha"], "1");
    assert_eq!(v["instance"]["weights"].as_array().unwrap().len(), 4);
    assert_eq!(json(&["hardgen", "verify-4part", &t])["status"], "pass");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["solve", "ACGX"]).status.code(), Some(4));
    assert_eq!(run(&["enumerate", "GGCC", "--model", "nn", "--pseudoknots"]).status.code(), Some(4));
    assert_eq!(run(&["enumerate", "GGGGGGCCCCCC", "--budget", "5"]).status.code(), Some(3));
    assert_eq!(run(&["solve", "ACGT", "--base", "1"]).status.code(), Some(4));
    assert_eq!(run(&["reduce", "ssel-via-pf", "ACGT"]).status.code(), Some(4));
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"weights":[2,2,2,3],"B":9}"#);
    assert_eq!(run(&["hardgen", "verify-bps", &bad]).status.code(), Some(4));
    let big = write(dir.path(), "big.json", r#"{"weights":[5,5,5,5,5,5,5,5],"B":20}"#);
    assert_eq!(run(&["hardgen", "verify-bps", &big, "--state-budget", "10"]).status.code(), Some(3));
    assert_eq!(run(&["solve", "/nonexistent/strands.txt"]).status.code(), Some(4));
}

#[test]
fn output_flag() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let out = run(&["solve", "ACGT", "-o", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["pf"], "9/1");
}

/// Every golden case, run twice.
#[test]
fn byte_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let w = write(dir.path(), "w.json", r#"{"weights":[5,5,5,5],"B":20}"#);
    let t = write(dir.path(), "t.json", r#"{"X":[1,2],"Y":[1,2],"Z":[1,2],"T":[[1,1,1],[2,2,2],[1,2,1],[2,1,2]]}"#);
    let strands = write(dir.path(), "s.txt", "GGGAAACCC\nGGGA\n");
    let cases: Vec<Vec<&str>> = vec![
        vec!["enumerate", "ACGT", "--dump"],
        vec!["enumerate", "GGCC", "--pseudoknots", "--dump"],
        vec!["solve", "GGCCAGGCC", "--model", "bps", "--base", "3", "-k", "-1"],
        vec!["solve", "GGGAAACCC+GGGA", "--model", "nn", "--params", "toy-fine", "--threads", "3"],
        vec!["reduce", "dos-via-pf", "ACGTACGT", "--base", "1/2"],
        vec!["reduce", "pf-via-dpf", "GGCC+CC", "--model", "bps"],
        vec!["levels", "--model", "nn", "--dp", "--symmetry", &strands, "toy-fine"],
        vec!["hardgen", "verify-bps", &w],
        vec!["hardgen", "verify-4part", &t],
        vec!["hardgen", "4part-from-3dm", &t],
    ];
    for case in cases {
        let a = run(&case);
        let b = run(&case);
        assert!(a.status.success(), "{case:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{case:?}");
    }
}
