//! End-to-end runs of the `cg-infer` binary.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use cg_infer::network::save_network;
use cg_infer::Belief;
use common::*;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cg-infer")).args(args).output().expect("binary runs")
}

fn write_two_node(dir: &Path) -> (String, String) {
    let net = dir.join("net.json");
    let ev = dir.join("ev.json");
    save_network(&two_node(), &net).unwrap();
    std::fs::write(&ev, r#"{"X": 1.0}"#).unwrap();
    (net.to_str().unwrap().to_owned(), ev.to_str().unwrap().to_owned())
}

#[test]
fn exact_infer_matches_hand_posterior() {
    let dir = tempfile::tempdir().unwrap();
    let (net, ev) = write_two_node(dir.path());
    let o = run(&["infer", "--net", &net, "--evidence", &ev, "--algo", "exact"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let a: Belief = serde_json::from_value(v["beliefs"]["A"].clone()).unwrap();
    let p = a.as_discrete().unwrap();
    assert!((p[1] - TWO_NODE_P_A1).abs() < 1e-12);
    assert!((p[0] - (1.0 - TWO_NODE_P_A1)).abs() < 1e-12);
}

#[test]
fn hmp_infer_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    let (net, ev) = write_two_node(dir.path());
    let exact = dir.path().join("exact.json");
    let hmp = dir.path().join("hmp.json");
    let e = exact.to_str().unwrap();
    let h = hmp.to_str().unwrap();
    assert_eq!(run(&["--out", e, "infer", "--net", &net, "--evidence", &ev, "--algo", "exact"]).status.code(), Some(0));
    let o = run(&["--out", h, "infer", "--net", &net, "--evidence", &ev]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&hmp).unwrap()).unwrap();
    assert_eq!(v["status"], "converged");
    let o = run(&["compare", "--ref", e, "--approx", h, "--evidence", &ev]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["total"].as_f64().unwrap() < 1e-9, "{v}");
}

#[test]
fn iteration_cap_is_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("f2.json");
    let n = net.to_str().unwrap();
    assert_eq!(run(&["--out", n, "generate", "--family", "2", "--n", "3"]).status.code(), Some(0));
    let o = run(&["infer", "--net", n, "--max-iter", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["status"], "max_iterations");
    assert_eq!(v["iterations"], 1);
}

#[test]
fn cycles_of_generated_network() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("f2.json");
    let n = net.to_str().unwrap();
    assert_eq!(run(&["--out", n, "generate", "--family", "2", "--n", "7"]).status.code(), Some(0));
    let o = run(&["cycles", "--net", n]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "501");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (net, _) = write_two_node(dir.path());
    assert_eq!(run(&["infer", "--net", &net, "--max-nc", "0"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["infer", "--net", "/nonexistent/net.json"]).status.code(), Some(3));

    let bad = dir.path().join("bad-ev.json");
    std::fs::write(&bad, r#"{"Nope": 1.0}"#).unwrap();
    assert_eq!(run(&["infer", "--net", &net, "--evidence", bad.to_str().unwrap()]).status.code(), Some(4));

    let big = dir.path().join("f3.json");
    let b = big.to_str().unwrap();
    assert_eq!(run(&["--out", b, "generate", "--family", "3", "--n", "11"]).status.code(), Some(0));
    assert_eq!(run(&["infer", "--net", b, "--algo", "exact"]).status.code(), Some(5));
}

#[test]
fn generate_is_deterministic_in_seed() {
    let a = run(&["--seed", "9", "generate", "--family", "4", "--n", "3"]);
    let b = run(&["--seed", "9", "generate", "--family", "4", "--n", "3"]);
    let c = run(&["--seed", "10", "generate", "--family", "4", "--n", "3"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}
