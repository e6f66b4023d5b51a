mod common;

use cg_infer::harness::{generate_family, FamilySpec};
use cg_infer::network::{load_network, network_from_json, network_to_json, save_network, LoadError};
use cg_infer::{Evidence, Observation};
use common::*;

#[test]
fn json_round_trip_preserves_every_family() {
    for f in 1..=4 {
        let net = generate_family(&FamilySpec::new(f, 4, 11).unwrap()).unwrap();
        let back = network_from_json(&network_to_json(&net)).unwrap();
        assert_eq!(back, net, "family {f}");
    }
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hand.json");
    save_network(&hand_linear(), &path).unwrap();
    assert_eq!(load_network(&path).unwrap(), hand_linear());
}

#[test]
fn generator_is_a_function_of_its_inputs() {
    let spec = FamilySpec::new(2, 5, 42).unwrap();
    assert_eq!(generate_family(&spec).unwrap(), generate_family(&spec).unwrap());
    let other = FamilySpec::new(2, 5, 43).unwrap();
    assert_ne!(generate_family(&spec).unwrap(), generate_family(&other).unwrap());
}

#[test]
fn generated_networks_validate() {
    for f in 1..=4 {
        for n in 1..=6 {
            let net = generate_family(&FamilySpec::new(f, n, n as u64).unwrap()).unwrap();
            assert!(net.validate().is_empty(), "family {f} n {n}: {:?}", net.validate());
        }
    }
}

#[test]
fn malformed_network_is_rejected() {
    assert!(network_from_json("{").is_err());
    assert!(matches!(network_from_json("{"), Err(LoadError::Parse(_))));
    let mut v: serde_json::Value = serde_json::from_str(&network_to_json(&hand_linear())).unwrap();
    v["edges"].as_array_mut().unwrap().push(serde_json::json!(["Z", "U"]));
    assert!(network_from_json(&v.to_string()).is_err());
}

#[test]
fn evidence_json_shape() {
    let ev = Evidence::new().with("A", Observation::State(1)).with("X", Observation::Value(0.25));
    let back = Evidence::from_json(&ev.to_json()).unwrap();
    assert_eq!(back, ev);
    let bound = Evidence::from_json(r#"{"X": 2}"#).unwrap().bind(&two_node()).unwrap();
    assert_eq!(bound.value(1), Some(2.0));
    assert!(Evidence::from_json(r#"{"A": 5}"#).unwrap().bind(&two_node()).is_err());
}
