//! Exact marginals by enumerating discrete configurations.

use cg_infer::network::{ClgParams, Node};
use cg_infer::reference::exact_posteriors;
use cg_infer::{Evidence, HybridNetwork, Observation};

fn main() {
    let net = HybridNetwork::new(
        "a-x",
        vec![
            Node::discrete("A", 2, vec![vec![0.5, 0.5]]),
            Node::continuous("X", vec![ClgParams::new(-1.0, vec![], 1.0), ClgParams::new(1.0, vec![], 1.0)]),
            Node::continuous("Y", vec![ClgParams::new(0.0, vec![2.0], 0.5)]),
        ],
        vec![("A".into(), "X".into()), ("X".into(), "Y".into())],
    );
    let ev = Evidence::new().with("Y", Observation::Value(1.5));
    for (id, b) in exact_posteriors(&net, &ev).unwrap() {
        println!("{id}: {}", serde_json::to_string(&b).unwrap());
    }
}
