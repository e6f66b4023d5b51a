//! Loopy hybrid message passing on a generated network.

use std::time::Duration;

use cg_infer::harness::{experiment_evidence, generate_family, FamilySpec};
use cg_infer::{run_hmp_gmr, RunSettings};

fn main() {
    let net = generate_family(&FamilySpec::new(1, 5, 3).unwrap()).unwrap();
    let ev = experiment_evidence(&net, 5, 3).unwrap();
    let settings = RunSettings::new(Duration::from_secs(5), 50, 3);
    let r = run_hmp_gmr(&net, &ev, &settings).unwrap();
    println!("status {} after {} sweeps in {:.2?}", r.status, r.iterations, r.elapsed);
    for (id, b) in &r.beliefs {
        match b.moments() {
            Some((m, v)) => println!("{id}: mean {m:.4}, var {v:.4}"),
            None => println!("{id}: {:?}", b.as_discrete().unwrap()),
        }
    }
}
