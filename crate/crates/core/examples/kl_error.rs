//! Score approximate beliefs against the exact ones with summed KL divergence.

use std::time::Duration;

use cg_infer::harness::{experiment_evidence, generate_family, FamilySpec};
use cg_infer::metrics::error_report;
use cg_infer::reference::exact_posteriors;
use cg_infer::{run_hmp_gmr, RunSettings};

fn main() {
    let net = generate_family(&FamilySpec::new(4, 3, 1).unwrap()).unwrap();
    let ev = experiment_evidence(&net, 3, 1).unwrap();
    let truth = exact_posteriors(&net, &ev).unwrap();
    for nc in [1, 2, 4, 8] {
        let r = run_hmp_gmr(&net, &ev, &RunSettings::new(Duration::from_secs(5), 30, nc)).unwrap();
        let rep = error_report(&truth, &r.beliefs, &ev).unwrap();
        println!("nc {nc}: total KL {:.5} ({})", rep.total, r.status);
    }
}
