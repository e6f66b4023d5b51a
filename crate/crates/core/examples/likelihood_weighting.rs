//! Likelihood weighting with a sample budget and with a time budget.

use std::time::Duration;

use cg_infer::harness::{experiment_evidence, generate_family, FamilySpec};
use cg_infer::reference::{likelihood_weighting, SampleBudget};

fn main() {
    let net = generate_family(&FamilySpec::new(2, 4, 0).unwrap()).unwrap();
    let ev = experiment_evidence(&net, 4, 0).unwrap();
    for budget in [SampleBudget::Samples(50_000), SampleBudget::Time(Duration::from_millis(200))] {
        let out = likelihood_weighting(&net, &ev, budget, 7).unwrap();
        println!("{budget:?}: {} samples in {:.2?}, degenerate {}", out.samples, out.elapsed, out.degenerate);
        println!("  A = {:?}", out.beliefs["A"].as_discrete().unwrap());
    }
}
