//! Grid search for the component cap and iteration cap.

use std::time::Duration;

use cg_infer::harness::{generate_family, FamilySpec};
use cg_infer::tuner::{tune, EvidenceSampler, Reference, TuneSettings};

fn main() {
    let net = generate_family(&FamilySpec::new(1, 3, 0).unwrap()).unwrap();
    let settings = TuneSettings::new(Duration::from_secs(1), 8, 4, 6);
    let sampler = EvidenceSampler::new(0, 0.5);
    let r = tune(&net, &settings, &Reference::exact(), &sampler).unwrap();
    println!("best nc {}, best it {}", r.best_nc, r.best_it);
    r.write_csv(std::io::stdout()).unwrap();
}
