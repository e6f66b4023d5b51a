//! Exit-status shares and KL error over random evidence sets.

use cg_infer::harness::{run_convergence_study, ConvergenceConfig};

fn main() {
    let mut cfg = ConvergenceConfig::new(1, 4, 10);
    cfg.settings.max_iteration = 200;
    let report = run_convergence_study(&cfg).unwrap();
    for s in &report.summary {
        println!("{} {} {:.4}", s.scope, s.metric, s.value);
    }
}
