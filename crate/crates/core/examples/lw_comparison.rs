//! HMP-GMR against likelihood weighting given the same CPU time.

use std::time::Duration;

use cg_infer::harness::{run_lw_comparison, LwComparisonConfig};

fn main() {
    let cfg = LwComparisonConfig::new(vec![1], 5, 8, Duration::from_millis(200));
    let report = run_lw_comparison(&cfg).unwrap();
    for s in &report.summary {
        println!("{} {} {:.4}", s.scope, s.metric, s.value);
    }
}
