//! Inference time against network size for HMP-GMR and the exact oracle.

use std::time::Duration;

use cg_infer::harness::{run_scalability, ScalabilityConfig};

fn main() {
    let mut cfg = ScalabilityConfig::new(vec![3, 4], (2..=6).collect(), Duration::from_secs(10));
    cfg.repeats = 3;
    let report = run_scalability(&cfg).unwrap();
    report.write_rows_csv(std::io::stdout()).unwrap();
    report.write_summary_csv(std::io::stdout()).unwrap();
}
