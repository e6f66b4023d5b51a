//! List the elementary cycles of a small loopy network's skeleton.

use cg_infer::harness::{elementary_cycles, generate_family, FamilySpec};

fn main() {
    let net = generate_family(&FamilySpec::new(1, 3, 0).unwrap()).unwrap();
    let cycles = elementary_cycles(&net);
    println!("{} cycles", cycles.len());
    for c in &cycles {
        let ids: Vec<&str> = c.iter().map(|&i| net.id(i)).collect();
        println!("  {}", ids.join(" - "));
    }
}
