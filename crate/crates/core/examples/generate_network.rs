//! Build a benchmark network and save it as JSON.
//!
//! `cargo run --example generate_network -- 2 5 out.json`

use cg_infer::harness::{count_cycles, generate_family, FamilySpec};
use cg_infer::network::save_network;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let family: u8 = args.first().map_or(Ok(2), |s| s.parse())?;
    let n: usize = args.get(1).map_or(Ok(5), |s| s.parse())?;
    let net = generate_family(&FamilySpec::new(family, n, 0)?)?;
    println!(
        "{}: {} nodes, {} edges, {} cycles, {} discrete configurations",
        net.name(),
        net.len(),
        net.edges().len(),
        count_cycles(&net),
        net.discrete_configuration_count()
    );
    if let Some(path) = args.get(2) {
        save_network(&net, path)?;
        println!("saved to {path}");
    }
    Ok(())
}
