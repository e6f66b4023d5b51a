//! Greedy Gaussian mixture reduction keeps weight, mean and variance.

use cg_infer::mixture::{merge_cost, product, reduce, GaussianComponent, GaussianMixture};

fn main() {
    let g: GaussianMixture = [(0.2, -3.0, 0.5), (0.3, -2.6, 0.4), (0.1, 0.0, 1.0), (0.4, 4.0, 0.3)]
        .iter()
        .map(|&(w, m, v)| GaussianComponent::new(w, m, v))
        .collect();
    println!("cost of merging the first pair: {:.4}", merge_cost(&g.components()[0], &g.components()[1]).unwrap());
    for nc in [4, 2, 1] {
        let r = reduce(&g, nc).unwrap();
        let (m, v) = r.moments().unwrap();
        println!("nc {nc}: {} components, mean {m:.4}, var {v:.4}", r.len());
    }
    let p = product(&g, &GaussianMixture::single(1.0, 0.0, 4.0)).unwrap();
    println!("product mass {:.4}", p.total_weight());
}
