//! Fixtures and test-side oracles shared by the integration tests.
#![allow(dead_code)]

use cg_infer::network::{config_index, ClgParams, Node};
use cg_infer::HybridNetwork;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn edge(p: &str, c: &str) -> (String, String) {
    (p.to_owned(), c.to_owned())
}

/// A ∈ {0,1} uniform; X | a₀ ~ N(−1, 1), X | a₁ ~ N(1, 1).
/// With X = 1, P(A=1) = e²/(1+e²) by hand.
pub fn two_node() -> HybridNetwork {
    HybridNetwork::new(
        "a-x",
        vec![
            Node::discrete("A", 2, vec![vec![0.5, 0.5]]),
            Node::continuous("X", vec![ClgParams::new(-1.0, vec![], 1.0), ClgParams::new(1.0, vec![], 1.0)]),
        ],
        vec![edge("A", "X")],
    )
}

pub const TWO_NODE_P_A1: f64 = 0.880_797_077_977_882_4;

/// σ = 10⁻³ around 0: evidence X = 1000 has density far below f64 range.
pub fn narrow() -> HybridNetwork {
    HybridNetwork::new(
        "narrow",
        vec![
            Node::discrete("A", 2, vec![vec![0.5, 0.5]]),
            Node::continuous("X", vec![ClgParams::new(0.0, vec![], 1e-3); 2]),
        ],
        vec![edge("A", "X")],
    )
}

pub fn single_root() -> HybridNetwork {
    HybridNetwork::new("root", vec![Node::continuous("X", vec![ClgParams::new(0.5, vec![], 2.0)])], vec![])
}

/// U, V roots; D switches the intercept of W = 0.5U − 1.5V + c_D; Z = W + U.
pub fn hand_linear() -> HybridNetwork {
    HybridNetwork::new(
        "hand",
        vec![
            Node::discrete("D", 2, vec![vec![0.3, 0.7]]),
            Node::continuous("U", vec![ClgParams::new(1.0, vec![], 2.0)]),
            Node::continuous("V", vec![ClgParams::new(-0.5, vec![], 0.6)]),
            Node::continuous(
                "W",
                vec![ClgParams::new(2.0, vec![0.5, -1.5], 0.7), ClgParams::new(-3.0, vec![0.5, -1.5], 1.3)],
            ),
            Node::continuous("Z", vec![ClgParams::new(0.0, vec![1.0, 1.0], 1.0)]),
        ],
        vec![edge("D", "W"), edge("U", "W"), edge("V", "W"), edge("W", "Z"), edge("U", "Z")],
    )
}

pub fn ys(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("Y{i}")).collect()
}

/// One draw of every continuous node with the discrete states held fixed.
/// Entry `i` is node `i`'s value (discrete entries stay 0).
pub fn sample_given_states(net: &HybridNetwork, states: &[usize], order: &[usize], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x = vec![0.0; net.len()];
    for &i in order {
        let Some(cpd) = net.clg_cpd(i) else { continue };
        let dp: Vec<usize> = net.discrete_parents(i).iter().map(|&p| states[p]).collect();
        let p = &cpd.params[config_index(&net.parent_cardinalities(i), &dp)];
        let mut mu = p.intercept;
        for (b, &u) in p.coeffs.iter().zip(&net.continuous_parents(i)) {
            mu += b * x[u];
        }
        let z: f64 = rng.sample(StandardNormal);
        x[i] = mu + p.sigma * z;
    }
    x
}

/// Total weight, mean and variance of `(w, mean, var)` triples via raw moments.
pub fn raw_moments(comps: &[(f64, f64, f64)]) -> (f64, f64, f64) {
    let w: f64 = comps.iter().map(|c| c.0).sum();
    let m1: f64 = comps.iter().map(|c| c.0 * c.1).sum::<f64>() / w;
    let m2: f64 = comps.iter().map(|c| c.0 * (c.2 + c.1 * c.1)).sum::<f64>() / w;
    (w, m1, m2 - m1 * m1)
}

/// Closed-form KL(N(m0,v0) ‖ N(m1,v1)).
pub fn gaussian_kl(m0: f64, v0: f64, m1: f64, v1: f64) -> f64 {
    0.5 * ((v0 / v1) + (m1 - m0).powi(2) / v1 - 1.0 + (v1 / v0).ln())
}

pub fn random_mixture(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<(f64, f64, f64)> {
    let len = rng.random_range(1..=max_len);
    (0..len)
        .map(|_| (rng.random_range(0.01..2.0), rng.random_range(-10.0..10.0), rng.random_range(0.05..5.0)))
        .collect()
}
