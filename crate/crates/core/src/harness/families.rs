//! The four benchmark network families.
//!
//! Every family is a ladder of rungs `i = 1..n`, each with a continuous state
//! `X_i` and a continuous measurement `Y_i`, with `X_i → X_{i+1}` and `X_i → Y_i`.
//!
//! | family | discrete nodes                  | extra links       |
//! |--------|---------------------------------|-------------------|
//! | 1      | one `A` (4 states), `A → X_i`   |                   |
//! | 2      | one `A` (4 states), `A → X_i`   | `Y_i → Y_{i+1}`   |
//! | 3      | `A_i` (4 states), `A_i → X_i`   |                   |
//! | 4      | `A_i` (4 states), `A_i → X_i`   | `Y_i → Y_{i+1}`   |

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{ClgParams, HybridNetwork, Node};

/// States of every discrete node in the families.
pub const DISCRETE_STATES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: u8,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("family must be 1, 2, 3 or 4, got {0}")]
    Family(u8),
    #[error("n must be at least 1")]
    Size,
}

impl FamilySpec {
    pub fn new(family: u8, n: usize, seed: u64) -> Result<Self, SpecError> {
        let s = Self { family, n, seed };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<(), SpecError> {
        if !(1..=4).contains(&self.family) {
            return Err(SpecError::Family(self.family));
        }
        if self.n == 0 {
            return Err(SpecError::Size);
        }
        Ok(())
    }

    /// One shared discrete node (families 1, 2) or one per rung (3, 4).
    pub fn shared_discrete(&self) -> bool {
        self.family <= 2
    }

    /// Whether the measurements are chained (families 2, 4).
    pub fn linked_measurements(&self) -> bool {
        self.family.is_multiple_of(2)
    }
}

fn flat_dirichlet(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let g: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|x| x / s).collect()
}

fn clg(rng: &mut ChaCha8Rng, configs: usize, ncoef: usize) -> Vec<ClgParams> {
    (0..configs)
        .map(|_| {
            let intercept = rng.random_range(-2.0..=2.0);
            let coeffs = (0..ncoef)
                .map(|_| {
                    let m: f64 = rng.random_range(0.5..=1.5);
                    if rng.random_bool(0.5) {
                        m
                    } else {
                        -m
                    }
                })
                .collect();
            let sigma = rng.random_range(0.5..=1.5);
            ClgParams::new(intercept, coeffs, sigma)
        })
        .collect()
}

/// Builds a seeded member of a family. Node order is the discrete nodes, then
/// `X1, Y1, X2, Y2, …`; `X_i` lists its discrete parent before `X_{i−1}`, and
/// `Y_i` lists `X_i` before `Y_{i−1}`.
pub fn generate_family(spec: &FamilySpec) -> Result<HybridNetwork, SpecError> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let k = DISCRETE_STATES;
    let a_id = |i: usize| if spec.shared_discrete() { "A".to_owned() } else { format!("A{i}") };

    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let discrete = if spec.shared_discrete() { 1 } else { n };
    for i in 1..=discrete {
        nodes.push(Node::discrete(a_id(i), k, vec![flat_dirichlet(&mut rng, k)]));
    }
    for i in 1..=n {
        let x = format!("X{i}");
        let ncoef = usize::from(i > 1);
        nodes.push(Node::continuous(x.clone(), clg(&mut rng, k, ncoef)));
        edges.push((a_id(i), x.clone()));
        if i > 1 {
            edges.push((format!("X{}", i - 1), x.clone()));
        }

        let y = format!("Y{i}");
        let chained = spec.linked_measurements() && i > 1;
        nodes.push(Node::continuous(y.clone(), clg(&mut rng, 1, 1 + usize::from(chained))));
        edges.push((x, y.clone()));
        if chained {
            edges.push((format!("Y{}", i - 1), y));
        }
    }
    let name = format!("family{}-n{}-seed{}", spec.family, n, spec.seed);
    Ok(HybridNetwork::new(name, nodes, edges))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_member_validates() {
        for family in 1..=4 {
            for n in 1..=10 {
                let net = generate_family(&FamilySpec::new(family, n, 11 * n as u64).unwrap()).unwrap();
                assert!(net.validate().is_empty(), "family {family} n {n}: {:?}", net.validate());
            }
        }
    }

    #[test]
    fn configuration_counts() {
        let count = |f| generate_family(&FamilySpec::new(f, 7, 0).unwrap()).unwrap().discrete_configuration_count();
        assert_eq!([count(1), count(2), count(3), count(4)], [4, 4, 16384, 16384]);
    }

    #[test]
    fn family_one_with_one_rung_is_a_chain() {
        let net = generate_family(&FamilySpec::new(1, 1, 3).unwrap()).unwrap();
        let ids: Vec<&str> = net.nodes().iter().map(|n| n.id.as_str()).collect();
        assert_eq!(ids, ["A", "X1", "Y1"]);
        assert_eq!(net.edges(), &[("A".to_owned(), "X1".to_owned()), ("X1".to_owned(), "Y1".to_owned())]);
    }

    #[test]
    fn parameters_stay_in_range() {
        let net = generate_family(&FamilySpec::new(4, 6, 9).unwrap()).unwrap();
        for i in 0..net.len() {
            if let Some(c) = net.clg_cpd(i) {
                for p in &c.params {
                    assert!((-2.0..=2.0).contains(&p.intercept));
                    assert!((0.5..=1.5).contains(&p.sigma));
                    assert!(p.coeffs.iter().all(|b| (0.5..=1.5).contains(&b.abs())));
                }
            }
        }
    }

    #[test]
    fn same_spec_same_network() {
        let s = FamilySpec::new(2, 5, 42).unwrap();
        assert_eq!(generate_family(&s).unwrap(), generate_family(&s).unwrap());
        assert_ne!(generate_family(&s).unwrap(), generate_family(&FamilySpec { seed: 43, ..s }).unwrap());
    }

    #[test]
    fn bad_specs_are_rejected() {
        assert_eq!(FamilySpec::new(5, 3, 0), Err(SpecError::Family(5)));
        assert_eq!(FamilySpec::new(1, 0, 0), Err(SpecError::Size));
    }
}
