//! Posterior marginals as produced by every inference routine in the crate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::mixture::{GaussianComponent, GaussianMixture};

/// Posterior marginal of one node.
///
/// JSON: a discrete belief is a probability array, a continuous belief a list of
/// `{w, mean, var}` components, and an observed continuous node `{"point": v}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Belief {
    Discrete(Vec<f64>),
    Continuous(GaussianMixture),
    Point {
        point: f64,
    },
}

/// Beliefs for a whole network keyed by node id.
pub type Beliefs = BTreeMap<String, Belief>;

impl Belief {
    pub fn point(v: f64) -> Self {
        Belief::Point { point: v }
    }

    pub fn indicator(states: usize, state: usize) -> Self {
        let mut p = vec![0.0; states];
        p[state] = 1.0;
        Belief::Discrete(p)
    }

    pub fn gaussian(mean: f64, var: f64) -> Self {
        Belief::Continuous(GaussianMixture::new(vec![GaussianComponent::new(1.0, mean, var)]))
    }

    pub fn is_normalized(&self) -> bool {
        match self {
            Belief::Discrete(p) => {
                p.iter().all(|x| x.is_finite() && *x >= 0.0) && (p.iter().sum::<f64>() - 1.0).abs() <= 1e-9
            }
            Belief::Continuous(g) => g.is_finite() && g.iter().all(|c| c.weight >= 0.0) && g.is_normalized(),
            Belief::Point { point } => point.is_finite(),
        }
    }

    pub fn as_discrete(&self) -> Option<&[f64]> {
        match self {
            Belief::Discrete(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_mixture(&self) -> Option<&GaussianMixture> {
        match self {
            Belief::Continuous(g) => Some(g),
            _ => None,
        }
    }

    /// Mean and variance; a point has zero variance. `None` for discrete beliefs.
    pub fn moments(&self) -> Option<(f64, f64)> {
        match self {
            Belief::Continuous(g) => g.moments().ok(),
            Belief::Point { point } => Some((*point, 0.0)),
            Belief::Discrete(_) => None,
        }
    }
}

/// Reads beliefs from either a bare `{id: belief}` map or any JSON object
/// carrying such a map under a `beliefs` key (the `infer` output).
pub fn beliefs_from_json(text: &str) -> Result<Beliefs, serde_json::Error> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    match value.get("beliefs") {
        Some(inner) => serde_json::from_value(inner.clone()),
        None => serde_json::from_value(value),
    }
}
