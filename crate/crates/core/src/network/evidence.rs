use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::HybridNetwork;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvidenceError {
    #[error("evidence names unknown node '{0}'")]
    UnknownNode(String),
    #[error("state {state} is out of range for '{node}' ({states} states)")]
    StateOutOfRange { node: String, state: usize, states: usize },
    #[error("discrete node '{0}' needs an integer state")]
    NotAState(String),
    #[error("continuous evidence for '{0}' is not finite")]
    NonFinite(String),
}

/// An observed value: a state index for a discrete node or a real for a continuous one.
///
/// Serialized as a bare JSON number. Integers deserialize as states and are
/// coerced to reals when bound to a continuous node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Observation {
    State(usize),
    Value(f64),
}

/// Evidence keyed by node id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Evidence(BTreeMap<String, Observation>);

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, id: impl Into<String>, obs: Observation) -> Self {
        self.0.insert(id.into(), obs);
        self
    }

    pub fn insert(&mut self, id: impl Into<String>, obs: Observation) {
        self.0.insert(id.into(), obs);
    }

    pub fn get(&self, id: &str) -> Option<Observation> {
        self.0.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.0.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Observation)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("evidence serialization cannot fail")
    }

    /// Checks the evidence against `net` and indexes it by node position.
    pub fn bind(&self, net: &HybridNetwork) -> Result<BoundEvidence, EvidenceError> {
        let mut per_node = vec![None; net.len()];
        for (id, obs) in &self.0 {
            let i = net.index_of(id).ok_or_else(|| EvidenceError::UnknownNode(id.clone()))?;
            let bound = match (net.states(i), *obs) {
                (Some(states), Observation::State(s)) => {
                    if s >= states {
                        return Err(EvidenceError::StateOutOfRange { node: id.clone(), state: s, states });
                    }
                    Observation::State(s)
                }
                (Some(_), Observation::Value(_)) => return Err(EvidenceError::NotAState(id.clone())),
                (None, Observation::State(s)) => Observation::Value(s as f64),
                (None, Observation::Value(v)) => {
                    if !v.is_finite() {
                        return Err(EvidenceError::NonFinite(id.clone()));
                    }
                    Observation::Value(v)
                }
            };
            per_node[i] = Some(bound);
        }
        Ok(BoundEvidence { per_node })
    }
}

/// Evidence resolved against a network: discrete nodes hold `State`,
/// continuous nodes hold `Value`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundEvidence {
    per_node: Vec<Option<Observation>>,
}

impl BoundEvidence {
    pub fn get(&self, i: usize) -> Option<Observation> {
        self.per_node[i]
    }

    pub fn is_observed(&self, i: usize) -> bool {
        self.per_node[i].is_some()
    }

    pub fn state(&self, i: usize) -> Option<usize> {
        match self.per_node[i] {
            Some(Observation::State(s)) => Some(s),
            _ => None,
        }
    }

    pub fn value(&self, i: usize) -> Option<f64> {
        match self.per_node[i] {
            Some(Observation::Value(v)) => Some(v),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::two_node;
    use super::*;

    #[test]
    fn json_numbers_map_to_observations() {
        let ev = Evidence::from_json(r#"{"A": 1, "X": 0.25}"#).unwrap();
        assert_eq!(ev.get("A"), Some(Observation::State(1)));
        assert_eq!(ev.get("X"), Some(Observation::Value(0.25)));
        assert_eq!(Evidence::from_json(&ev.to_json()).unwrap(), ev);
    }

    #[test]
    fn integer_on_continuous_node_is_coerced() {
        let ev = Evidence::from_json(r#"{"X": 2}"#).unwrap();
        let b = ev.bind(&two_node()).unwrap();
        assert_eq!(b.value(1), Some(2.0));
    }

    #[test]
    fn bad_evidence_is_rejected() {
        let net = two_node();
        let bad = |s: &str| Evidence::from_json(s).unwrap().bind(&net).unwrap_err();
        assert_eq!(bad(r#"{"Q": 1}"#), EvidenceError::UnknownNode("Q".into()));
        assert!(matches!(bad(r#"{"A": 2}"#), EvidenceError::StateOutOfRange { .. }));
        assert_eq!(bad(r#"{"A": 0.5}"#), EvidenceError::NotAState("A".into()));
    }
}
