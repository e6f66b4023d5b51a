//! Conditional linear Gaussian network model.
//!
//! A [`HybridNetwork`] is a DAG of discrete nodes carrying conditional
//! probability tables and continuous nodes carrying conditional linear
//! Gaussian parameters switched by the state of their discrete parents.
//!
//! Discrete parent configurations are addressed in row-major order over the
//! node's discrete parents as they appear in the edge list, so the first
//! declared discrete parent is the most significant digit.

mod evidence;
mod io;
mod validate;

use std::collections::{BinaryHeap, HashMap};
use std::cmp::Reverse;

use thiserror::Error;

pub use evidence::{BoundEvidence, Evidence, EvidenceError, Observation};
pub use io::{load_network, network_from_json, network_to_json, save_network, LoadError};
pub use validate::Violation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("network contains a directed cycle")]
    Cycle,
    #[error("network is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// Conditional probability table of a discrete node, one row per parent configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCpd {
    pub states: usize,
    pub table: Vec<Vec<f64>>,
}

/// Linear Gaussian parameters for one discrete parent configuration:
/// `X | u ~ N(intercept + coeffs·u, sigma²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClgParams {
    pub intercept: f64,
    pub coeffs: Vec<f64>,
    pub sigma: f64,
}

impl ClgParams {
    pub fn new(intercept: f64, coeffs: Vec<f64>, sigma: f64) -> Self {
        Self { intercept, coeffs, sigma }
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }
}

/// One [`ClgParams`] per discrete parent configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ClgCpd {
    pub params: Vec<ClgParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cpd {
    Discrete(DiscreteCpd),
    Continuous(ClgCpd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub cpd: Cpd,
}

impl Node {
    pub fn discrete(id: impl Into<String>, states: usize, table: Vec<Vec<f64>>) -> Self {
        Self { id: id.into(), cpd: Cpd::Discrete(DiscreteCpd { states, table }) }
    }

    pub fn continuous(id: impl Into<String>, params: Vec<ClgParams>) -> Self {
        Self { id: id.into(), cpd: Cpd::Continuous(ClgCpd { params }) }
    }

    pub fn kind(&self) -> NodeKind {
        match self.cpd {
            Cpd::Discrete(_) => NodeKind::Discrete,
            Cpd::Continuous(_) => NodeKind::Continuous,
        }
    }
}

/// A hybrid Bayesian network. Immutable once built; the parent and child
/// lists are derived from the edge list, which fixes the declared parent order.
#[derive(Debug, Clone)]
pub struct HybridNetwork {
    name: String,
    nodes: Vec<Node>,
    edges: Vec<(String, String)>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl PartialEq for HybridNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.nodes == other.nodes && self.edges == other.edges
    }
}

impl HybridNetwork {
    /// Builds the network. Edges naming unknown nodes are kept in the edge list
    /// (so [`HybridNetwork::validate`] can report them) but do not enter the
    /// adjacency lists.
    pub fn new(name: impl Into<String>, nodes: Vec<Node>, edges: Vec<(String, String)>) -> Self {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            index.entry(n.id.clone()).or_insert(i);
        }
        let mut parents = vec![Vec::new(); nodes.len()];
        let mut children = vec![Vec::new(); nodes.len()];
        for (p, c) in &edges {
            if let (Some(&pi), Some(&ci)) = (index.get(p), index.get(c)) {
                if !parents[ci].contains(&pi) {
                    parents[ci].push(pi);
                    children[pi].push(ci);
                }
            }
        }
        Self { name: name.into(), nodes, edges, index, parents, children }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(String, String)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, i: usize) -> &str {
        &self.nodes[i].id
    }

    pub fn kind(&self, i: usize) -> NodeKind {
        self.nodes[i].kind()
    }

    pub fn is_discrete(&self, i: usize) -> bool {
        self.kind(i) == NodeKind::Discrete
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// Number of states of a discrete node; `None` for continuous nodes.
    pub fn states(&self, i: usize) -> Option<usize> {
        match &self.nodes[i].cpd {
            Cpd::Discrete(d) => Some(d.states),
            Cpd::Continuous(_) => None,
        }
    }

    pub fn discrete_parents(&self, i: usize) -> Vec<usize> {
        self.parents[i].iter().copied().filter(|&p| self.is_discrete(p)).collect()
    }

    pub fn continuous_parents(&self, i: usize) -> Vec<usize> {
        self.parents[i].iter().copied().filter(|&p| !self.is_discrete(p)).collect()
    }

    /// Cardinalities of the discrete parents of `i`, in declared order.
    pub fn parent_cardinalities(&self, i: usize) -> Vec<usize> {
        self.discrete_parents(i)
            .into_iter()
            .map(|p| self.states(p).unwrap_or(0))
            .collect()
    }

    /// Number of discrete parent configurations of `i` (1 when it has none).
    pub fn config_count(&self, i: usize) -> usize {
        self.parent_cardinalities(i).iter().product()
    }

    /// Total number of joint configurations of all discrete nodes.
    pub fn discrete_configuration_count(&self) -> u128 {
        (0..self.len())
            .filter_map(|i| self.states(i))
            .map(|s| s as u128)
            .product()
    }

    pub fn continuous_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.is_discrete(i)).collect()
    }

    pub fn discrete_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_discrete(i)).collect()
    }

    pub fn discrete_cpd(&self, i: usize) -> Option<&DiscreteCpd> {
        match &self.nodes[i].cpd {
            Cpd::Discrete(d) => Some(d),
            Cpd::Continuous(_) => None,
        }
    }

    pub fn clg_cpd(&self, i: usize) -> Option<&ClgCpd> {
        match &self.nodes[i].cpd {
            Cpd::Continuous(c) => Some(c),
            Cpd::Discrete(_) => None,
        }
    }

    /// Returns every invariant violation; the network is valid iff the list is empty.
    pub fn validate(&self) -> Vec<Violation> {
        validate::validate(self)
    }

    /// Validates and returns `self`, or every violation as an error.
    pub fn checked(&self) -> Result<&Self, NetworkError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(NetworkError::Invalid(v))
        }
    }

    /// Parents-before-children ordering, ties broken by node id.
    pub fn topological_order(&self) -> Result<Vec<usize>, NetworkError> {
        topological_order(self)
    }
}

/// Row-major index of a discrete parent configuration.
pub fn config_index(cards: &[usize], states: &[usize]) -> usize {
    cards.iter().zip(states).fold(0, |acc, (&c, &s)| acc * c + s)
}

/// Inverse of [`config_index`].
pub fn config_states(cards: &[usize], mut index: usize) -> Vec<usize> {
    let mut out = vec![0; cards.len()];
    for (slot, &c) in out.iter_mut().zip(cards).rev() {
        *slot = index % c;
        index /= c;
    }
    out
}

/// Kahn's algorithm; among ready nodes the smallest id goes first.
pub fn topological_order(net: &HybridNetwork) -> Result<Vec<usize>, NetworkError> {
    let n = net.len();
    let mut indegree: Vec<usize> = (0..n).map(|i| net.parents(i).len()).collect();
    let mut ready: BinaryHeap<Reverse<(&str, usize)>> = (0..n)
        .filter(|&i| indegree[i] == 0)
        .map(|i| Reverse((net.id(i), i)))
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse((_, i))) = ready.pop() {
        order.push(i);
        for &c in net.children(i) {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse((net.id(c), c)));
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err(NetworkError::Cycle)
    }
}

/// Ids in topological order.
pub fn topological_ids(net: &HybridNetwork) -> Result<Vec<String>, NetworkError> {
    Ok(topological_order(net)?.into_iter().map(|i| net.id(i).to_owned()).collect())
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn cont(id: &str, ncoef: usize) -> Node {
        Node::continuous(id, vec![ClgParams::new(0.0, vec![1.0; ncoef], 1.0)])
    }

    #[test]
    fn config_index_is_row_major() {
        let cards = [2, 3];
        assert_eq!(config_index(&cards, &[0, 0]), 0);
        assert_eq!(config_index(&cards, &[0, 2]), 2);
        assert_eq!(config_index(&cards, &[1, 0]), 3);
        for k in 0..6 {
            assert_eq!(config_index(&cards, &config_states(&cards, k)), k);
        }
        assert_eq!(config_index(&[], &[]), 0);
    }

    #[test]
    fn chain_order() {
        let net = HybridNetwork::new(
            "chain",
            vec![cont("Y", 1), Node::discrete("A", 2, vec![vec![0.5, 0.5]]), Node::continuous("X", vec![ClgParams::new(0.0, vec![], 1.0); 2])],
            vec![edge("A", "X"), edge("X", "Y")],
        );
        assert_eq!(topological_ids(&net).unwrap(), ["A", "X", "Y"]);
    }

    #[test]
    fn single_node_order() {
        let net = HybridNetwork::new("one", vec![cont("Z", 0)], vec![]);
        assert_eq!(topological_ids(&net).unwrap(), ["Z"]);
    }

    #[test]
    fn triangle_order_matches_brute_force() {
        let net = HybridNetwork::new(
            "tri",
            vec![cont("Y", 1 + 0), Node::discrete("A", 2, vec![vec![0.5, 0.5]]), cont("X", 0)],
            vec![edge("A", "X"), edge("A", "Y"), edge("X", "Y")],
        );
        // Brute force: every permutation that respects all edges.
        let ids = ["A", "X", "Y"];
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let valid: Vec<Vec<&str>> = perms
            .iter()
            .filter(|p| {
                net.edges().iter().all(|(a, b)| {
                    let pa = p.iter().position(|&k| ids[k] == a).unwrap();
                    let pb = p.iter().position(|&k| ids[k] == b).unwrap();
                    pa < pb
                })
            })
            .map(|p| p.iter().map(|&k| ids[k]).collect())
            .collect();
        assert_eq!(valid.len(), 1);
        assert_eq!(topological_ids(&net).unwrap(), valid[0]);
    }

    #[test]
    fn cycle_is_an_error() {
        let net = HybridNetwork::new("cyc", vec![cont("X", 1), cont("Y", 1)], vec![edge("X", "Y"), edge("Y", "X")]);
        assert_eq!(topological_order(&net), Err(NetworkError::Cycle));
    }

    #[test]
    fn two_node_is_valid() {
        assert!(two_node().validate().is_empty());
        assert_eq!(two_node().discrete_configuration_count(), 2);
    }
}
