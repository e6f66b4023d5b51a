use std::collections::HashSet;
use std::fmt;

use super::{topological_order, Cpd, HybridNetwork};

const NORMALIZATION_TOL: f64 = 1e-9;

/// One broken network invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateId(String),
    MissingEndpoint { parent: String, child: String },
    SelfLoop(String),
    DuplicateEdge { parent: String, child: String },
    DirectedCycle,
    DiscreteWithContinuousParent { node: String, parent: String },
    ZeroStates(String),
    CptShape { node: String, expected: usize, found: usize },
    CptRowLength { node: String, config: usize, expected: usize, found: usize },
    UnnormalizedCpt { node: String, config: usize, sum: f64 },
    NegativeProbability { node: String, config: usize },
    ClgShape { node: String, expected: usize, found: usize },
    CoefficientCount { node: String, config: usize, expected: usize, found: usize },
    NonPositiveSigma { node: String, config: usize },
    NonFinite { node: String, config: usize },
    MissingConfiguration { node: String, key: String },
    UnknownConfiguration { node: String, key: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            DuplicateId(id) => write!(f, "duplicate node id '{id}'"),
            MissingEndpoint { parent, child } => {
                write!(f, "edge {parent}->{child} references a missing node")
            }
            SelfLoop(id) => write!(f, "self loop on '{id}'"),
            DuplicateEdge { parent, child } => write!(f, "duplicate edge {parent}->{child}"),
            DirectedCycle => write!(f, "graph contains a directed cycle"),
            DiscreteWithContinuousParent { node, parent } => write!(
                f,
                "discrete node with continuous parent: '{node}' has parent '{parent}'"
            ),
            ZeroStates(id) => write!(f, "discrete node '{id}' has no states"),
            CptShape { node, expected, found } => write!(
                f,
                "CPT of '{node}' has {found} rows, expected {expected} parent configurations"
            ),
            CptRowLength { node, config, expected, found } => write!(
                f,
                "CPT row {config} of '{node}' has {found} entries, expected {expected}"
            ),
            UnnormalizedCpt { node, config, sum } => {
                write!(f, "unnormalized CPT: '{node}' row {config} sums to {sum}")
            }
            NegativeProbability { node, config } => {
                write!(f, "CPT of '{node}' row {config} has a negative or non-finite entry")
            }
            ClgShape { node, expected, found } => write!(
                f,
                "CLG of '{node}' has {found} configurations, expected {expected}"
            ),
            CoefficientCount { node, config, expected, found } => write!(
                f,
                "CLG of '{node}' configuration {config} has {found} coefficients, expected {expected}"
            ),
            NonPositiveSigma { node, config } => {
                write!(f, "CLG of '{node}' configuration {config} has sigma <= 0")
            }
            NonFinite { node, config } => {
                write!(f, "CLG of '{node}' configuration {config} has a non-finite parameter")
            }
            MissingConfiguration { node, key } => {
                write!(f, "'{node}' lacks parameters for parent configuration \"{key}\"")
            }
            UnknownConfiguration { node, key } => {
                write!(f, "'{node}' has parameters for unknown configuration \"{key}\"")
            }
        }
    }
}

pub(super) fn validate(net: &HybridNetwork) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut seen = HashSet::new();
    for n in net.nodes() {
        if !seen.insert(n.id.as_str()) {
            out.push(Violation::DuplicateId(n.id.clone()));
        }
    }

    let mut seen_edges = HashSet::new();
    for (p, c) in net.edges() {
        if net.index_of(p).is_none() || net.index_of(c).is_none() {
            out.push(Violation::MissingEndpoint { parent: p.clone(), child: c.clone() });
        } else if p == c {
            out.push(Violation::SelfLoop(p.clone()));
        } else if !seen_edges.insert((p.as_str(), c.as_str())) {
            out.push(Violation::DuplicateEdge { parent: p.clone(), child: c.clone() });
        }
    }

    if topological_order(net).is_err() {
        out.push(Violation::DirectedCycle);
    }

    for i in 0..net.len() {
        let id = net.id(i).to_owned();
        let configs = net.config_count(i);
        let n_cont = net.continuous_parents(i).len();
        match &net.node(i).cpd {
            Cpd::Discrete(d) => {
                for &p in net.parents(i) {
                    if !net.is_discrete(p) {
                        out.push(Violation::DiscreteWithContinuousParent {
                            node: id.clone(),
                            parent: net.id(p).to_owned(),
                        });
                    }
                }
                if d.states == 0 {
                    out.push(Violation::ZeroStates(id.clone()));
                }
                if d.table.len() != configs {
                    out.push(Violation::CptShape { node: id.clone(), expected: configs, found: d.table.len() });
                }
                for (k, row) in d.table.iter().enumerate() {
                    if row.len() != d.states {
                        out.push(Violation::CptRowLength {
                            node: id.clone(),
                            config: k,
                            expected: d.states,
                            found: row.len(),
                        });
                        continue;
                    }
                    if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                        out.push(Violation::NegativeProbability { node: id.clone(), config: k });
                        continue;
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > NORMALIZATION_TOL {
                        out.push(Violation::UnnormalizedCpt { node: id.clone(), config: k, sum });
                    }
                }
            }
            Cpd::Continuous(c) => {
                if c.params.len() != configs {
                    out.push(Violation::ClgShape { node: id.clone(), expected: configs, found: c.params.len() });
                }
                for (k, p) in c.params.iter().enumerate() {
                    if p.coeffs.len() != n_cont {
                        out.push(Violation::CoefficientCount {
                            node: id.clone(),
                            config: k,
                            expected: n_cont,
                            found: p.coeffs.len(),
                        });
                    }
                    if !(p.intercept.is_finite() && p.sigma.is_finite() && p.coeffs.iter().all(|b| b.is_finite())) {
                        out.push(Violation::NonFinite { node: id.clone(), config: k });
                    } else if p.sigma <= 0.0 {
                        out.push(Violation::NonPositiveSigma { node: id.clone(), config: k });
                    }
                }
            }
        }
    }
    out
}
