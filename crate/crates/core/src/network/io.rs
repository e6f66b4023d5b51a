//! JSON network format.
//!
//! ```json
//! {"name": "...",
//!  "nodes": [
//!    {"id": "A", "kind": "discrete", "states": 2, "cpt": {"": [0.5, 0.5]}},
//!    {"id": "X", "kind": "continuous",
//!     "clg": {"0": {"intercept": -1.0, "coeffs": [], "sigma": 1.0},
//!             "1": {"intercept": 1.0, "coeffs": [], "sigma": 1.0}}}],
//!  "edges": [["A", "X"]]}
//! ```
//!
//! Configuration keys are the comma-joined discrete parent states in declared
//! parent order, `""` for nodes without discrete parents.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::error::Category;
use thiserror::Error;

use super::{config_index, config_states, ClgCpd, ClgParams, Cpd, DiscreteCpd, HybridNetwork, Node, Violation};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Parse(String),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("network failed validation: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Violation>),
}

impl From<serde_json::Error> for LoadError {
    fn from(e: serde_json::Error) -> Self {
        match e.classify() {
            Category::Data => LoadError::Schema(e.to_string()),
            _ => LoadError::Parse(e.to_string()),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    name: String,
    nodes: Vec<NodeFile>,
    edges: Vec<(String, String)>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum NodeFile {
    Discrete { id: String, states: usize, cpt: BTreeMap<String, Vec<f64>> },
    Continuous { id: String, clg: BTreeMap<String, ClgEntry> },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClgEntry {
    intercept: f64,
    coeffs: Vec<f64>,
    sigma: f64,
}

fn config_key(cards: &[usize], index: usize) -> String {
    config_states(cards, index)
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_key(cards: &[usize], key: &str) -> Option<usize> {
    let states: Vec<usize> = if key.is_empty() {
        Vec::new()
    } else {
        key.split(',').map(|s| s.trim().parse().ok()).collect::<Option<_>>()?
    };
    (states.len() == cards.len() && states.iter().zip(cards).all(|(s, c)| s < c))
        .then(|| config_index(cards, &states))
}

/// Orders keyed entries into dense per-configuration rows.
fn densify<T>(
    id: &str,
    cards: &[usize],
    entries: BTreeMap<String, T>,
    violations: &mut Vec<Violation>,
) -> Vec<Option<T>> {
    let n: usize = cards.iter().product();
    let mut rows: Vec<Option<T>> = (0..n).map(|_| None).collect();
    for (key, v) in entries {
        match parse_key(cards, &key) {
            Some(k) => rows[k] = Some(v),
            None => violations.push(Violation::UnknownConfiguration { node: id.to_owned(), key }),
        }
    }
    for (k, r) in rows.iter().enumerate() {
        if r.is_none() {
            violations.push(Violation::MissingConfiguration { node: id.to_owned(), key: config_key(cards, k) });
        }
    }
    rows
}

/// Parses and validates a network from JSON text.
pub fn network_from_json(text: &str) -> Result<HybridNetwork, LoadError> {
    let file: NetworkFile = serde_json::from_str(text)?;

    // Cardinalities are needed to decode keys, so resolve the graph first.
    let states: BTreeMap<&str, Option<usize>> = file
        .nodes
        .iter()
        .map(|n| match n {
            NodeFile::Discrete { id, states, .. } => (id.as_str(), Some(*states)),
            NodeFile::Continuous { id, .. } => (id.as_str(), None),
        })
        .collect();
    let cards_of = |id: &str| -> Vec<usize> {
        file.edges
            .iter()
            .filter(|(_, c)| c == id)
            .filter_map(|(p, _)| states.get(p.as_str()).copied().flatten())
            .collect()
    };

    let mut violations = Vec::new();
    let mut nodes = Vec::with_capacity(file.nodes.len());
    for n in &file.nodes {
        match n {
            NodeFile::Discrete { id, states, cpt } => {
                let cards = cards_of(id);
                let rows = densify(id, &cards, cpt.clone(), &mut violations);
                let table = rows.into_iter().map(Option::unwrap_or_default).collect();
                nodes.push(Node { id: id.clone(), cpd: Cpd::Discrete(DiscreteCpd { states: *states, table }) });
            }
            NodeFile::Continuous { id, clg } => {
                let cards = cards_of(id);
                let entries = clg
                    .iter()
                    .map(|(k, e)| (k.clone(), ClgParams::new(e.intercept, e.coeffs.clone(), e.sigma)))
                    .collect();
                let rows = densify(id, &cards, entries, &mut violations);
                let params = rows
                    .into_iter()
                    .map(|r| r.unwrap_or_else(|| ClgParams::new(0.0, Vec::new(), 1.0)))
                    .collect();
                nodes.push(Node { id: id.clone(), cpd: Cpd::Continuous(ClgCpd { params }) });
            }
        }
    }

    let net = HybridNetwork::new(file.name, nodes, file.edges);
    violations.extend(net.validate());
    if violations.is_empty() {
        Ok(net)
    } else {
        Err(LoadError::Validation(violations))
    }
}

/// Serializes a network to pretty-printed JSON.
pub fn network_to_json(net: &HybridNetwork) -> String {
    let nodes = (0..net.len())
        .map(|i| {
            let cards = net.parent_cardinalities(i);
            let id = net.id(i).to_owned();
            match &net.node(i).cpd {
                Cpd::Discrete(d) => NodeFile::Discrete {
                    id,
                    states: d.states,
                    cpt: d.table.iter().enumerate().map(|(k, row)| (config_key(&cards, k), row.clone())).collect(),
                },
                Cpd::Continuous(c) => NodeFile::Continuous {
                    id,
                    clg: c
                        .params
                        .iter()
                        .enumerate()
                        .map(|(k, p)| {
                            let e = ClgEntry { intercept: p.intercept, coeffs: p.coeffs.clone(), sigma: p.sigma };
                            (config_key(&cards, k), e)
                        })
                        .collect(),
                },
            }
        })
        .collect();
    let file = NetworkFile { name: net.name().to_owned(), nodes, edges: net.edges().to_vec() };
    serde_json::to_string_pretty(&file).expect("network serialization cannot fail")
}

pub fn load_network(path: impl AsRef<Path>) -> Result<HybridNetwork, LoadError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.display().to_string(), source })?;
    network_from_json(&text)
}

pub fn save_network(net: &HybridNetwork, path: impl AsRef<Path>) -> std::io::Result<()> {
    fs::write(path, network_to_json(net))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::two_node;
    use super::*;

    #[test]
    fn fixture_round_trips() {
        let net = two_node();
        let text = network_to_json(&net);
        assert!(text.contains(r#""kind": "discrete""#));
        assert_eq!(network_from_json(&text).unwrap(), net);
    }

    #[test]
    fn unknown_kind_is_schema_error() {
        let text = r#"{"name":"n","nodes":[{"id":"A","kind":"ordinal","states":2}],"edges":[]}"#;
        assert!(matches!(network_from_json(text), Err(LoadError::Schema(_))));
    }

    #[test]
    fn truncated_file_is_parse_error() {
        assert!(matches!(network_from_json(r#"{"name": "n", "nodes": ["#), Err(LoadError::Parse(_))));
    }

    #[test]
    fn missing_parent_is_validation_failure() {
        let text = r#"{"name":"n","nodes":[
            {"id":"X","kind":"continuous","clg":{"":{"intercept":0,"coeffs":[1],"sigma":1}}}],
            "edges":[["U","X"]]}"#;
        match network_from_json(text) {
            Err(LoadError::Validation(v)) => {
                assert!(v.iter().any(|x| matches!(x, Violation::MissingEndpoint { .. })))
            }
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn missing_configuration_key_is_reported() {
        let text = r#"{"name":"n","nodes":[
            {"id":"A","kind":"discrete","states":2,"cpt":{"":[0.5,0.5]}},
            {"id":"X","kind":"continuous","clg":{"0":{"intercept":0,"coeffs":[],"sigma":1}}}],
            "edges":[["A","X"]]}"#;
        match network_from_json(text) {
            Err(LoadError::Validation(v)) => {
                assert!(v.contains(&Violation::MissingConfiguration { node: "X".into(), key: "1".into() }))
            }
            other => panic!("expected validation failure, got {other:?}"),
        }
    }
}
