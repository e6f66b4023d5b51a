//! Elementary cycles of the undirected skeleton of a network.
//!
//! Johnson's circuit enumeration runs on the skeleton seen as a symmetric
//! digraph. Every undirected cycle of length `k ≥ 3` then appears as exactly two
//! circuits rooted at its least vertex, one per orientation; the one whose second
//! vertex is smaller than its last is kept. Two-vertex circuits are just an edge
//! walked back and forth and are dropped.

use crate::network::HybridNetwork;

/// Undirected simple adjacency lists, sorted and deduplicated.
pub fn skeleton(net: &HybridNetwork) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); net.len()];
    for c in 0..net.len() {
        for &p in net.parents(c) {
            if p != c {
                adj[p].push(c);
                adj[c].push(p);
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

/// Number of elementary cycles of the skeleton.
pub fn count_cycles(net: &HybridNetwork) -> u64 {
    let mut count = 0;
    for_each_cycle(&skeleton(net), |_| count += 1);
    count
}

/// Every elementary cycle as a vertex list starting at its least vertex.
pub fn elementary_cycles(net: &HybridNetwork) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for_each_cycle(&skeleton(net), |c| out.push(c.to_vec()));
    out
}

struct Johnson<'a, F> {
    adj: &'a [Vec<usize>],
    start: usize,
    blocked: Vec<bool>,
    b: Vec<Vec<usize>>,
    stack: Vec<usize>,
    emit: F,
}

impl<F: FnMut(&[usize])> Johnson<'_, F> {
    fn unblock(&mut self, u: usize) {
        let mut work = vec![u];
        while let Some(w) = work.pop() {
            if self.blocked[w] {
                self.blocked[w] = false;
                work.append(&mut self.b[w]);
            }
        }
    }

    fn circuit(&mut self, v: usize) -> bool {
        let mut found = false;
        self.stack.push(v);
        self.blocked[v] = true;
        for &w in &self.adj[v] {
            if w < self.start {
                continue;
            }
            if w == self.start {
                let s = &self.stack;
                if s.len() >= 3 && s[1] < s[s.len() - 1] {
                    (self.emit)(s);
                }
                found = true;
            } else if !self.blocked[w] && self.circuit(w) {
                found = true;
            }
        }
        if found {
            self.unblock(v);
        } else {
            for &w in &self.adj[v] {
                if w >= self.start && !self.b[w].contains(&v) {
                    self.b[w].push(v);
                }
            }
        }
        self.stack.pop();
        found
    }
}

fn for_each_cycle(adj: &[Vec<usize>], emit: impl FnMut(&[usize])) {
    let n = adj.len();
    let mut j = Johnson { adj, start: 0, blocked: vec![false; n], b: vec![Vec::new(); n], stack: Vec::new(), emit };
    for s in 0..n {
        j.start = s;
        for v in s..n {
            j.blocked[v] = false;
            j.b[v].clear();
        }
        j.circuit(s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{ClgParams, Node};

    fn graph(n: usize, edges: &[(usize, usize)]) -> HybridNetwork {
        let nodes = (0..n)
            .map(|i| {
                let k = edges.iter().filter(|e| e.1 == i).count();
                Node::continuous(format!("v{i}"), vec![ClgParams::new(0.0, vec![1.0; k], 1.0)])
            })
            .collect();
        let edges = edges.iter().map(|(a, b)| (format!("v{a}"), format!("v{b}"))).collect();
        HybridNetwork::new("g", nodes, edges)
    }

    #[test]
    fn tree_has_none() {
        assert_eq!(count_cycles(&graph(4, &[(0, 1), (1, 2), (1, 3)])), 0);
    }

    #[test]
    fn triangle_has_one() {
        let net = graph(3, &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(elementary_cycles(&net), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn complete_graph_on_four() {
        // K4: four triangles and three 4-cycles.
        let net = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(count_cycles(&net), 7);
    }
}
