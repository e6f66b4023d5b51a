use std::collections::HashMap;

use crate::mixture::{GaussianComponent, GaussianMixture};

/// A factor over a continuous variable.
#[derive(Debug, Clone, PartialEq)]
pub enum ContinuousPotential {
    /// The uninformative lambda, identically one.
    Flat,
    /// Observed value.
    Point(f64),
    Mixture(GaussianMixture),
}

impl ContinuousPotential {
    /// Components as a mixture; `Point` becomes a unit-weight zero-variance component.
    pub(crate) fn components(&self) -> Option<Vec<GaussianComponent>> {
        match self {
            ContinuousPotential::Flat => None,
            ContinuousPotential::Point(v) => Some(vec![GaussianComponent::new(1.0, *v, 0.0)]),
            ContinuousPotential::Mixture(g) => Some(g.components().to_vec()),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ContinuousPotential::Flat => 0,
            ContinuousPotential::Point(_) => 1,
            ContinuousPotential::Mixture(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A factor over either kind of variable. Discrete potentials are plain
/// nonnegative vectors indexed by state.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Discrete(Vec<f64>),
    Continuous(ContinuousPotential),
}

impl Potential {
    pub fn flat() -> Self {
        Potential::Continuous(ContinuousPotential::Flat)
    }

    pub fn ones(states: usize) -> Self {
        Potential::Discrete(vec![1.0; states])
    }

    pub fn point(v: f64) -> Self {
        Potential::Continuous(ContinuousPotential::Point(v))
    }

    pub fn mixture(g: GaussianMixture) -> Self {
        Potential::Continuous(ContinuousPotential::Mixture(g))
    }

    pub fn indicator(states: usize, state: usize) -> Self {
        let mut v = vec![0.0; states];
        v[state] = 1.0;
        Potential::Discrete(v)
    }

    pub fn as_discrete(&self) -> Option<&[f64]> {
        match self {
            Potential::Discrete(v) => Some(v),
            Potential::Continuous(_) => None,
        }
    }

    pub fn as_continuous(&self) -> Option<&ContinuousPotential> {
        match self {
            Potential::Continuous(c) => Some(c),
            Potential::Discrete(_) => None,
        }
    }

    /// Number of mixture components held, zero for discrete and flat potentials.
    pub fn component_count(&self) -> usize {
        match self {
            Potential::Continuous(ContinuousPotential::Mixture(g)) => g.len(),
            _ => 0,
        }
    }
}

/// Pi and lambda functions per node plus the messages on every edge.
/// Both messages on an edge are factors over the parent variable.
#[derive(Debug, Clone, Default)]
pub struct MessageBoard {
    pub(crate) pi_fn: Vec<Option<Potential>>,
    pub(crate) lambda_fn: Vec<Option<Potential>>,
    pub(crate) pi_msg: HashMap<(usize, usize), Potential>,
    pub(crate) lambda_msg: HashMap<(usize, usize), Potential>,
}

impl MessageBoard {
    pub fn new(nodes: usize) -> Self {
        Self {
            pi_fn: vec![None; nodes],
            lambda_fn: vec![None; nodes],
            pi_msg: HashMap::new(),
            lambda_msg: HashMap::new(),
        }
    }

    pub fn pi_function(&self, node: usize) -> Option<&Potential> {
        self.pi_fn[node].as_ref()
    }

    pub fn lambda_function(&self, node: usize) -> Option<&Potential> {
        self.lambda_fn[node].as_ref()
    }

    pub fn set_pi_function(&mut self, node: usize, p: Potential) {
        self.pi_fn[node] = Some(p);
    }

    pub fn set_lambda_function(&mut self, node: usize, p: Potential) {
        self.lambda_fn[node] = Some(p);
    }

    /// Message from `parent` to `child`.
    pub fn pi_message(&self, parent: usize, child: usize) -> Option<&Potential> {
        self.pi_msg.get(&(parent, child))
    }

    pub fn set_pi_message(&mut self, parent: usize, child: usize, p: Potential) {
        self.pi_msg.insert((parent, child), p);
    }

    /// Message from `child` to `parent`.
    pub fn lambda_message(&self, child: usize, parent: usize) -> Option<&Potential> {
        self.lambda_msg.get(&(parent, child))
    }

    pub fn set_lambda_message(&mut self, child: usize, parent: usize, p: Potential) {
        self.lambda_msg.insert((parent, child), p);
    }

    /// Largest component count over every stored continuous potential.
    pub fn max_components(&self) -> usize {
        self.pi_fn
            .iter()
            .chain(&self.lambda_fn)
            .flatten()
            .chain(self.pi_msg.values())
            .chain(self.lambda_msg.values())
            .map(Potential::component_count)
            .max()
            .unwrap_or(0)
    }
}
