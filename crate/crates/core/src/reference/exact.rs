//! Exact posteriors by enumerating discrete configurations.
//!
//! Given every discrete state, the continuous nodes of a CLG network are
//! jointly Gaussian. Conditioning that Gaussian on continuous evidence and
//! weighting it by the configuration's prior times the evidence likelihood
//! gives the exact posterior as a finite mixture.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::belief::{Belief, Beliefs};
use crate::mixture::{GaussianComponent, GaussianMixture};
use crate::network::{config_index, Evidence, EvidenceError, HybridNetwork, NetworkError, Observation};

/// Default cap on the number of enumerated configurations.
pub const DEFAULT_MAX_CONFIGS: u128 = 1 << 20;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{configs} discrete configurations exceed the cap of {cap}")]
    Infeasible { configs: u128, cap: u128 },
    #[error("enumeration stopped at the {budget:?} deadline after {done} of {total} configurations")]
    TimedOut { budget: Duration, done: usize, total: usize },
    #[error("evidence covariance is singular")]
    Singular,
    #[error("evidence has zero probability under the model")]
    ZeroLikelihood,
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub max_configs: u128,
    /// Abort with [`OracleError::TimedOut`] once this much wall time has passed.
    pub deadline: Option<Duration>,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { max_configs: DEFAULT_MAX_CONFIGS, deadline: None }
    }
}

/// A Gaussian over a set of continuous nodes, identified by network index.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateGaussian {
    pub nodes: Vec<usize>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl MultivariateGaussian {
    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn position(&self, node: usize) -> Option<usize> {
        self.nodes.iter().position(|&n| n == node)
    }

    /// Mean and variance of one node.
    pub fn marginal(&self, node: usize) -> Option<(f64, f64)> {
        let k = self.position(node)?;
        Some((self.mean[k], self.cov[(k, k)]))
    }
}

/// Joint Gaussian of the continuous nodes given all discrete states, and the
/// prior probability of those states.
///
/// `states[i]` is the state of node `i`; entries for continuous nodes are
/// ignored. The joint is built by forward substitution in topological order,
/// which yields mean `(I−B)⁻¹m` and covariance `(I−B)⁻¹D(I−B)⁻ᵀ`.
pub fn joint_gaussian_for_config(net: &HybridNetwork, states: &[usize]) -> (MultivariateGaussian, f64) {
    let order = net.topological_order().expect("network must be acyclic");
    let layout = Layout::new(net, &order);
    let (mean, cov) = layout.joint(net, states);
    let prior = layout.ln_prior(net, states).exp();
    (MultivariateGaussian { nodes: layout.continuous.clone(), mean, cov }, prior)
}

/// Conditions `mvn` on observed values. Returns the Gaussian over the remaining
/// nodes and the density of the observations under their marginal.
pub fn condition_gaussian(
    mvn: &MultivariateGaussian,
    observed: &[(usize, f64)],
) -> Result<(MultivariateGaussian, f64), OracleError> {
    let obs: Vec<usize> = observed
        .iter()
        .map(|(n, _)| mvn.position(*n).expect("observed node in joint"))
        .collect();
    let values: Vec<f64> = observed.iter().map(|(_, v)| *v).collect();
    let free: Vec<usize> = (0..mvn.dim()).filter(|k| !obs.contains(k)).collect();
    let c = condition(&mvn.mean, &mvn.cov, &obs, &values, &free, true)?;
    let cov = c.cov.expect("full covariance requested");
    Ok((
        MultivariateGaussian { nodes: free.iter().map(|&k| mvn.nodes[k]).collect(), mean: c.mean, cov },
        c.ln_likelihood.exp(),
    ))
}

struct Conditioned {
    mean: DVector<f64>,
    /// Full covariance, or only the diagonal in `var`.
    cov: Option<DMatrix<f64>>,
    var: Vec<f64>,
    ln_likelihood: f64,
}

fn condition(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    obs: &[usize],
    values: &[f64],
    free: &[usize],
    full: bool,
) -> Result<Conditioned, OracleError> {
    let e = obs.len();
    let f = free.len();
    if e == 0 {
        let m = DVector::from_iterator(f, free.iter().map(|&k| mean[k]));
        let sub = DMatrix::from_fn(f, f, |r, c| cov[(free[r], free[c])]);
        let var = (0..f).map(|r| sub[(r, r)]).collect();
        return Ok(Conditioned { mean: m, cov: full.then_some(sub), var, ln_likelihood: 0.0 });
    }
    let see = DMatrix::from_fn(e, e, |r, c| cov[(obs[r], obs[c])]);
    let chol = see.cholesky().ok_or(OracleError::Singular)?;
    let resid = DVector::from_iterator(e, (0..e).map(|r| values[r] - mean[obs[r]]));
    let alpha = chol.solve(&resid);
    let ln_det: f64 = chol.l_dirty().diagonal().iter().take(e).map(|d| d.ln()).sum::<f64>() * 2.0;
    let quad = resid.dot(&alpha);
    let ln_likelihood = -0.5 * (quad + ln_det + e as f64 * (2.0 * std::f64::consts::PI).ln());

    let sfe = DMatrix::from_fn(f, e, |r, c| cov[(free[r], obs[c])]);
    let m = DVector::from_iterator(f, free.iter().map(|&k| mean[k])) + &sfe * alpha;
    // K = Σ_fe Σ_ee⁻¹, so the conditional covariance is Σ_ff − K Σ_ef.
    let k = chol.solve(&sfe.transpose()).transpose();
    let (cov_out, var) = if full {
        let sff = DMatrix::from_fn(f, f, |r, c| cov[(free[r], free[c])]);
        let c = sff - &k * sfe.transpose();
        let var = (0..f).map(|r| c[(r, r)]).collect();
        (Some(c), var)
    } else {
        let var = (0..f)
            .map(|r| cov[(free[r], free[r])] - k.row(r).dot(&sfe.row(r)))
            .collect();
        (None, var)
    };
    Ok(Conditioned { mean: m, cov: cov_out, var, ln_likelihood })
}

/// Network structure flattened for repeated per-configuration work.
struct Layout {
    /// Continuous nodes in topological order.
    continuous: Vec<usize>,
    /// Position of each node in `continuous`.
    slot: Vec<Option<usize>>,
    discrete: Vec<usize>,
}

impl Layout {
    fn new(net: &HybridNetwork, order: &[usize]) -> Self {
        let continuous: Vec<usize> = order.iter().copied().filter(|&i| !net.is_discrete(i)).collect();
        let mut slot = vec![None; net.len()];
        for (k, &i) in continuous.iter().enumerate() {
            slot[i] = Some(k);
        }
        let discrete = order.iter().copied().filter(|&i| net.is_discrete(i)).collect();
        Self { continuous, slot, discrete }
    }

    fn parent_states(net: &HybridNetwork, node: usize, states: &[usize]) -> usize {
        let ps: Vec<usize> = net.discrete_parents(node).iter().map(|&p| states[p]).collect();
        config_index(&net.parent_cardinalities(node), &ps)
    }

    fn ln_prior(&self, net: &HybridNetwork, states: &[usize]) -> f64 {
        self.discrete
            .iter()
            .map(|&i| {
                let cpd = net.discrete_cpd(i).expect("discrete node");
                cpd.table[Self::parent_states(net, i, states)][states[i]].ln()
            })
            .sum()
    }

    fn joint(&self, net: &HybridNetwork, states: &[usize]) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.continuous.len();
        let mut mean = DVector::zeros(d);
        let mut cov = DMatrix::zeros(d, d);
        for (k, &i) in self.continuous.iter().enumerate() {
            let p = &net.clg_cpd(i).expect("continuous node").params[Self::parent_states(net, i, states)];
            let parents: Vec<(usize, f64)> = net
                .continuous_parents(i)
                .iter()
                .zip(&p.coeffs)
                .map(|(&u, &b)| (self.slot[u].expect("continuous parent"), b))
                .collect();
            mean[k] = p.intercept + parents.iter().map(|&(u, b)| b * mean[u]).sum::<f64>();
            // Cov(X_k, X_j) = Σ_u b_u Cov(X_u, X_j) for every earlier j.
            for j in 0..k {
                let c: f64 = parents.iter().map(|&(u, b)| b * cov[(u, j)]).sum();
                cov[(k, j)] = c;
                cov[(j, k)] = c;
            }
            cov[(k, k)] = p.variance() + parents.iter().map(|&(u, b)| b * cov[(u, k)]).sum::<f64>();
        }
        (mean, cov)
    }
}

/// Exact posterior marginals with the default configuration cap.
pub fn exact_posteriors(net: &HybridNetwork, evidence: &Evidence) -> Result<Beliefs, OracleError> {
    exact_posteriors_with(net, evidence, &OracleOptions::default())
}

/// Number of configurations the oracle would enumerate: the product of the
/// cardinalities of the unobserved discrete nodes.
pub fn enumerated_configurations(net: &HybridNetwork, evidence: &Evidence) -> u128 {
    net.discrete_nodes()
        .into_iter()
        .filter(|&i| !evidence.contains(net.id(i)))
        .map(|i| net.states(i).unwrap_or(1) as u128)
        .fold(1u128, |a, s| a.saturating_mul(s))
}

struct ConfigTerm {
    ln_w: f64,
    /// Interleaved (mean, var) for each unobserved continuous node.
    moments: Vec<f64>,
}

pub fn exact_posteriors_with(
    net: &HybridNetwork,
    evidence: &Evidence,
    opts: &OracleOptions,
) -> Result<Beliefs, OracleError> {
    net.checked()?;
    let bound = evidence.bind(net)?;
    let configs = enumerated_configurations(net, evidence);
    if configs > opts.max_configs {
        return Err(OracleError::Infeasible { configs, cap: opts.max_configs });
    }
    let total = configs as usize;
    let start = Instant::now();
    let order = net.topological_order()?;
    let layout = Layout::new(net, &order);

    let free_discrete: Vec<usize> = layout.discrete.iter().copied().filter(|&i| !bound.is_observed(i)).collect();
    let free_cards: Vec<usize> = free_discrete.iter().map(|&i| net.states(i).unwrap_or(1)).collect();
    let obs: Vec<usize> = (0..layout.continuous.len())
        .filter(|&k| bound.is_observed(layout.continuous[k]))
        .collect();
    let values: Vec<f64> = obs.iter().map(|&k| bound.value(layout.continuous[k]).unwrap_or(0.0)).collect();
    let free: Vec<usize> = (0..layout.continuous.len()).filter(|k| !obs.contains(k)).collect();

    let mut base = vec![0usize; net.len()];
    for i in 0..net.len() {
        if let Some(s) = bound.state(i) {
            base[i] = s;
        }
    }

    let term = |c: usize| -> Result<Option<ConfigTerm>, OracleError> {
        let mut states = base.clone();
        let mut rest = c;
        for (&i, &card) in free_discrete.iter().zip(&free_cards).rev() {
            states[i] = rest % card;
            rest /= card;
        }
        let ln_prior = layout.ln_prior(net, &states);
        if ln_prior == f64::NEG_INFINITY {
            return Ok(None);
        }
        let (mean, cov) = layout.joint(net, &states);
        let cond = condition(&mean, &cov, &obs, &values, &free, false)?;
        let mut moments = Vec::with_capacity(2 * free.len());
        for (m, v) in cond.mean.iter().zip(&cond.var) {
            moments.push(*m);
            moments.push(v.max(0.0));
        }
        Ok(Some(ConfigTerm { ln_w: ln_prior + cond.ln_likelihood, moments }))
    };

    const CHUNK: usize = 4096;
    let chunks: Vec<Result<Vec<Option<ConfigTerm>>, OracleError>> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|ch| {
            if let Some(budget) = opts.deadline {
                if start.elapsed() > budget {
                    return Err(OracleError::TimedOut { budget, done: ch * CHUNK, total });
                }
            }
            (ch * CHUNK..((ch + 1) * CHUNK).min(total)).map(term).collect()
        })
        .collect();
    let mut terms = Vec::with_capacity(total);
    for ch in chunks {
        terms.extend(ch?);
    }

    let max_ln = terms.iter().flatten().map(|t| t.ln_w).fold(f64::NEG_INFINITY, f64::max);
    if !max_ln.is_finite() {
        return Err(OracleError::ZeroLikelihood);
    }
    let weights: Vec<f64> = terms
        .iter()
        .map(|t| t.as_ref().map_or(0.0, |t| (t.ln_w - max_ln).exp()))
        .collect();
    let norm: f64 = weights.iter().sum();

    let mut beliefs = Beliefs::new();
    for (fi, &i) in free_discrete.iter().enumerate() {
        let card = free_cards[fi];
        let stride: usize = free_cards[fi + 1..].iter().product();
        let mut p = vec![0.0; card];
        for (c, w) in weights.iter().enumerate() {
            p[(c / stride) % card] += w / norm;
        }
        beliefs.insert(net.id(i).to_owned(), Belief::Discrete(p));
    }
    for (fk, &k) in free.iter().enumerate() {
        let comps: Vec<GaussianComponent> = terms
            .iter()
            .zip(&weights)
            .filter_map(|(t, &w)| {
                let t = t.as_ref()?;
                (w > 0.0).then(|| GaussianComponent::new(w / norm, t.moments[2 * fk], t.moments[2 * fk + 1]))
            })
            .collect();
        beliefs.insert(net.id(layout.continuous[k]).to_owned(), Belief::Continuous(GaussianMixture::new(comps)));
    }
    for i in 0..net.len() {
        match bound.get(i) {
            Some(Observation::State(s)) => {
                beliefs.insert(net.id(i).to_owned(), Belief::indicator(net.states(i).unwrap_or(s + 1), s));
            }
            Some(Observation::Value(v)) => {
                beliefs.insert(net.id(i).to_owned(), Belief::point(v));
            }
            None => {}
        }
    }
    Ok(beliefs)
}
