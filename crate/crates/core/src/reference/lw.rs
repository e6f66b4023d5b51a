//! Likelihood weighting.
//!
//! Samples are drawn forward in topological order with evidence clamped; each
//! sample is weighted by the likelihood of the evidence given its sampled
//! parents. Continuous posteriors are a weighted Gaussian kernel density
//! estimate, stored as a mixture and reduced to a fixed number of components.

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::belief::{Belief, Beliefs};
use crate::clock::{ClockKind, Stopwatch};
use crate::mixture::{normal_ln_pdf, GaussianComponent, GaussianMixture};
use crate::network::{config_index, Evidence, EvidenceError, HybridNetwork, NetworkError, Observation};

/// Components kept in each continuous posterior.
pub const LW_MAX_COMPONENTS: usize = 64;

/// Samples drawn between clock reads in time-budget mode.
const BATCH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleBudget {
    Samples(usize),
    /// Time spent drawing samples. Summarizing them afterwards is extra;
    /// [`LwOutput::elapsed`] reports both.
    Time(Duration),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LwSettings {
    pub budget: SampleBudget,
    pub seed: u64,
    pub clock: ClockKind,
    pub max_components: usize,
}

impl LwSettings {
    pub fn new(budget: SampleBudget, seed: u64) -> Self {
        Self { budget, seed, clock: ClockKind::Wall, max_components: LW_MAX_COMPONENTS }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LwOutput {
    pub beliefs: Beliefs,
    /// Number of samples actually drawn.
    pub samples: usize,
    /// Every sample had zero weight; beliefs fall back to uniform weighting.
    pub degenerate: bool,
    pub elapsed: Duration,
}

#[derive(Debug, Error)]
pub enum LwError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
    #[error("sample budget must be positive")]
    EmptyBudget,
}

pub fn likelihood_weighting(
    net: &HybridNetwork,
    evidence: &Evidence,
    budget: SampleBudget,
    seed: u64,
) -> Result<LwOutput, LwError> {
    likelihood_weighting_with(net, evidence, &LwSettings::new(budget, seed))
}

struct Plan {
    order: Vec<usize>,
    dparents: Vec<Vec<usize>>,
    cparents: Vec<Vec<usize>>,
    cards: Vec<Vec<usize>>,
}

pub fn likelihood_weighting_with(
    net: &HybridNetwork,
    evidence: &Evidence,
    settings: &LwSettings,
) -> Result<LwOutput, LwError> {
    net.checked()?;
    let bound = evidence.bind(net)?;
    match settings.budget {
        SampleBudget::Samples(0) => return Err(LwError::EmptyBudget),
        SampleBudget::Time(d) if d.is_zero() => return Err(LwError::EmptyBudget),
        _ => {}
    }
    let sw = Stopwatch::start(settings.clock);
    let plan = Plan {
        order: net.topological_order()?,
        dparents: (0..net.len()).map(|i| net.discrete_parents(i)).collect(),
        cparents: (0..net.len()).map(|i| net.continuous_parents(i)).collect(),
        cards: (0..net.len()).map(|i| net.parent_cardinalities(i)).collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);

    // Column-major sample storage: one value vector per node.
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); net.len()];
    let mut ln_w: Vec<f64> = Vec::new();
    let mut row = vec![0.0; net.len()];
    let mut draw = |rng: &mut ChaCha8Rng, values: &mut Vec<Vec<f64>>, ln_w: &mut Vec<f64>| {
        let w = sample_once(net, &plan, &bound, rng, &mut row);
        for (col, &v) in values.iter_mut().zip(row.iter()) {
            col.push(v);
        }
        ln_w.push(w);
    };
    match settings.budget {
        SampleBudget::Samples(n) => {
            for _ in 0..n {
                draw(&mut rng, &mut values, &mut ln_w);
            }
        }
        SampleBudget::Time(limit) => {
            while ln_w.is_empty() || sw.elapsed() < limit {
                for _ in 0..BATCH {
                    draw(&mut rng, &mut values, &mut ln_w);
                }
            }
        }
    }

    let max_ln = ln_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let degenerate = !max_ln.is_finite();
    let weights: Vec<f64> = if degenerate {
        vec![1.0; ln_w.len()]
    } else {
        ln_w.iter().map(|l| (l - max_ln).exp()).collect()
    };
    let total: f64 = weights.iter().sum();

    let mut beliefs = Beliefs::new();
    for i in 0..net.len() {
        let id = net.id(i).to_owned();
        let b = match bound.get(i) {
            Some(Observation::State(s)) => Belief::indicator(net.states(i).unwrap_or(s + 1), s),
            Some(Observation::Value(v)) => Belief::point(v),
            None => match net.states(i) {
                Some(states) => {
                    let mut p = vec![0.0; states];
                    for (v, w) in values[i].iter().zip(&weights) {
                        p[*v as usize] += w / total;
                    }
                    Belief::Discrete(p)
                }
                None => Belief::Continuous(kde_mixture(&values[i], &weights, settings.max_components)),
            },
        };
        beliefs.insert(id, b);
    }
    Ok(LwOutput { beliefs, samples: ln_w.len(), degenerate, elapsed: sw.elapsed() })
}

/// One unweighted draw from the joint prior; discrete states are returned as
/// floats. Entry `i` is the value of node `i`.
pub fn forward_sample(net: &HybridNetwork, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, LwError> {
    let plan = Plan {
        order: net.topological_order()?,
        dparents: (0..net.len()).map(|i| net.discrete_parents(i)).collect(),
        cparents: (0..net.len()).map(|i| net.continuous_parents(i)).collect(),
        cards: (0..net.len()).map(|i| net.parent_cardinalities(i)).collect(),
    };
    let none = Evidence::new().bind(net)?;
    let mut row = vec![0.0; net.len()];
    sample_once(net, &plan, &none, rng, &mut row);
    Ok(row)
}

/// Draws one sample into `row` (discrete states stored as floats) and returns
/// its log weight.
fn sample_once(
    net: &HybridNetwork,
    plan: &Plan,
    evidence: &crate::network::BoundEvidence,
    rng: &mut ChaCha8Rng,
    row: &mut [f64],
) -> f64 {
    let mut ln_w = 0.0;
    for &i in &plan.order {
        let ps: Vec<usize> = plan.dparents[i].iter().map(|&p| row[p] as usize).collect();
        let cfg = config_index(&plan.cards[i], &ps);
        if let Some(cpd) = net.discrete_cpd(i) {
            let probs = &cpd.table[cfg];
            match evidence.state(i) {
                Some(s) => {
                    ln_w += probs[s].ln();
                    row[i] = s as f64;
                }
                None => {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut pick = probs.len() - 1;
                    for (s, p) in probs.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            pick = s;
                            break;
                        }
                    }
                    row[i] = pick as f64;
                }
            }
        } else {
            let p = &net.clg_cpd(i).expect("continuous node").params[cfg];
            let mean = p.intercept + plan.cparents[i].iter().zip(&p.coeffs).map(|(&u, b)| b * row[u]).sum::<f64>();
            match evidence.value(i) {
                Some(v) => {
                    ln_w += normal_ln_pdf(v, mean, p.variance());
                    row[i] = v;
                }
                None => {
                    let z: f64 = rng.sample(StandardNormal);
                    row[i] = mean + p.sigma * z;
                }
            }
        }
    }
    ln_w
}

/// Weighted Gaussian KDE with rule-of-thumb bandwidth `1.06·σ̂·n_eff^(−1/5)`,
/// returned as a normalized mixture of at most `max_nc` components.
///
/// The sorted samples are cut into `max_nc` contiguous equal-count bins and
/// the kernels of each bin are moment matched, so the result keeps the KDE's
/// mean and variance exactly at `O(n log n)` cost.
pub fn kde_mixture(xs: &[f64], ws: &[f64], max_nc: usize) -> GaussianMixture {
    let total: f64 = ws.iter().sum();
    let mut pts: Vec<(f64, f64)> = xs.iter().zip(ws).filter(|(_, w)| **w > 0.0).map(|(x, w)| (*x, w / total)).collect();
    let mean: f64 = pts.iter().map(|(x, w)| w * x).sum();
    let var: f64 = pts.iter().map(|(x, w)| w * (x - mean) * (x - mean)).sum();
    let sq: f64 = pts.iter().map(|(_, w)| w * w).sum();
    let n_eff = 1.0 / sq;
    let h = 1.06 * var.sqrt() * n_eff.powf(-0.2);
    // A single effective sample has no spread; keep the kernel proper.
    let h2 = (h * h).max(1e-12 * (1.0 + mean * mean));

    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let per_bin = pts.len().div_ceil(max_nc.max(1)).max(1);
    let binned: GaussianMixture = pts
        .chunks(per_bin)
        .map(|chunk| {
            let w: f64 = chunk.iter().map(|(_, w)| w).sum();
            let m = chunk.iter().map(|(x, cw)| cw * x).sum::<f64>() / w;
            let v = chunk.iter().map(|(x, cw)| cw * (x - m) * (x - m)).sum::<f64>() / w;
            GaussianComponent::new(w, m, v + h2)
        })
        .collect();
    binned
        .normalized()
        .expect("kernel components have positive variance and weight")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::two_node;

    #[test]
    fn posterior_matches_hand_value() {
        let ev = Evidence::from_json(r#"{"X": 1.0}"#).unwrap();
        let out = likelihood_weighting(&two_node(), &ev, SampleBudget::Samples(100_000), 7).unwrap();
        let p = out.beliefs["A"].as_discrete().unwrap();
        assert!((p[1] - 0.8808).abs() < 0.01, "{p:?}");
        assert_eq!(out.samples, 100_000);
        assert!(!out.degenerate);
    }

    #[test]
    fn no_evidence_gives_prior_marginals() {
        let out = likelihood_weighting(&two_node(), &Evidence::new(), SampleBudget::Samples(100_000), 1).unwrap();
        let p = out.beliefs["A"].as_discrete().unwrap();
        assert!((p[0] - 0.5).abs() < 0.02);
        let g = out.beliefs["X"].as_mixture().unwrap();
        assert!(g.len() <= LW_MAX_COMPONENTS && g.is_normalized());
        let (m, v) = g.moments().unwrap();
        assert!(m.abs() < 0.05 && (v - 2.0).abs() < 0.1, "{m} {v}");
    }

    #[test]
    fn same_seed_and_count_reproduce() {
        let ev = Evidence::from_json(r#"{"X": 0.3}"#).unwrap();
        let a = likelihood_weighting(&two_node(), &ev, SampleBudget::Samples(5000), 3).unwrap();
        let b = likelihood_weighting(&two_node(), &ev, SampleBudget::Samples(5000), 3).unwrap();
        assert_eq!(a.beliefs, b.beliefs);
    }

    #[test]
    fn time_budget_is_reproducible_at_its_realized_count() {
        let ev = Evidence::from_json(r#"{"X": 0.3}"#).unwrap();
        let t = likelihood_weighting(&two_node(), &ev, SampleBudget::Time(Duration::from_millis(20)), 5).unwrap();
        assert!(t.samples >= BATCH);
        let n = likelihood_weighting(&two_node(), &ev, SampleBudget::Samples(t.samples), 5).unwrap();
        assert_eq!(t.beliefs, n.beliefs);
    }

    #[test]
    fn impossible_evidence_is_flagged() {
        use crate::network::{ClgParams, HybridNetwork, Node};
        let net = HybridNetwork::new(
            "n",
            vec![
                Node::discrete("A", 2, vec![vec![1.0, 0.0]]),
                Node::continuous("X", vec![ClgParams::new(0.0, vec![], 1.0); 2]),
            ],
            vec![("A".into(), "X".into())],
        );
        let ev = Evidence::from_json(r#"{"A": 1}"#).unwrap();
        let out = likelihood_weighting(&net, &ev, SampleBudget::Samples(100), 0).unwrap();
        assert!(out.degenerate);
        assert!(out.beliefs["X"].is_normalized());
    }

    #[test]
    fn far_evidence_is_still_weighted() {
        use crate::network::{ClgParams, HybridNetwork, Node};
        let net = HybridNetwork::new(
            "n",
            vec![
                Node::continuous("X", vec![ClgParams::new(0.0, vec![], 1e-3)]),
                Node::continuous("Y", vec![ClgParams::new(0.0, vec![1.0], 1e-3)]),
            ],
            vec![("X".into(), "Y".into())],
        );
        let ev = Evidence::from_json(r#"{"Y": 1e3}"#).unwrap();
        let out = likelihood_weighting(&net, &ev, SampleBudget::Samples(100), 0).unwrap();
        assert!(!out.degenerate);
        assert!(out.beliefs["X"].is_normalized());
    }
}
