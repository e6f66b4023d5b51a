//! Hybrid message passing with Gaussian mixture reduction (HMP-GMR).
//!
//! [`run_hmp_gmr`] sweeps the nodes in topological order. For each node it
//! computes the pi function, the lambda function, the outgoing pi messages and
//! the outgoing lambda messages, checking the time budget after each step.
//! After a sweep every belief is recomputed and compared with the previous one.

mod potential;
mod propagate;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use potential::{ContinuousPotential, MessageBoard, Potential};
pub use propagate::{Propagator, StepError};

use crate::belief::{Belief, Beliefs};
use crate::clock::{ClockKind, Stopwatch};
use crate::mixture::GaussianMixture;
use crate::network::{config_states, BoundEvidence, Evidence, EvidenceError, HybridNetwork, NetworkError, Observation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub max_time: Duration,
    pub max_iteration: usize,
    pub max_nc: usize,
    pub max_prcs: f64,
    /// How elapsed time is measured; thread CPU time isolates concurrent runs.
    #[serde(default)]
    pub clock: ClockKind,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            max_time: Duration::from_secs(20),
            max_iteration: 100,
            max_nc: 4,
            max_prcs: 1e-3,
            clock: ClockKind::Wall,
        }
    }
}

impl RunSettings {
    pub fn new(max_time: Duration, max_iteration: usize, max_nc: usize) -> Self {
        Self { max_time, max_iteration, max_nc, ..Self::default() }
    }

    pub fn with_max_prcs(mut self, max_prcs: f64) -> Self {
        self.max_prcs = max_prcs;
        self
    }

    pub fn with_clock(mut self, clock: ClockKind) -> Self {
        self.clock = clock;
        self
    }

    /// Rejects any budget, cap or threshold that is not positive.
    pub fn check(&self) -> Result<(), InferenceError> {
        if self.max_time.is_zero() || self.max_iteration == 0 || self.max_nc == 0 || !(self.max_prcs > 0.0) {
            return Err(InferenceError::Settings(
                "max_time, max_iteration, max_nc and max_prcs must all be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIterations,
    OutOfTime,
    Diverged,
}

impl Status {
    pub const ALL: [Status; 4] = [Status::Converged, Status::MaxIterations, Status::OutOfTime, Status::Diverged];

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIterations => "max_iterations",
            Status::OutOfTime => "out_of_time",
            Status::Diverged => "diverged",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub beliefs: Beliefs,
    pub status: Status,
    /// Sweeps started, including one cut short by the time budget.
    pub iterations: usize,
    pub elapsed: Duration,
    /// Largest belief change after each completed sweep (`+∞` for the first).
    pub max_diff_trace: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
    #[error("invalid settings: {0}")]
    Settings(String),
    #[error("message schedule: {0}")]
    Schedule(StepError),
}

/// Distance between successive beliefs of one node, used for the convergence test.
///
/// Discrete: largest absolute probability change. Continuous: the larger of
/// `|Δmean|/(1+|mean|)` and `|Δvar|/(1+var)` on moment summaries, scaled by the
/// previous belief. Beliefs of different kinds are infinitely far apart.
pub fn belief_difference(prev: &Belief, cur: &Belief) -> f64 {
    match (prev, cur) {
        (Belief::Discrete(p), Belief::Discrete(q)) if p.len() == q.len() => {
            p.iter().zip(q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        }
        (Belief::Discrete(_), _) | (_, Belief::Discrete(_)) => f64::INFINITY,
        _ => match (prev.moments(), cur.moments()) {
            (Some((m0, v0)), Some((m1, v1))) => {
                let dm = (m1 - m0).abs() / (1.0 + m0.abs());
                let dv = (v1 - v0).abs() / (1.0 + v0);
                let d = dm.max(dv);
                if d.is_nan() {
                    f64::INFINITY
                } else {
                    d
                }
            }
            _ => f64::INFINITY,
        },
    }
}

enum Interrupt {
    OutOfTime,
    Underflow,
}

/// Runs HMP-GMR until convergence, the iteration cap, the time budget, or a
/// numeric underflow. Beliefs are returned for every node under every status.
pub fn run_hmp_gmr(net: &HybridNetwork, evidence: &Evidence, settings: &RunSettings) -> Result<RunResult, InferenceError> {
    settings.check()?;
    net.checked()?;
    let bound = evidence.bind(net)?;
    let sw = Stopwatch::start(settings.clock);
    let order = net.topological_order()?;
    let prop = Propagator::new(net, &bound, settings.max_nc);
    let mut board = prop.initial_board();
    let mut prev = initial_beliefs(net, &bound, &order);
    let mut trace = Vec::new();

    let finish = |beliefs: Vec<Belief>, status, iterations, trace| RunResult {
        beliefs: keyed(net, beliefs),
        status,
        iterations,
        elapsed: sw.elapsed(),
        max_diff_trace: trace,
    };

    for it in 1..=settings.max_iteration {
        match sweep(&prop, &mut board, &order, &bound, &sw, settings.max_time) {
            Ok(()) => {}
            Err(Interrupt::Underflow) => return Ok(finish(prev, Status::Diverged, it, trace)),
            Err(Interrupt::OutOfTime) => {
                let beliefs = (0..net.len())
                    .map(|i| prop.belief(&board, i).unwrap_or_else(|_| prev[i].clone()))
                    .collect();
                return Ok(finish(beliefs, Status::OutOfTime, it, trace));
            }
        }
        let cur: Vec<Belief> = match (0..net.len()).map(|i| prop.belief(&board, i)).collect() {
            Ok(b) => b,
            Err(StepError::Underflow(_)) => return Ok(finish(prev, Status::Diverged, it, trace)),
            Err(e) => return Err(InferenceError::Schedule(e)),
        };
        let diff = if it == 1 {
            f64::INFINITY
        } else {
            prev.iter().zip(&cur).map(|(a, b)| belief_difference(a, b)).fold(0.0, f64::max)
        };
        trace.push(diff);
        prev = cur;
        if diff < settings.max_prcs {
            return Ok(finish(prev, Status::Converged, it, trace));
        }
        if sw.elapsed() > settings.max_time {
            return Ok(finish(prev, Status::OutOfTime, it, trace));
        }
    }
    Ok(finish(prev, Status::MaxIterations, settings.max_iteration, trace))
}

/// One pass over every node. A result finished after the deadline is discarded.
fn sweep(
    prop: &Propagator,
    board: &mut MessageBoard,
    order: &[usize],
    evidence: &BoundEvidence,
    sw: &Stopwatch,
    max_time: Duration,
) -> Result<(), Interrupt> {
    let net = prop.network();
    let late = || sw.elapsed() > max_time;
    let lift = |r: Result<Potential, StepError>| match r {
        Ok(p) => Ok(p),
        Err(StepError::Underflow(_)) => Err(Interrupt::Underflow),
        Err(e @ StepError::MissingMessage { .. }) => panic!("topological sweep broke the schedule: {e}"),
    };
    for &node in order {
        let pi = lift(prop.pi_function(board, node))?;
        if late() {
            return Err(Interrupt::OutOfTime);
        }
        board.set_pi_function(node, pi);

        let lambda = lift(prop.lambda_function(board, node))?;
        if late() {
            return Err(Interrupt::OutOfTime);
        }
        board.set_lambda_function(node, lambda);

        for &child in net.children(node) {
            let m = lift(prop.pi_message(board, node, child))?;
            if late() {
                return Err(Interrupt::OutOfTime);
            }
            board.set_pi_message(node, child, m);
        }

        for &parent in net.parents(node) {
            // An observed parent ignores what its children say about it.
            if evidence.is_observed(parent) {
                continue;
            }
            let m = lift(prop.lambda_message(board, node, parent))?;
            if late() {
                return Err(Interrupt::OutOfTime);
            }
            board.set_lambda_message(node, parent, m);
        }
    }
    Ok(())
}

fn keyed(net: &HybridNetwork, beliefs: Vec<Belief>) -> Beliefs {
    beliefs.into_iter().enumerate().map(|(i, b)| (net.id(i).to_owned(), b)).collect()
}

/// Cheap starting beliefs used when a run stops before its first sweep
/// completes: one forward pass treating parents as independent, with
/// continuous nodes summarised by a single moment-matched Gaussian.
fn initial_beliefs(net: &HybridNetwork, evidence: &BoundEvidence, order: &[usize]) -> Vec<Belief> {
    let mut beliefs: Vec<Option<Belief>> = vec![None; net.len()];
    for &i in order {
        let b = match evidence.get(i) {
            Some(Observation::State(s)) => Belief::indicator(net.states(i).unwrap_or(s + 1), s),
            Some(Observation::Value(v)) => Belief::point(v),
            None => forward_belief(net, i, &beliefs),
        };
        beliefs[i] = Some(b);
    }
    beliefs.into_iter().map(|b| b.expect("every node visited")).collect()
}

fn forward_belief(net: &HybridNetwork, i: usize, beliefs: &[Option<Belief>]) -> Belief {
    let get = |p: usize| beliefs[p].as_ref().expect("parent precedes child");
    let dparents = net.discrete_parents(i);
    let cards = net.parent_cardinalities(i);
    let config_weight = |cfg: usize| -> f64 {
        config_states(&cards, cfg)
            .iter()
            .zip(&dparents)
            .map(|(&s, &p)| get(p).as_discrete().map_or(0.0, |q| q[s]))
            .product()
    };
    let configs = net.config_count(i);
    if let Some(cpd) = net.discrete_cpd(i) {
        let mut out = vec![0.0; cpd.states];
        for cfg in 0..configs {
            let w = config_weight(cfg);
            for (o, p) in out.iter_mut().zip(&cpd.table[cfg]) {
                *o += w * p;
            }
        }
        let total: f64 = out.iter().sum();
        if total > 0.0 {
            out.iter_mut().for_each(|x| *x /= total);
        } else {
            out = vec![1.0 / cpd.states as f64; cpd.states];
        }
        return Belief::Discrete(out);
    }
    let clg = net.clg_cpd(i).expect("continuous node");
    let cparents: Vec<(f64, f64)> = net
        .continuous_parents(i)
        .into_iter()
        .map(|p| get(p).moments().unwrap_or((0.0, 1.0)))
        .collect();
    let comps: GaussianMixture = (0..configs)
        .map(|cfg| {
            let p = &clg.params[cfg];
            let mean = p.intercept + p.coeffs.iter().zip(&cparents).map(|(b, (m, _))| b * m).sum::<f64>();
            let var = p.variance() + p.coeffs.iter().zip(&cparents).map(|(b, (_, v))| b * b * v).sum::<f64>();
            crate::mixture::GaussianComponent::new(config_weight(cfg), mean, var)
        })
        .collect();
    match comps.moment_matched() {
        Ok(c) => Belief::gaussian(c.mean, c.var),
        Err(_) => Belief::gaussian(0.0, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::{edge, two_node};
    use crate::network::{ClgParams, Node};

    #[test]
    fn belief_difference_examples() {
        let g = Belief::gaussian;
        assert_eq!(belief_difference(&g(0.3, 1.2), &g(0.3, 1.2)), 0.0);
        let d = belief_difference(&Belief::Discrete(vec![0.5, 0.5]), &Belief::Discrete(vec![0.4, 0.6]));
        assert!((d - 0.1).abs() < 1e-15);
        assert!((belief_difference(&g(0.0, 1.0), &g(0.2, 1.0)) - 0.2).abs() < 1e-15);
        assert_eq!(belief_difference(&Belief::Discrete(vec![1.0]), &g(0.0, 1.0)), f64::INFINITY);
    }

    #[test]
    fn two_node_posterior_converges() {
        let net = two_node();
        let ev = Evidence::from_json(r#"{"X": 1.0}"#).unwrap();
        let r = run_hmp_gmr(&net, &ev, &RunSettings::default()).unwrap();
        assert_eq!(r.status, Status::Converged);
        let p = r.beliefs["A"].as_discrete().unwrap();
        assert!((p[1] - 0.8807970779778824).abs() < 1e-12);
        assert_eq!(r.beliefs["X"], Belief::point(1.0));
        assert_eq!(r.max_diff_trace[0], f64::INFINITY);
    }

    #[test]
    fn single_sweep_hits_iteration_cap() {
        let net = two_node();
        let settings = RunSettings { max_iteration: 1, ..RunSettings::default() };
        let r = run_hmp_gmr(&net, &Evidence::new(), &settings).unwrap();
        assert_eq!(r.status, Status::MaxIterations);
        assert_eq!(r.iterations, 1);
        assert!(r.beliefs.values().all(Belief::is_normalized));
    }

    #[test]
    fn impossible_evidence_diverges_with_prior_beliefs() {
        let net = HybridNetwork::new(
            "narrow",
            vec![
                Node::discrete("A", 2, vec![vec![0.5, 0.5]]),
                Node::continuous("X", vec![ClgParams::new(0.0, vec![], 1e-3); 2]),
            ],
            vec![edge("A", "X")],
        );
        let ev = Evidence::from_json(r#"{"X": 1000.0}"#).unwrap();
        let r = run_hmp_gmr(&net, &ev, &RunSettings::default()).unwrap();
        assert_eq!(r.status, Status::Diverged);
        assert_eq!(r.beliefs["A"], Belief::Discrete(vec![0.5, 0.5]));
        assert!(r.beliefs.values().all(Belief::is_normalized));
    }

    #[test]
    fn nonpositive_settings_are_rejected() {
        let s = RunSettings { max_nc: 0, ..RunSettings::default() };
        assert!(matches!(run_hmp_gmr(&two_node(), &Evidence::new(), &s), Err(InferenceError::Settings(_))));
    }

    #[test]
    fn status_serializes_snake_case() {
        assert_eq!(serde_json::to_string(&Status::MaxIterations).unwrap(), "\"max_iterations\"");
        for s in Status::ALL {
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{s}\""));
        }
    }
}
