//! Pi/lambda functions and messages for the six node types of a conditional
//! linear Gaussian network, with every continuous result passed through the
//! reduction operator.
//!
//! Continuous messages are computed in closed form. A continuous node `X` with
//! discrete parents `A` and continuous parents `U` has, per configuration `a`,
//! `X = m(a) + Σ b_k(a) U_k + ε`, so pushing mixture components through the
//! linear map gives one component per (configuration, component combination).

use thiserror::Error;

use super::potential::{ContinuousPotential, MessageBoard, Potential};
use crate::belief::Belief;
use crate::mixture::{self, GaussianComponent, GaussianMixture, MixtureError, WEIGHT_FLUSH};
use crate::network::{config_states, BoundEvidence, HybridNetwork, Observation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("numeric underflow at node '{0}'")]
    Underflow(String),
    #[error("message {from} -> {to} has not been sent")]
    MissingMessage { from: String, to: String },
}

struct Layout {
    discrete_parents: Vec<usize>,
    continuous_parents: Vec<usize>,
    cards: Vec<usize>,
}

/// One term of a partially integrated conditional: `x = slope·u + offset + N(0, var)`.
#[derive(Debug, Clone, Copy)]
struct LinearForm {
    weight: f64,
    slope: f64,
    offset: f64,
    var: f64,
}

/// Computes potentials for one network, evidence set and component bound.
pub struct Propagator<'a> {
    net: &'a HybridNetwork,
    evidence: &'a BoundEvidence,
    max_nc: usize,
    layout: Vec<Layout>,
}

impl<'a> Propagator<'a> {
    pub fn new(net: &'a HybridNetwork, evidence: &'a BoundEvidence, max_nc: usize) -> Self {
        let layout = (0..net.len())
            .map(|i| Layout {
                discrete_parents: net.discrete_parents(i),
                continuous_parents: net.continuous_parents(i),
                cards: net.parent_cardinalities(i),
            })
            .collect();
        Self { net, evidence, max_nc: max_nc.max(1), layout }
    }

    pub fn network(&self) -> &HybridNetwork {
        self.net
    }

    pub fn max_nc(&self) -> usize {
        self.max_nc
    }

    /// Board with uninformative lambda messages on every edge and nothing else.
    pub fn initial_board(&self) -> MessageBoard {
        let mut board = MessageBoard::new(self.net.len());
        for child in 0..self.net.len() {
            for &parent in self.net.parents(child) {
                board.set_lambda_message(child, parent, self.uninformative(parent));
            }
        }
        board
    }

    fn uninformative(&self, node: usize) -> Potential {
        match self.net.states(node) {
            Some(s) => Potential::ones(s),
            None => Potential::flat(),
        }
    }

    fn underflow(&self, node: usize) -> StepError {
        StepError::Underflow(self.net.id(node).to_owned())
    }

    fn mix_err(&self, node: usize) -> impl Fn(MixtureError) -> StepError + '_ {
        move |_| self.underflow(node)
    }

    fn observed_potential(&self, node: usize) -> Option<Potential> {
        match self.evidence.get(node)? {
            Observation::State(s) => Some(Potential::indicator(self.net.states(node)?, s)),
            Observation::Value(v) => Some(Potential::point(v)),
        }
    }

    fn pi_msg<'b>(&self, board: &'b MessageBoard, parent: usize, child: usize) -> Result<&'b Potential, StepError> {
        board.pi_message(parent, child).ok_or_else(|| StepError::MissingMessage {
            from: self.net.id(parent).to_owned(),
            to: self.net.id(child).to_owned(),
        })
    }

    fn lambda_msg<'b>(&self, board: &'b MessageBoard, child: usize, parent: usize) -> Result<&'b Potential, StepError> {
        board.lambda_message(child, parent).ok_or_else(|| StepError::MissingMessage {
            from: self.net.id(child).to_owned(),
            to: self.net.id(parent).to_owned(),
        })
    }

    fn stored<'b>(&self, slot: Option<&'b Potential>, node: usize) -> Result<&'b Potential, StepError> {
        slot.ok_or_else(|| StepError::MissingMessage {
            from: self.net.id(node).to_owned(),
            to: self.net.id(node).to_owned(),
        })
    }

    fn discrete_vec<'b>(&self, p: &'b Potential, node: usize) -> Result<&'b [f64], StepError> {
        p.as_discrete().ok_or_else(|| self.underflow(node))
    }

    fn continuous<'b>(&self, p: &'b Potential, node: usize) -> Result<&'b ContinuousPotential, StepError> {
        p.as_continuous().ok_or_else(|| self.underflow(node))
    }

    /// Rejects all-zero or non-finite results.
    fn check(&self, node: usize, p: Potential) -> Result<Potential, StepError> {
        let ok = match &p {
            Potential::Discrete(v) => {
                v.iter().all(|x| x.is_finite() && *x >= 0.0) && v.iter().any(|x| *x > 0.0)
            }
            Potential::Continuous(ContinuousPotential::Mixture(g)) => {
                !g.is_empty() && g.is_finite() && g.total_weight() > 0.0 && g.total_weight().is_finite()
            }
            Potential::Continuous(ContinuousPotential::Point(v)) => v.is_finite(),
            Potential::Continuous(ContinuousPotential::Flat) => true,
        };
        if ok {
            Ok(p)
        } else {
            Err(self.underflow(node))
        }
    }

    fn reduce(&self, node: usize, g: &GaussianMixture) -> Result<GaussianMixture, StepError> {
        mixture::reduce(g, self.max_nc).map_err(self.mix_err(node))
    }

    /// Pi messages of the discrete parents of `node`, in declared order.
    fn discrete_pi_msgs<'b>(&self, board: &'b MessageBoard, node: usize) -> Result<Vec<&'b [f64]>, StepError> {
        self.layout[node]
            .discrete_parents
            .iter()
            .map(|&p| self.discrete_vec(self.pi_msg(board, p, node)?, node))
            .collect()
    }

    /// Pi messages of the continuous parents of `node` as component lists.
    fn continuous_pi_msgs(&self, board: &MessageBoard, node: usize) -> Result<Vec<Vec<GaussianComponent>>, StepError> {
        self.layout[node]
            .continuous_parents
            .iter()
            .map(|&p| {
                self.continuous(self.pi_msg(board, p, node)?, node)?
                    .components()
                    .ok_or_else(|| self.underflow(node))
            })
            .collect()
    }

    /// Visits each discrete parent configuration with its weight
    /// `Π_k π(A_k)[s_k]`. With `clamp = Some((k, a))` only configurations with
    /// parent `k` in state `a` are visited and that parent's factor is left out.
    fn for_each_config(
        &self,
        node: usize,
        msgs: &[&[f64]],
        clamp: Option<(usize, usize)>,
        mut f: impl FnMut(usize, f64) -> Result<(), StepError>,
    ) -> Result<(), StepError> {
        let cards = &self.layout[node].cards;
        let total: usize = cards.iter().product();
        for cfg in 0..total {
            let states = config_states(cards, cfg);
            let mut w = 1.0;
            let mut skip = false;
            for (k, (&s, m)) in states.iter().zip(msgs).enumerate() {
                match clamp {
                    Some((ck, ca)) if ck == k => {
                        if s != ca {
                            skip = true;
                            break;
                        }
                    }
                    _ => w *= m[s],
                }
            }
            if !skip && w > 0.0 {
                f(cfg, w)?;
            }
        }
        Ok(())
    }

    /// Components of `Σ_a w_a ∫ N(x; m + b·u, σ²) Π_k π(U_k) du` for a subset of
    /// configurations, before reduction.
    fn propagated_components(
        &self,
        node: usize,
        dmsgs: &[&[f64]],
        cmsgs: &[Vec<GaussianComponent>],
        clamp: Option<(usize, usize)>,
    ) -> Result<Vec<GaussianComponent>, StepError> {
        let clg = self.net.clg_cpd(node).ok_or_else(|| self.underflow(node))?;
        let mut out = Vec::new();
        self.for_each_config(node, dmsgs, clamp, |cfg, wa| {
            let p = &clg.params[cfg];
            for (w, m, v) in linear_combinations(&p.coeffs, cmsgs, None) {
                let weight = wa * w;
                if weight >= WEIGHT_FLUSH {
                    out.push(GaussianComponent::new(weight, p.intercept + m, p.variance() + v));
                }
            }
            Ok(())
        })?;
        Ok(out)
    }

    /// `π(node)`: the prior-evidence factor.
    pub fn pi_function(&self, board: &MessageBoard, node: usize) -> Result<Potential, StepError> {
        if let Some(p) = self.observed_potential(node) {
            return Ok(p);
        }
        let dmsgs = self.discrete_pi_msgs(board, node)?;
        if let Some(cpd) = self.net.discrete_cpd(node) {
            let mut out = vec![0.0; cpd.states];
            self.for_each_config(node, &dmsgs, None, |cfg, w| {
                for (o, p) in out.iter_mut().zip(&cpd.table[cfg]) {
                    *o += w * p;
                }
                Ok(())
            })?;
            return self.check(node, Potential::Discrete(out));
        }
        let cmsgs = self.continuous_pi_msgs(board, node)?;
        let comps = self.propagated_components(node, &dmsgs, &cmsgs, None)?;
        if comps.is_empty() {
            return Err(self.underflow(node));
        }
        let g = self.reduce(node, &GaussianMixture::new(comps))?;
        self.check(node, Potential::mixture(g))
    }

    /// `λ(node)`: the product of the lambda messages from all children.
    pub fn lambda_function(&self, board: &MessageBoard, node: usize) -> Result<Potential, StepError> {
        if let Some(p) = self.observed_potential(node) {
            return Ok(p);
        }
        let children = self.net.children(node);
        if let Some(states) = self.net.states(node) {
            let mut out = vec![1.0; states];
            for &c in children {
                let m = self.discrete_vec(self.lambda_msg(board, c, node)?, node)?;
                for (o, x) in out.iter_mut().zip(m) {
                    *o *= x;
                }
            }
            return self.check(node, Potential::Discrete(out));
        }
        let msgs: Vec<&ContinuousPotential> = children
            .iter()
            .map(|&c| self.continuous(self.lambda_msg(board, c, node)?, node))
            .collect::<Result<_, _>>()?;
        self.continuous_product(node, msgs.into_iter())
    }

    /// τ(Π messages), skipping flat factors; flat if every factor is flat.
    fn continuous_product<'b>(
        &self,
        node: usize,
        msgs: impl Iterator<Item = &'b ContinuousPotential>,
    ) -> Result<Potential, StepError> {
        let mut acc: Option<GaussianMixture> = None;
        for m in msgs {
            let g = match m {
                ContinuousPotential::Flat => continue,
                ContinuousPotential::Point(v) => GaussianMixture::single(1.0, *v, 0.0),
                ContinuousPotential::Mixture(g) => g.clone(),
            };
            acc = Some(match acc {
                None => g,
                Some(a) => mixture::product(&a, &g).map_err(self.mix_err(node))?,
            });
        }
        match acc {
            None => Ok(Potential::flat()),
            Some(g) if g.has_point() => self.check(node, Potential::mixture(g)),
            Some(g) => {
                let g = self.reduce(node, &g)?;
                self.check(node, Potential::mixture(g))
            }
        }
    }

    /// `π_child(node)`: what `node` tells `child` about itself.
    pub fn pi_message(&self, board: &MessageBoard, node: usize, child: usize) -> Result<Potential, StepError> {
        if let Some(p) = self.observed_potential(node) {
            return Ok(p);
        }
        let pi = self.stored(board.pi_function(node), node)?;
        let others = self.net.children(node).iter().copied().filter(|&c| c != child);
        if let Some(states) = self.net.states(node) {
            let mut out = self.discrete_vec(pi, node)?.to_vec();
            for c in others {
                let m = self.discrete_vec(self.lambda_msg(board, c, node)?, node)?;
                for (o, x) in out.iter_mut().zip(m) {
                    *o *= x;
                }
            }
            debug_assert_eq!(out.len(), states);
            return self.check(node, Potential::Discrete(normalize(out).ok_or_else(|| self.underflow(node))?));
        }
        let msgs: Vec<&ContinuousPotential> = others
            .map(|c| self.continuous(self.lambda_msg(board, c, node)?, node))
            .collect::<Result<_, _>>()?;
        let lambda_rest = self.continuous_product(node, msgs.into_iter())?;
        let pi = match self.continuous(pi, node)? {
            ContinuousPotential::Mixture(g) => g,
            ContinuousPotential::Point(v) => return Ok(Potential::point(*v)),
            ContinuousPotential::Flat => return Err(self.underflow(node)),
        };
        let g = match lambda_rest {
            Potential::Continuous(ContinuousPotential::Mixture(l)) => {
                let prod = mixture::product(&l, pi).map_err(self.mix_err(node))?;
                self.reduce(node, &prod)?
            }
            _ => pi.clone(),
        };
        let g = g.normalized().map_err(self.mix_err(node))?;
        self.check(node, Potential::mixture(g))
    }

    /// `λ_node(parent)`: what `node` tells `parent` about `parent`.
    pub fn lambda_message(&self, board: &MessageBoard, node: usize, parent: usize) -> Result<Potential, StepError> {
        let lambda = self.stored(board.lambda_function(node), node)?;
        let dmsgs_all = self.discrete_pi_msgs_except(board, node, parent)?;

        if let Some(cpd) = self.net.discrete_cpd(node) {
            // Discrete to discrete: Σ_b λ(b) Σ_{others} P(b | a, others) Π π(others).
            let lam = self.discrete_vec(lambda, node)?;
            let pos = self.position(node, parent, true);
            let states = self.net.states(parent).unwrap_or(0);
            let mut out = vec![0.0; states];
            for (a, o) in out.iter_mut().enumerate() {
                self.for_each_config(node, &dmsgs_all, Some((pos, a)), |cfg, w| {
                    *o += w * cpd.table[cfg].iter().zip(lam).map(|(p, l)| p * l).sum::<f64>();
                    Ok(())
                })?;
            }
            return self.check(node, Potential::Discrete(out));
        }

        let lam = self.continuous(lambda, node)?;
        if let Some(states) = self.net.states(parent) {
            if matches!(lam, ContinuousPotential::Flat) {
                return Ok(Potential::ones(states));
            }
            let pos = self.position(node, parent, true);
            let cmsgs = self.continuous_pi_msgs(board, node)?;
            let mut out = vec![0.0; states];
            for (a, o) in out.iter_mut().enumerate() {
                let comps = self.propagated_components(node, &dmsgs_all, &cmsgs, Some((pos, a)))?;
                if comps.is_empty() {
                    continue;
                }
                let g = self.reduce(node, &GaussianMixture::new(comps))?;
                *o = match lam {
                    ContinuousPotential::Point(x) => g.density(*x),
                    ContinuousPotential::Mixture(l) => mixture::overlap(&g, l),
                    ContinuousPotential::Flat => unreachable!(),
                };
            }
            return self.check(node, Potential::Discrete(out));
        }

        // Continuous to continuous parent.
        if matches!(lam, ContinuousPotential::Flat) {
            return Ok(Potential::flat());
        }
        let forms = self.linear_forms(board, node, parent, &dmsgs_all)?;
        let forms = reduce_forms(forms, self.max_nc);
        if forms.iter().all(|f| f.slope == 0.0) {
            return Ok(Potential::flat());
        }
        let lam_comps = lam.components().ok_or_else(|| self.underflow(node))?;
        let mut out = Vec::with_capacity(forms.len() * lam_comps.len());
        for f in forms.iter().filter(|f| f.slope != 0.0) {
            let b = f.slope;
            for l in &lam_comps {
                let w = f.weight * l.weight / b.abs();
                if w >= WEIGHT_FLUSH && w.is_finite() {
                    out.push(GaussianComponent::new(w, (l.mean - f.offset) / b, (f.var + l.var) / (b * b)));
                }
            }
        }
        if out.is_empty() {
            return Err(self.underflow(node));
        }
        let g = self.reduce(node, &GaussianMixture::new(out))?;
        self.check(node, Potential::mixture(g))
    }

    /// The discrete pi messages, with the slot of `parent` (if discrete) filled by
    /// a dummy so positions line up; that slot is always clamped by callers.
    fn discrete_pi_msgs_except<'b>(
        &self,
        board: &'b MessageBoard,
        node: usize,
        parent: usize,
    ) -> Result<Vec<&'b [f64]>, StepError> {
        self.layout[node]
            .discrete_parents
            .iter()
            .map(|&p| {
                if p == parent {
                    Ok(&[][..])
                } else {
                    self.discrete_vec(self.pi_msg(board, p, node)?, node)
                }
            })
            .collect()
    }

    fn position(&self, node: usize, parent: usize, discrete: bool) -> usize {
        let list = if discrete {
            &self.layout[node].discrete_parents
        } else {
            &self.layout[node].continuous_parents
        };
        list.iter().position(|&p| p == parent).expect("parent of node")
    }

    /// `Σ_a π(a) ∫ N(x; m + b·u, σ²) Π_{k≠j} π(U_k) dū` as linear forms in `u_j`.
    fn linear_forms(
        &self,
        board: &MessageBoard,
        node: usize,
        parent: usize,
        dmsgs: &[&[f64]],
    ) -> Result<Vec<LinearForm>, StepError> {
        let clg = self.net.clg_cpd(node).ok_or_else(|| self.underflow(node))?;
        let j = self.position(node, parent, false);
        let cont = &self.layout[node].continuous_parents;
        let mut cmsgs = Vec::with_capacity(cont.len());
        for (k, &p) in cont.iter().enumerate() {
            if k == j {
                cmsgs.push(Vec::new());
            } else {
                let c = self.continuous(self.pi_msg(board, p, node)?, node)?;
                cmsgs.push(c.components().ok_or_else(|| self.underflow(node))?);
            }
        }
        let mut forms = Vec::new();
        self.for_each_config(node, dmsgs, None, |cfg, wa| {
            let p = &clg.params[cfg];
            for (w, m, v) in linear_combinations(&p.coeffs, &cmsgs, Some(j)) {
                let weight = wa * w;
                if weight >= WEIGHT_FLUSH {
                    forms.push(LinearForm {
                        weight,
                        slope: p.coeffs[j],
                        offset: p.intercept + m,
                        var: p.variance() + v,
                    });
                }
            }
            Ok(())
        })?;
        Ok(forms)
    }

    /// `BEL(node) = α π(node) λ(node)`.
    pub fn belief(&self, board: &MessageBoard, node: usize) -> Result<Belief, StepError> {
        match self.evidence.get(node) {
            Some(Observation::Value(v)) => return Ok(Belief::point(v)),
            Some(Observation::State(s)) => {
                return Ok(Belief::indicator(self.net.states(node).unwrap_or(s + 1), s));
            }
            None => {}
        }
        let pi = self.stored(board.pi_function(node), node)?;
        let lambda = self.stored(board.lambda_function(node), node)?;
        if self.net.is_discrete(node) {
            let p = self.discrete_vec(pi, node)?;
            let l = self.discrete_vec(lambda, node)?;
            let prod = p.iter().zip(l).map(|(a, b)| a * b).collect();
            return normalize(prod).map(Belief::Discrete).ok_or_else(|| self.underflow(node));
        }
        let pi = match self.continuous(pi, node)? {
            ContinuousPotential::Mixture(g) => g,
            _ => return Err(self.underflow(node)),
        };
        let g = match self.continuous(lambda, node)? {
            ContinuousPotential::Flat => pi.clone(),
            ContinuousPotential::Point(v) => return Ok(Belief::point(*v)),
            ContinuousPotential::Mixture(l) => mixture::product(pi, l).map_err(self.mix_err(node))?,
        };
        let g = g.normalized().map_err(self.mix_err(node))?;
        if !g.is_finite() {
            return Err(self.underflow(node));
        }
        Ok(Belief::Continuous(g))
    }
}

fn normalize(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let total: f64 = v.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= total);
    Some(v)
}

/// For each combination of one component per continuous parent (skipping
/// position `skip`), returns `(Π w, Σ b·μ, Σ b²·σ²)`.
fn linear_combinations(
    coeffs: &[f64],
    lists: &[Vec<GaussianComponent>],
    skip: Option<usize>,
) -> Vec<(f64, f64, f64)> {
    let mut acc = vec![(1.0, 0.0, 0.0)];
    for (k, list) in lists.iter().enumerate() {
        if Some(k) == skip {
            continue;
        }
        let b = coeffs[k];
        let mut next = Vec::with_capacity(acc.len() * list.len());
        for &(w, m, v) in &acc {
            for c in list {
                next.push((w * c.weight, m + b * c.mean, v + b * b * c.var));
            }
        }
        acc = next;
    }
    acc
}

/// Greedy reduction of linear forms. Only forms sharing a slope can be merged
/// (they are then an ordinary mixture in `x − slope·u`); merging stops at
/// `max_nc` forms or when no two forms share a slope.
fn reduce_forms(mut forms: Vec<LinearForm>, max_nc: usize) -> Vec<LinearForm> {
    let as_comp = |f: &LinearForm| GaussianComponent::new(f.weight, f.offset, f.var);
    while forms.len() > max_nc {
        let mut pick: Option<(f64, usize, usize)> = None;
        for i in 0..forms.len() {
            for j in (i + 1)..forms.len() {
                if forms[i].slope != forms[j].slope {
                    continue;
                }
                let Ok(c) = mixture::merge_cost(&as_comp(&forms[i]), &as_comp(&forms[j])) else {
                    continue;
                };
                if pick.is_none_or(|(pc, _, _)| c < pc) {
                    pick = Some((c, i, j));
                }
            }
        }
        let Some((_, i, j)) = pick else { break };
        let Ok(m) = mixture::merge_components(&as_comp(&forms[i]), &as_comp(&forms[j])) else {
            break;
        };
        forms[i] = LinearForm { weight: m.weight, slope: forms[i].slope, offset: m.mean, var: m.var };
        forms.remove(j);
    }
    forms
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::{edge, linear_pair, two_node};
    use crate::network::{Evidence, Node};

    fn bound(net: &HybridNetwork, json: &str) -> BoundEvidence {
        Evidence::from_json(json).unwrap().bind(net).unwrap()
    }

    fn mix(p: &Potential) -> &GaussianMixture {
        match p {
            Potential::Continuous(ContinuousPotential::Mixture(g)) => g,
            other => panic!("expected a mixture, got {other:?}"),
        }
    }

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn root_discrete_pi_is_prior() {
        let net = two_node();
        let ev = bound(&net, "{}");
        let prop = Propagator::new(&net, &ev, 4);
        let board = prop.initial_board();
        assert_eq!(prop.pi_function(&board, 0).unwrap(), Potential::Discrete(vec![0.5, 0.5]));
    }

    #[test]
    fn linear_child_convolves_parent() {
        let net = linear_pair();
        let ev = bound(&net, "{}");
        let prop = Propagator::new(&net, &ev, 4);
        let mut board = prop.initial_board();
        board.set_pi_message(0, 1, Potential::mixture(GaussianMixture::single(1.0, 0.0, 1.0)));
        let pi = prop.pi_function(&board, 1).unwrap();
        assert_eq!(mix(&pi), &GaussianMixture::single(1.0, 0.0, 2.0));
    }

    #[test]
    fn discrete_parent_gives_one_component_per_state() {
        let net = two_node();
        let ev = bound(&net, "{}");
        let prop = Propagator::new(&net, &ev, 2);
        let mut board = prop.initial_board();
        board.set_pi_message(0, 1, Potential::Discrete(vec![0.5, 0.5]));
        let pi = prop.pi_function(&board, 1).unwrap();
        let expect = GaussianMixture::new(vec![
            GaussianComponent::new(0.5, -1.0, 1.0),
            GaussianComponent::new(0.5, 1.0, 1.0),
        ]);
        assert_eq!(mix(&pi), &expect);
    }

    /// B with two continuous children, for lambda products and pi messages.
    fn fork() -> HybridNetwork {
        use crate::network::ClgParams;
        HybridNetwork::new(
            "fork",
            vec![
                Node::discrete("B", 2, vec![vec![0.5, 0.5]]),
                Node::continuous("C", vec![ClgParams::new(0.0, vec![], 1.0); 2]),
                Node::continuous("D", vec![ClgParams::new(0.0, vec![], 1.0); 2]),
            ],
            vec![edge("B", "C"), edge("B", "D")],
        )
    }

    #[test]
    fn discrete_lambda_is_elementwise_product() {
        let net = fork();
        let ev = bound(&net, "{}");
        let prop = Propagator::new(&net, &ev, 4);
        let mut board = prop.initial_board();
        board.set_lambda_message(1, 0, Potential::Discrete(vec![0.2, 0.8]));
        board.set_lambda_message(2, 0, Potential::Discrete(vec![0.5, 0.5]));
        assert_eq!(prop.lambda_function(&board, 0).unwrap(), Potential::Discrete(vec![0.1, 0.4]));
    }

    #[test]
    fn discrete_pi_message_excludes_target_child() {
        let net = fork();
        let ev = bound(&net, "{}");
        let prop = Propagator::new(&net, &ev, 4);
        let mut board = prop.initial_board();
        board.set_pi_function(0, Potential::Discrete(vec![0.5, 0.5]));
        board.set_lambda_message(2, 0, Potential::Discrete(vec![0.8, 0.2]));
        board.set_lambda_message(1, 0, Potential::Discrete(vec![0.0, 1.0]));
        let m = prop.pi_message(&board, 0, 1).unwrap();
        let v = m.as_discrete().unwrap();
        close(v[0], 0.8, 1e-15);
        close(v[1], 0.2, 1e-15);
    }

    #[test]
    fn continuous_lambda_multiplies_children() {
        let net = linear_pair();
        let ev = bound(&net, "{}");
        let prop = Propagator::new(&net, &ev, 4);
        let mut board = prop.initial_board();
        // U has a single child; give it a second factor through a product of two.
        board.set_lambda_message(1, 0, Potential::mixture(GaussianMixture::single(1.0, 0.0, 1.0)));
        assert_eq!(mix(&prop.lambda_function(&board, 0).unwrap()), &GaussianMixture::single(1.0, 0.0, 1.0));
        let l = prop
            .continuous_product(
                0,
                [
                    &ContinuousPotential::Mixture(GaussianMixture::single(1.0, 0.0, 1.0)),
                    &ContinuousPotential::Flat,
                    &ContinuousPotential::Mixture(GaussianMixture::single(1.0, 0.0, 1.0)),
                ]
                .into_iter(),
            )
            .unwrap();
        let c = mix(&l).components()[0];
        close(c.weight, 1.0 / (4.0 * std::f64::consts::PI).sqrt(), 1e-15);
        close(c.mean, 0.0, 0.0);
        close(c.var, 0.5, 1e-15);
    }

    #[test]
    fn leaf_lambda_is_flat() {
        let net = linear_pair();
        let ev = bound(&net, "{}");
        let prop = Propagator::new(&net, &ev, 4);
        let board = prop.initial_board();
        assert_eq!(prop.lambda_function(&board, 1).unwrap(), Potential::flat());
        let mut board = board;
        board.set_lambda_function(1, Potential::flat());
        board.set_pi_message(0, 1, Potential::mixture(GaussianMixture::single(1.0, 0.0, 1.0)));
        assert_eq!(prop.lambda_message(&board, 1, 0).unwrap(), Potential::flat());
    }

    #[test]
    fn evidence_inverts_linear_form() {
        let net = linear_pair();
        let ev = bound(&net, r#"{"X": 2.0}"#);
        let prop = Propagator::new(&net, &ev, 4);
        let mut board = prop.initial_board();
        board.set_pi_message(0, 1, Potential::mixture(GaussianMixture::single(1.0, 0.0, 1.0)));
        board.set_lambda_function(1, prop.lambda_function(&board, 1).unwrap());
        let m = prop.lambda_message(&board, 1, 0).unwrap();
        assert_eq!(mix(&m), &GaussianMixture::single(1.0, 2.0, 1.0));
        assert_eq!(prop.pi_message(&board, 1, 1).unwrap(), Potential::point(2.0));
    }

    #[test]
    fn evidence_scores_discrete_parent_states() {
        let net = two_node();
        let ev = bound(&net, r#"{"X": 1.0}"#);
        let prop = Propagator::new(&net, &ev, 4);
        let mut board = prop.initial_board();
        board.set_pi_message(0, 1, Potential::Discrete(vec![0.5, 0.5]));
        board.set_lambda_function(1, prop.lambda_function(&board, 1).unwrap());
        let m = prop.lambda_message(&board, 1, 0).unwrap();
        let v = m.as_discrete().unwrap();
        close(v[0], 0.053990966513188, 1e-12);
        close(v[1], 0.398942280401433, 1e-12);

        board.set_pi_function(0, Potential::Discrete(vec![0.5, 0.5]));
        board.set_lambda_message(1, 0, m);
        board.set_lambda_function(0, prop.lambda_function(&board, 0).unwrap());
        let Belief::Discrete(p) = prop.belief(&board, 0).unwrap() else { panic!() };
        close(p[0], 0.11920292202211755, 1e-12);
        close(p[1], 0.8807970779778824, 1e-12);
    }

    #[test]
    fn flat_lambda_belief_is_normalized_pi() {
        let net = linear_pair();
        let ev = bound(&net, "{}");
        let prop = Propagator::new(&net, &ev, 4);
        let mut board = prop.initial_board();
        board.set_pi_function(1, Potential::mixture(GaussianMixture::single(3.0, 0.0, 2.0)));
        board.set_lambda_function(1, Potential::flat());
        assert_eq!(prop.belief(&board, 1).unwrap(), Belief::gaussian(0.0, 2.0));
    }

    #[test]
    fn zero_slope_everywhere_gives_flat_message() {
        use crate::network::ClgParams;
        let net = HybridNetwork::new(
            "zero",
            vec![
                Node::continuous("U", vec![ClgParams::new(0.0, vec![], 1.0)]),
                Node::continuous("X", vec![ClgParams::new(0.0, vec![0.0], 1.0)]),
            ],
            vec![edge("U", "X")],
        );
        let ev = bound(&net, r#"{"X": 1.0}"#);
        let prop = Propagator::new(&net, &ev, 4);
        let mut board = prop.initial_board();
        board.set_pi_message(0, 1, Potential::mixture(GaussianMixture::single(1.0, 0.0, 1.0)));
        board.set_lambda_function(1, Potential::point(1.0));
        assert_eq!(prop.lambda_message(&board, 1, 0).unwrap(), Potential::flat());
    }

    #[test]
    fn forms_merge_only_within_a_slope() {
        let f = |w, slope, offset| LinearForm { weight: w, slope, offset, var: 1.0 };
        let out = reduce_forms(vec![f(0.25, 1.0, 0.0), f(0.25, -1.0, 0.0), f(0.25, 1.0, 2.0), f(0.25, 2.0, 0.0)], 1);
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].slope, 1.0);
        close(out[0].weight, 0.5, 0.0);
        close(out[0].offset, 1.0, 1e-15);
        close(out[0].var, 2.0, 1e-15);
    }
}
