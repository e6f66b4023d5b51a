//! Scalar Gaussian mixture algebra.
//!
//! Everything the message passing engine needs to manipulate one-dimensional
//! mixtures lives here: densities, moments, pairwise products, moment-matched
//! merging, the Runnalls KL-bound merge cost and the greedy reduction operator
//! that caps the number of components of a message.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Weights that fall below this after a product are flushed to zero.
pub const WEIGHT_FLUSH: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MixtureError {
    #[error("mixture has zero total weight")]
    Degenerate,
    #[error("merge cost is undefined for zero-variance components")]
    ZeroVariance,
    #[error("mixture product underflowed to zero mass")]
    Underflow,
    #[error("mixture has no components")]
    Empty,
    #[error("max_nc must be at least 1")]
    InvalidBound,
}

/// One weighted scalar Gaussian. `var == 0` denotes a point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    #[serde(rename = "w")]
    pub weight: f64,
    pub mean: f64,
    pub var: f64,
}

impl GaussianComponent {
    pub fn new(weight: f64, mean: f64, var: f64) -> Self {
        Self { weight, mean, var }
    }

    pub fn is_point(&self) -> bool {
        self.var == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.weight.is_finite() && self.mean.is_finite() && self.var.is_finite()
    }

    /// Weighted density at `x`. Point masses have no density and return 0.
    pub fn density(&self, x: f64) -> f64 {
        if self.var <= 0.0 {
            return 0.0;
        }
        self.weight * normal_pdf(x, self.mean, self.var)
    }
}

/// Density of `N(mean, var)` at `x`.
pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    (-0.5 * d * d / var).exp() / (2.0 * PI * var).sqrt()
}

/// Log-density of `N(mean, var)` at `x`.
pub fn normal_ln_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * d * d / var - 0.5 * (2.0 * PI * var).ln()
}

/// A finite mixture of scalar Gaussians. Weights need not sum to one;
/// unnormalized mixtures are the normal state of lambda potentials.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GaussianMixture {
    components: Vec<GaussianComponent>,
}

impl GaussianMixture {
    pub fn new(components: Vec<GaussianComponent>) -> Self {
        Self { components }
    }

    pub fn single(weight: f64, mean: f64, var: f64) -> Self {
        Self::new(vec![GaussianComponent::new(weight, mean, var)])
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn into_components(self) -> Vec<GaussianComponent> {
        self.components
    }

    pub fn iter(&self) -> std::slice::Iter<'_, GaussianComponent> {
        self.components.iter()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_weight() - 1.0).abs() <= 1e-9
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(GaussianComponent::is_finite)
    }

    pub fn has_point(&self) -> bool {
        self.components.iter().any(GaussianComponent::is_point)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.density(x)).sum()
    }

    /// Rescales the weights to sum to one.
    pub fn normalized(&self) -> Result<Self, MixtureError> {
        let total = self.total_weight();
        if !(total > 0.0) || !total.is_finite() {
            return Err(MixtureError::Degenerate);
        }
        Ok(Self::new(
            self.components
                .iter()
                .map(|c| GaussianComponent::new(c.weight / total, c.mean, c.var))
                .collect(),
        ))
    }

    /// Mean and variance of the normalized mixture.
    pub fn moments(&self) -> Result<(f64, f64), MixtureError> {
        mixture_moments(self)
    }

    /// The single Gaussian with the same total weight, mean and variance.
    pub fn moment_matched(&self) -> Result<GaussianComponent, MixtureError> {
        // A lone component is its own match; skip the rounding of the sums.
        if let [c] = self.components.as_slice() {
            if c.weight > 0.0 {
                return Ok(*c);
            }
        }
        let (mean, var) = self.moments()?;
        Ok(GaussianComponent::new(self.total_weight(), mean, var))
    }
}

impl FromIterator<GaussianComponent> for GaussianMixture {
    fn from_iter<I: IntoIterator<Item = GaussianComponent>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a GaussianMixture {
    type Item = &'a GaussianComponent;
    type IntoIter = std::slice::Iter<'a, GaussianComponent>;

    fn into_iter(self) -> Self::IntoIter {
        self.components.iter()
    }
}

/// Mean and variance of a (possibly unnormalized) mixture.
pub fn mixture_moments(g: &GaussianMixture) -> Result<(f64, f64), MixtureError> {
    let total = g.total_weight();
    if !(total > 0.0) {
        return Err(MixtureError::Degenerate);
    }
    let mean = g.iter().map(|c| c.weight * c.mean).sum::<f64>() / total;
    // Central form of E[x^2] - mean^2; avoids cancellation for large means.
    let var = g
        .iter()
        .map(|c| {
            let d = c.mean - mean;
            c.weight * (c.var + d * d)
        })
        .sum::<f64>()
        / total;
    Ok((mean, var.max(0.0)))
}

/// Moment-matched merge of two weighted components.
pub fn merge_components(
    a: &GaussianComponent,
    b: &GaussianComponent,
) -> Result<GaussianComponent, MixtureError> {
    let w = a.weight + b.weight;
    if !(w > 0.0) {
        return Err(MixtureError::Degenerate);
    }
    let (pa, pb) = (a.weight / w, b.weight / w);
    let mean = pa * a.mean + pb * b.mean;
    let d = a.mean - b.mean;
    let var = pa * a.var + pb * b.var + pa * pb * d * d;
    Ok(GaussianComponent::new(w, mean, var))
}

/// Runnalls' upper bound on the KL discrimination incurred by merging `a` and `b`:
/// `½[(wᵢ+wⱼ) ln σ̄² − wᵢ ln σᵢ² − wⱼ ln σⱼ²]`, with σ̄² the merged variance.
pub fn merge_cost(a: &GaussianComponent, b: &GaussianComponent) -> Result<f64, MixtureError> {
    if a.var <= 0.0 || b.var <= 0.0 {
        return Err(MixtureError::ZeroVariance);
    }
    let merged = merge_components(a, b)?;
    let cost =
        0.5 * (merged.weight * merged.var.ln() - (a.weight * a.var.ln() + b.weight * b.var.ln()));
    Ok(cost.max(0.0))
}

/// Greedy pairwise reduction to at most `max_nc` components.
///
/// Repeatedly merges the pair with the smallest [`merge_cost`], breaking ties by
/// the lexicographically smallest index pair. The merged component takes the
/// slot of the lower index. Total weight, mean and variance are preserved.
pub fn reduce(g: &GaussianMixture, max_nc: usize) -> Result<GaussianMixture, MixtureError> {
    if max_nc == 0 {
        return Err(MixtureError::InvalidBound);
    }
    if g.len() <= max_nc {
        return Ok(g.clone());
    }
    if g.has_point() {
        return Err(MixtureError::ZeroVariance);
    }
    if max_nc == 1 {
        // Any merge order ends at the global moment match.
        return Ok(GaussianMixture::new(vec![g.moment_matched()?]));
    }

    let mut comps: Vec<GaussianComponent> =
        g.iter().copied().filter(|c| c.weight > 0.0).collect();
    if comps.is_empty() {
        return Err(MixtureError::Degenerate);
    }
    let n = comps.len();
    let mut alive = vec![true; n];
    let mut remaining = n;
    // best[i] = (cost, j) minimizing over alive j > i, smallest j on ties.
    let mut best: Vec<Option<(f64, usize)>> = vec![None; n];

    let row_best = |comps: &[GaussianComponent],
                    alive: &[bool],
                    i: usize|
     -> Result<Option<(f64, usize)>, MixtureError> {
        let mut out: Option<(f64, usize)> = None;
        for j in (i + 1)..comps.len() {
            if !alive[j] {
                continue;
            }
            let c = merge_cost(&comps[i], &comps[j])?;
            if out.is_none_or(|(bc, _)| c < bc) {
                out = Some((c, j));
            }
        }
        Ok(out)
    };

    for i in 0..n {
        best[i] = row_best(&comps, &alive, i)?;
    }

    while remaining > max_nc {
        let mut pick: Option<(f64, usize, usize)> = None;
        for (i, b) in best.iter().enumerate() {
            if !alive[i] {
                continue;
            }
            if let Some((c, j)) = *b {
                if pick.is_none_or(|(pc, _, _)| c < pc) {
                    pick = Some((c, i, j));
                }
            }
        }
        let Some((_, i, j)) = pick else { break };

        comps[i] = merge_components(&comps[i], &comps[j])?;
        alive[j] = false;
        best[j] = None;
        remaining -= 1;

        for r in 0..n {
            if !alive[r] {
                continue;
            }
            if r == i || matches!(best[r], Some((_, bj)) if bj == i || bj == j) {
                best[r] = row_best(&comps, &alive, r)?;
            } else if r < i {
                let c = merge_cost(&comps[r], &comps[i])?;
                if let Some((bc, bj)) = best[r] {
                    if c < bc || (c == bc && i < bj) {
                        best[r] = Some((c, i));
                    }
                } else {
                    best[r] = Some((c, i));
                }
            }
        }
    }

    Ok(comps
        .into_iter()
        .zip(alive)
        .filter_map(|(c, a)| a.then_some(c))
        .collect())
}

/// Pointwise product of two mixtures.
///
/// Each pair of components contributes `z·N(μ*, σ*²)` with
/// `z = N(μ₁; μ₂, σ₁² + σ₂²)`. Point masses are handled in the same closed form.
/// Weights below [`WEIGHT_FLUSH`] are dropped; an all-zero result is an underflow.
pub fn product(g1: &GaussianMixture, g2: &GaussianMixture) -> Result<GaussianMixture, MixtureError> {
    if g1.is_empty() || g2.is_empty() {
        return Err(MixtureError::Empty);
    }
    let mut out = Vec::with_capacity(g1.len() * g2.len());
    for a in g1 {
        for b in g2 {
            if let Some(c) = component_product(a, b) {
                out.push(c);
            }
        }
    }
    if out.is_empty() {
        return Err(MixtureError::Underflow);
    }
    Ok(GaussianMixture::new(out))
}

fn component_product(a: &GaussianComponent, b: &GaussianComponent) -> Option<GaussianComponent> {
    let s = a.var + b.var;
    let (z, mean, var) = if s > 0.0 {
        let z = normal_pdf(a.mean, b.mean, s);
        let mean = (a.mean * b.var + b.mean * a.var) / s;
        (z, mean, a.var * b.var / s)
    } else if a.mean == b.mean {
        (1.0, a.mean, 0.0)
    } else {
        (0.0, a.mean, 0.0)
    };
    let w = a.weight * b.weight * z;
    (w >= WEIGHT_FLUSH && w.is_finite() && mean.is_finite()).then(|| GaussianComponent::new(w, mean, var))
}

/// `∫ g1(x) g2(x) dx` for two mixtures without point masses at shared locations.
pub fn overlap(g1: &GaussianMixture, g2: &GaussianMixture) -> f64 {
    let mut total = 0.0;
    for a in g1 {
        for b in g2 {
            let s = a.var + b.var;
            if s > 0.0 {
                total += a.weight * b.weight * normal_pdf(a.mean, b.mean, s);
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(w: f64, m: f64, v: f64) -> GaussianComponent {
        GaussianComponent::new(w, m, v)
    }

    #[test]
    fn moments_of_worked_examples() {
        assert_eq!(mixture_moments(&GaussianMixture::single(1.0, 0.0, 1.0)).unwrap(), (0.0, 1.0));
        let (m, v) = mixture_moments(&GaussianMixture::new(vec![c(0.5, 0.0, 1.0), c(0.5, 2.0, 1.0)])).unwrap();
        assert!((m - 1.0).abs() < 1e-15 && (v - 2.0).abs() < 1e-15);
        assert_eq!(mixture_moments(&GaussianMixture::single(2.0, 5.0, 0.25)).unwrap(), (5.0, 0.25));
    }

    #[test]
    fn moments_reject_zero_weight() {
        let g = GaussianMixture::new(vec![c(0.0, 1.0, 1.0)]);
        assert_eq!(mixture_moments(&g), Err(MixtureError::Degenerate));
    }

    #[test]
    fn merge_examples() {
        assert_eq!(merge_components(&c(0.5, 0.0, 1.0), &c(0.5, 0.0, 1.0)).unwrap(), c(1.0, 0.0, 1.0));
        assert_eq!(merge_components(&c(0.5, 0.0, 1.0), &c(0.5, 2.0, 1.0)).unwrap(), c(1.0, 1.0, 2.0));
        assert_eq!(merge_components(&c(1.0, 3.0, 0.5), &c(0.0, 999.0, 1.0)).unwrap(), c(1.0, 3.0, 0.5));
        assert_eq!(
            merge_components(&c(0.0, 0.0, 1.0), &c(0.0, 1.0, 1.0)),
            Err(MixtureError::Degenerate)
        );
    }

    #[test]
    fn merge_cost_examples() {
        let cost = merge_cost(&c(0.5, 0.0, 1.0), &c(0.5, 2.0, 1.0)).unwrap();
        assert!((cost - 0.5 * 2f64.ln()).abs() < 1e-12);
        assert_eq!(merge_cost(&c(0.3, -1.2, 0.7), &c(0.3, -1.2, 0.7)).unwrap(), 0.0);
        assert_eq!(merge_cost(&c(0.3, 0.0, 0.0), &c(0.3, 1.0, 1.0)), Err(MixtureError::ZeroVariance));
    }

    #[test]
    fn reduce_leaves_small_mixtures_alone() {
        let g = GaussianMixture::new(vec![c(0.2, 0.0, 1.0), c(0.3, 1.0, 2.0), c(0.5, 4.0, 1.0)]);
        assert_eq!(reduce(&g, 5).unwrap(), g);
        assert_eq!(reduce(&g, 0), Err(MixtureError::InvalidBound));
    }

    #[test]
    fn reduce_forced_single_merge() {
        let g = GaussianMixture::new(vec![c(0.5, 0.0, 1.0), c(0.5, 2.0, 1.0)]);
        assert_eq!(reduce(&g, 1).unwrap(), GaussianMixture::single(1.0, 1.0, 2.0));
    }

    #[test]
    fn reduce_merges_closest_pair_first() {
        // Components 1 and 2 are nearly identical; 0 is far away.
        let g = GaussianMixture::new(vec![c(0.4, -10.0, 1.0), c(0.3, 1.0, 1.0), c(0.3, 1.1, 1.0)]);
        let r = reduce(&g, 2).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r.components()[0], c(0.4, -10.0, 1.0));
        assert!((r.components()[1].mean - 1.05).abs() < 1e-12);
    }

    #[test]
    fn reduce_ties_take_lowest_pair() {
        // Four identical components: every pair costs 0, so (0,1) merges first.
        let g = GaussianMixture::new(vec![c(0.25, 0.0, 1.0); 4]);
        let r = reduce(&g, 3).unwrap();
        assert_eq!(r.components(), &[c(0.5, 0.0, 1.0), c(0.25, 0.0, 1.0), c(0.25, 0.0, 1.0)]);
    }

    #[test]
    fn reduce_rejects_point_masses() {
        let g = GaussianMixture::new(vec![c(0.5, 0.0, 0.0), c(0.5, 1.0, 1.0), c(0.1, 2.0, 1.0)]);
        assert_eq!(reduce(&g, 2), Err(MixtureError::ZeroVariance));
    }

    #[test]
    fn product_of_standard_normals() {
        let n = GaussianMixture::single(1.0, 0.0, 1.0);
        let p = product(&n, &n).unwrap();
        assert_eq!(p.len(), 1);
        let k = p.components()[0];
        assert!((k.weight - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
        assert_eq!((k.mean, k.var), (0.0, 0.5));
    }

    #[test]
    fn product_with_point_mass() {
        let n = GaussianMixture::single(2.0, 1.0, 4.0);
        let pt = GaussianMixture::single(1.0, 3.0, 0.0);
        let p = product(&n, &pt).unwrap();
        let k = p.components()[0];
        assert_eq!((k.mean, k.var), (3.0, 0.0));
        assert!((k.weight - 2.0 * normal_pdf(3.0, 1.0, 4.0)).abs() < 1e-15);
    }

    #[test]
    fn distinct_points_underflow() {
        let a = GaussianMixture::single(1.0, 0.0, 0.0);
        let b = GaussianMixture::single(1.0, 1.0, 0.0);
        assert_eq!(product(&a, &b), Err(MixtureError::Underflow));
    }

    #[test]
    fn far_apart_narrow_gaussians_underflow() {
        let a = GaussianMixture::single(1.0, 0.0, 1e-4);
        let b = GaussianMixture::single(1.0, 1e3, 1e-4);
        assert_eq!(product(&a, &b), Err(MixtureError::Underflow));
    }

    #[test]
    fn serializes_as_component_list() {
        let g = GaussianMixture::single(1.0, 0.5, 2.0);
        assert_eq!(serde_json::to_string(&g).unwrap(), r#"[{"w":1.0,"mean":0.5,"var":2.0}]"#);
    }
}
