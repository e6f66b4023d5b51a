//! Accuracy scores and paired comparisons.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

use crate::belief::{Belief, Beliefs};
use crate::mixture::GaussianMixture;
use crate::network::Evidence;

/// Floor applied to the second argument of a discrete KL divergence.
pub const KL_Q_FLOOR: f64 = 1e-12;
/// Quadrature points for mixture KL divergences.
pub const KL_GRID_POINTS: usize = 4096;
/// Half-width of the quadrature window around each component, in standard deviations.
pub const KL_GRID_SIGMAS: f64 = 8.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("mixture is empty or contains a point mass")]
    Degenerate,
    #[error("node '{0}' has beliefs of different kinds")]
    KindMismatch(String),
    #[error("node '{0}' is missing from one of the belief sets")]
    MissingNode(String),
    #[error("need at least two paired samples, got {0}")]
    TooFewSamples(usize),
}

/// `Σ pᵢ ln(pᵢ/qᵢ)` with `0·ln 0 = 0` and `q` floored at [`KL_Q_FLOOR`].
pub fn kl_discrete(p: &[f64], q: &[f64]) -> Result<f64, MetricsError> {
    if p.len() != q.len() {
        return Err(MetricsError::LengthMismatch(p.len(), q.len()));
    }
    let kl: f64 = p
        .iter()
        .zip(q)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| pi * (pi / qi.max(KL_Q_FLOOR)).ln())
        .sum();
    Ok(kl.max(0.0))
}

/// `∫ p ln(p/q)` by the trapezoid rule on a uniform grid covering every
/// component's `μ ± 8σ`. `q` is floored at `1e-300`; the result is clamped at 0.
pub fn kl_mixture(p: &GaussianMixture, q: &GaussianMixture) -> Result<f64, MetricsError> {
    if p.is_empty() || q.is_empty() || p.has_point() || q.has_point() {
        return Err(MetricsError::Degenerate);
    }
    let (lo, hi) = p.iter().chain(q.iter()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
        let r = KL_GRID_SIGMAS * c.var.sqrt();
        (lo.min(c.mean - r), hi.max(c.mean + r))
    });
    let n = KL_GRID_POINTS;
    let h = (hi - lo) / (n - 1) as f64;
    let pd = grid_density(p, lo, h, n);
    let qd = grid_density(q, lo, h, n);
    let mut sum = 0.0;
    for k in 0..n {
        let f = if pd[k] > 0.0 { pd[k] * (pd[k] / qd[k].max(1e-300)).ln() } else { 0.0 };
        sum += if k == 0 || k == n - 1 { 0.5 * f } else { f };
    }
    Ok((sum * h).max(0.0))
}

/// Mixture density on `lo + k·h`. Each component is only evaluated where its
/// density can be nonzero in double precision (within 40σ of its mean).
///
/// Along the grid a Gaussian obeys `g(k+1) = g(k)·r(k)` with
/// `r(k+1) = r(k)·e^(−h²/σ²)`, so exponentials are needed only at anchors
/// every [`ANCHOR`] points; between anchors the relative error stays near
/// `ANCHOR²·ε`. Components narrower than a few grid steps use `exp` directly.
fn grid_density(g: &GaussianMixture, lo: f64, h: f64, n: usize) -> Vec<f64> {
    const ANCHOR: usize = 32;
    let mut out = vec![0.0; n];
    for c in g {
        let sd = c.var.sqrt();
        let a = (((c.mean - 40.0 * sd - lo) / h).floor().max(0.0) as usize).min(n);
        let b = (((c.mean + 40.0 * sd - lo) / h).ceil().max(0.0) as usize + 1).min(n);
        let norm = c.weight / (2.0 * std::f64::consts::PI * c.var).sqrt();
        let at = |k: usize| {
            let z = (lo + k as f64 * h - c.mean) / sd;
            norm * (-0.5 * z * z).exp()
        };
        if h > 0.25 * sd {
            for (k, o) in out.iter_mut().enumerate().take(b).skip(a) {
                *o += at(k);
            }
            continue;
        }
        let step = (-h * h / c.var).exp();
        let mut k = a;
        while k < b {
            let end = (k + ANCHOR).min(b);
            let d = lo + k as f64 * h - c.mean;
            let mut v = at(k);
            let mut r = (-(2.0 * d * h + h * h) / (2.0 * c.var)).exp();
            for o in &mut out[k..end] {
                *o += v;
                v *= r;
                r *= step;
            }
            k = end;
        }
    }
    out
}

/// KL divergence between two beliefs of the same kind, reference first.
pub fn kl_belief(reference: &Belief, approx: &Belief) -> Option<Result<f64, MetricsError>> {
    match (reference, approx) {
        (Belief::Discrete(p), Belief::Discrete(q)) => Some(kl_discrete(p, q)),
        (Belief::Continuous(p), Belief::Continuous(q)) => Some(kl_mixture(p, q)),
        _ => None,
    }
}

/// Per-node KL divergences over unobserved nodes and their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub per_node: BTreeMap<String, f64>,
    pub total: f64,
}

/// Scores `approx` against `reference` on every node not named in `evidence`.
pub fn error_report(reference: &Beliefs, approx: &Beliefs, evidence: &Evidence) -> Result<ErrorReport, MetricsError> {
    for id in approx.keys() {
        if !reference.contains_key(id) && !evidence.contains(id) {
            return Err(MetricsError::MissingNode(id.clone()));
        }
    }
    let mut per_node = BTreeMap::new();
    for (id, r) in reference {
        if evidence.contains(id) {
            continue;
        }
        let a = approx.get(id).ok_or_else(|| MetricsError::MissingNode(id.clone()))?;
        let kl = kl_belief(r, a).ok_or_else(|| MetricsError::KindMismatch(id.clone()))??;
        per_node.insert(id.clone(), kl);
    }
    let total = per_node.values().sum();
    Ok(ErrorReport { per_node, total })
}

/// Confidence interval for the mean of `a − b`: `d̄ ± t·s_d/√n`, with `t` the
/// `(1+level)/2` quantile of Student's t on `n − 1` degrees of freedom and
/// `s_d` the root mean squared deviation of the differences (divisor `n`).
pub fn paired_t_interval(a: &[f64], b: &[f64], level: f64) -> Result<(f64, f64), MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(MetricsError::TooFewSamples(n));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    let half = t_quantile(0.5 + level / 2.0, (n - 1) as f64) * (var / n as f64).sqrt();
    Ok((mean - half, mean + half))
}

/// Quantile of Student's t distribution on `df` degrees of freedom.
pub fn t_quantile(p: f64, df: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    if p < 0.5 {
        return -t_quantile(1.0 - p, df);
    }
    StudentsT::new(0.0, 1.0, df).map_or(f64::NAN, |t| t.inverse_cdf(p))
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Sample mean and standard deviation (`n − 1` denominator; 0 for one sample).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}
