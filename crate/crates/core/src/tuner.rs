//! Settings tuner (HMP-GMR-OS): picks `max_nc` and `max_iteration` for a
//! network by Monte Carlo grid search.
//!
//! For each of `num_samples` random evidence sets the reference posteriors are
//! computed once. Every grid cell `(nc, it)` then runs HMP-GMR on that evidence
//! and scores it against the reference. The cell with the smallest mean error
//! wins, ties going to the smaller `nc` and then the smaller `it`.

use std::io::Write;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::Beliefs;
use crate::clock::ClockKind;
use crate::engine::{run_hmp_gmr, InferenceError, RunSettings, Status};
use crate::metrics::{error_report, mean_std, MetricsError};
use crate::network::{Evidence, HybridNetwork, Observation};
use crate::reference::{
    enumerated_configurations, exact_posteriors_with, forward_sample, likelihood_weighting, LwError, OracleError,
    OracleOptions, SampleBudget,
};

#[derive(Debug, Error)]
pub enum TunerError {
    #[error("network has no candidate evidence nodes")]
    NoCandidates,
    #[error("candidate '{0}' is not a continuous node of the network")]
    BadCandidate(String),
    #[error("leaf_fraction must be in (0, 1], got {0}")]
    LeafFraction(f64),
    #[error("grid bounds and sample count must be at least 1")]
    Bounds,
    #[error("reference: {0}")]
    Oracle(#[from] OracleError),
    #[error("reference: {0}")]
    Lw(#[from] LwError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Draws "reasonable" evidence: values read off one forward simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSampler {
    pub seed: u64,
    /// Probability that each candidate is observed; at least one always is.
    pub leaf_fraction: f64,
    /// Nodes that may be observed. `None` means every continuous leaf.
    #[serde(default)]
    pub candidates: Option<Vec<String>>,
}

impl EvidenceSampler {
    pub fn new(seed: u64, leaf_fraction: f64) -> Self {
        Self { seed, leaf_fraction, candidates: None }
    }

    pub fn with_candidates(mut self, ids: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.candidates = Some(ids.into_iter().map(Into::into).collect());
        self
    }

    fn candidate_nodes(&self, net: &HybridNetwork) -> Result<Vec<usize>, TunerError> {
        let nodes = match &self.candidates {
            Some(ids) => ids
                .iter()
                .map(|id| match net.index_of(id) {
                    Some(i) if !net.is_discrete(i) => Ok(i),
                    _ => Err(TunerError::BadCandidate(id.clone())),
                })
                .collect::<Result<Vec<_>, _>>()?,
            None => (0..net.len()).filter(|&i| !net.is_discrete(i) && net.children(i).is_empty()).collect(),
        };
        if nodes.is_empty() {
            return Err(TunerError::NoCandidates);
        }
        Ok(nodes)
    }
}

/// The `index`-th evidence set of `sampler` for `net`. Each index uses its own
/// random stream, so sets are reproducible individually.
pub fn random_evidence(net: &HybridNetwork, sampler: &EvidenceSampler, index: u64) -> Result<Evidence, TunerError> {
    if !(sampler.leaf_fraction > 0.0 && sampler.leaf_fraction <= 1.0) {
        return Err(TunerError::LeafFraction(sampler.leaf_fraction));
    }
    let candidates = sampler.candidate_nodes(net)?;
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    rng.set_stream(index);
    let mut chosen: Vec<usize> =
        candidates.iter().copied().filter(|_| rng.random_bool(sampler.leaf_fraction)).collect();
    if chosen.is_empty() {
        chosen.push(candidates[rng.random_range(0..candidates.len())]);
    }
    let values = forward_sample(net, &mut rng)?;
    Ok(chosen.into_iter().map(|i| (net.id(i).to_owned(), Observation::Value(values[i]))).fold(
        Evidence::new(),
        |e, (id, o)| e.with(id, o),
    ))
}

/// Source of near-correct posteriors for the tuner.
pub trait PosteriorReference: Sync {
    /// Fails early if the reference cannot handle `net`.
    fn check(&self, net: &HybridNetwork) -> Result<(), TunerError>;
    fn posteriors(&self, net: &HybridNetwork, evidence: &Evidence) -> Result<Beliefs, TunerError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Reference {
    /// Enumeration oracle with a configuration cap.
    Exact { max_configs: u128 },
    /// Likelihood weighting with a fixed sample count.
    Lw { samples: usize, seed: u64 },
}

impl Reference {
    pub fn exact() -> Self {
        Reference::Exact { max_configs: OracleOptions::default().max_configs }
    }

    /// The oracle when the network is within its cap, otherwise LW with `lw_samples`.
    pub fn preferred(net: &HybridNetwork, lw_samples: usize, seed: u64) -> Self {
        if enumerated_configurations(net, &Evidence::new()) <= OracleOptions::default().max_configs {
            Self::exact()
        } else {
            Reference::Lw { samples: lw_samples, seed }
        }
    }
}

impl PosteriorReference for Reference {
    fn check(&self, net: &HybridNetwork) -> Result<(), TunerError> {
        if let Reference::Exact { max_configs } = *self {
            let configs = enumerated_configurations(net, &Evidence::new());
            if configs > max_configs {
                return Err(OracleError::Infeasible { configs, cap: max_configs }.into());
            }
        }
        Ok(())
    }

    fn posteriors(&self, net: &HybridNetwork, evidence: &Evidence) -> Result<Beliefs, TunerError> {
        match *self {
            Reference::Exact { max_configs } => {
                let opts = OracleOptions { max_configs, deadline: None };
                Ok(exact_posteriors_with(net, evidence, &opts)?)
            }
            Reference::Lw { samples, seed } => {
                Ok(likelihood_weighting(net, evidence, SampleBudget::Samples(samples), seed)?.beliefs)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneSettings {
    pub max_time: Duration,
    pub num_samples: usize,
    pub ul_max_nc: usize,
    pub ul_max_it: usize,
    pub max_prcs: f64,
    /// Clock for each HMP-GMR run; thread CPU time keeps parallel runs honest.
    pub clock: ClockKind,
}

impl TuneSettings {
    pub fn new(max_time: Duration, num_samples: usize, ul_max_nc: usize, ul_max_it: usize) -> Self {
        Self {
            max_time,
            num_samples,
            ul_max_nc,
            ul_max_it,
            max_prcs: RunSettings::default().max_prcs,
            clock: ClockKind::ThreadCpu,
        }
    }
}

/// One HMP-GMR run inside the grid search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub sample: usize,
    pub nc: usize,
    pub it: usize,
    pub error: f64,
    pub status: Status,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub avg_error: f64,
    /// Sample standard deviation over evidence sets (0 for a single run).
    pub std_error: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best_nc: usize,
    pub best_it: usize,
    /// `grid[nc - 1][it - 1]`.
    pub grid: Vec<Vec<GridCell>>,
    pub records: Vec<RunRecord>,
    pub settings: TuneSettings,
    pub sampler: EvidenceSampler,
    pub reference: Reference,
}

impl TuneResult {
    pub fn cell(&self, nc: usize, it: usize) -> &GridCell {
        &self.grid[nc - 1][it - 1]
    }

    /// Grid as CSV with columns `nc, it, avg_kl, std_kl, runs`.
    pub fn write_csv(&self, out: impl Write) -> Result<(), TunerError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["nc", "it", "avg_kl", "std_kl", "runs"])?;
        for (j, row) in self.grid.iter().enumerate() {
            for (k, c) in row.iter().enumerate() {
                w.write_record([
                    (j + 1).to_string(),
                    (k + 1).to_string(),
                    c.avg_error.to_string(),
                    c.std_error.to_string(),
                    c.runs.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Index of the smallest value, earliest on ties. NaN never wins.
pub fn argmin_first(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if !v.is_nan() && best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

pub fn tune(
    net: &HybridNetwork,
    settings: &TuneSettings,
    reference: &Reference,
    sampler: &EvidenceSampler,
) -> Result<TuneResult, TunerError> {
    let records = tune_records(net, settings, reference, sampler)?;
    let (ul_nc, ul_it) = (settings.ul_max_nc, settings.ul_max_it);
    let grid: Vec<Vec<GridCell>> = (1..=ul_nc)
        .map(|nc| {
            (1..=ul_it)
                .map(|it| {
                    let errs: Vec<f64> =
                        records.iter().filter(|r| r.nc == nc && r.it == it).map(|r| r.error).collect();
                    let (avg_error, std_error) = mean_std(&errs);
                    GridCell { avg_error, std_error, runs: errs.len() }
                })
                .collect()
        })
        .collect();
    let best = argmin_first(grid.iter().flatten().map(|c| c.avg_error)).unwrap_or(0);
    Ok(TuneResult {
        best_nc: best / ul_it + 1,
        best_it: best % ul_it + 1,
        grid,
        records,
        settings: settings.clone(),
        sampler: sampler.clone(),
        reference: *reference,
    })
}

/// Raw per-run records of the grid search, ordered by (sample, nc, it), using
/// any [`PosteriorReference`]. The reference is queried once per sample.
pub fn tune_records(
    net: &HybridNetwork,
    settings: &TuneSettings,
    reference: &dyn PosteriorReference,
    sampler: &EvidenceSampler,
) -> Result<Vec<RunRecord>, TunerError> {
    if settings.num_samples == 0 || settings.ul_max_nc == 0 || settings.ul_max_it == 0 {
        return Err(TunerError::Bounds);
    }
    reference.check(net)?;
    let cells: Vec<(usize, usize)> =
        (1..=settings.ul_max_nc).flat_map(|nc| (1..=settings.ul_max_it).map(move |it| (nc, it))).collect();
    let mut records = Vec::with_capacity(settings.num_samples * cells.len());
    for sample in 0..settings.num_samples {
        let evidence = random_evidence(net, sampler, sample as u64)?;
        let truth = reference.posteriors(net, &evidence)?;
        let runs: Vec<Result<RunRecord, TunerError>> = cells
            .par_iter()
            .map(|&(nc, it)| {
                let rs = RunSettings::new(settings.max_time, it, nc)
                    .with_max_prcs(settings.max_prcs)
                    .with_clock(settings.clock);
                let r = run_hmp_gmr(net, &evidence, &rs)?;
                let error = error_report(&truth, &r.beliefs, &evidence)?.total;
                Ok(RunRecord {
                    sample,
                    nc,
                    it,
                    error,
                    status: r.status,
                    elapsed_ms: crate::clock::millis(r.elapsed),
                })
            })
            .collect();
        for r in runs {
            records.push(r?);
        }
    }
    Ok(records)
}
