//! Experiment drivers: scalability timing, the convergence study and the
//! matched-time comparison against likelihood weighting.
//!
//! Each driver returns an [`ExperimentReport`] holding one row per run plus
//! summary statistics that [`ExperimentReport::recompute_summary`] rebuilds
//! from the rows alone.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::families::{generate_family, FamilySpec, SpecError};
use crate::clock::{millis, ClockKind};
use crate::engine::{run_hmp_gmr, InferenceError, RunSettings, Status};
use crate::metrics::{error_report, mean_std, paired_t_interval, MetricsError};
use crate::network::{save_network, Evidence, HybridNetwork};
use crate::reference::{
    exact_posteriors, exact_posteriors_with, likelihood_weighting_with, LwError, LwSettings, OracleError,
    OracleOptions, SampleBudget,
};
use crate::tuner::{random_evidence, EvidenceSampler, TunerError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Evidence(#[from] TunerError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error("reference: {0}")]
    Oracle(#[from] OracleError),
    #[error("likelihood weighting: {0}")]
    Lw(#[from] LwError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("empty experiment: {0}")]
    Empty(&'static str),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which driver produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Scalability,
    Convergence,
    LwCompare,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Scalability => "scalability",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::LwCompare => "lw-compare",
        }
    }
}

pub const ALGO_HMP: &str = "hmp-gmr";
pub const ALGO_EXACT: &str = "exact";
pub const ALGO_LW: &str = "lw";

/// One run, or for scalability one averaged timing cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub family: u8,
    pub n: usize,
    pub seed: u64,
    pub algorithm: String,
    /// An HMP-GMR [`Status`] string, `ok`, `censored` or `infeasible`.
    pub status: String,
    /// Runs averaged into this row.
    pub runs: usize,
    pub iterations: Option<usize>,
    pub samples: Option<usize>,
    pub elapsed_ms: f64,
    pub censored: bool,
    /// Sum of per-node KL divergences against the oracle.
    pub kl_total: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub scope: String,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub rows: Vec<ReportRow>,
    pub summary: Vec<SummaryStat>,
}

impl ExperimentReport {
    fn new(kind: ExperimentKind, rows: Vec<ReportRow>) -> Self {
        let summary = summarize(kind, &rows);
        Self { kind, rows, summary }
    }

    /// Summary statistics recomputed from the rows.
    pub fn recompute_summary(&self) -> Vec<SummaryStat> {
        summarize(self.kind, &self.rows)
    }

    /// Value of a summary statistic.
    pub fn stat(&self, scope: &str, metric: &str) -> Option<f64> {
        self.summary.iter().find(|s| s.scope == scope && s.metric == metric).map(|s| s.value)
    }

    pub fn write_rows_csv(&self, out: impl Write) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        if self.rows.is_empty() {
            w.write_record(ROW_HEADERS)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary_csv(&self, out: impl Write) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scope", "metric", "value"])?;
        for s in &self.summary {
            w.write_record([s.scope.as_str(), s.metric.as_str(), &s.value.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<kind>.csv` and `<kind>-summary.csv` into `dir`; returns both paths.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf), ExperimentError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let rows = dir.join(format!("{}.csv", self.kind.as_str()));
        let summary = dir.join(format!("{}-summary.csv", self.kind.as_str()));
        self.write_rows_csv(std::fs::File::create(&rows)?)?;
        self.write_summary_csv(std::fs::File::create(&summary)?)?;
        Ok((rows, summary))
    }
}

const ROW_HEADERS: [&str; 11] =
    ["family", "n", "seed", "algorithm", "status", "runs", "iterations", "samples", "elapsed_ms", "censored", "kl_total"];

/// Ids of the measurement leaves `Y1..Yn`, the evidence candidates of every experiment.
pub fn measurement_nodes(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("Y{i}")).collect()
}

/// Evidence of run `seed`: each of `Y1..Yn` observed with probability ½
/// (at least one), values read off a forward sample.
pub fn experiment_evidence(net: &HybridNetwork, n: usize, seed: u64) -> Result<Evidence, ExperimentError> {
    let sampler = EvidenceSampler::new(seed, 0.5).with_candidates(measurement_nodes(n));
    Ok(random_evidence(net, &sampler, 0)?)
}

fn archive(dir: Option<&Path>, net: &HybridNetwork, ev: &Evidence) -> Result<(), ExperimentError> {
    if let Some(dir) = dir {
        let run = dir.join(net.name());
        std::fs::create_dir_all(&run)?;
        save_network(net, run.join("net.json"))?;
        std::fs::write(run.join("evidence.json"), ev.to_json())?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Scalability

#[derive(Debug, Clone)]
pub struct ScalabilityConfig {
    pub families: Vec<u8>,
    pub n_range: Vec<usize>,
    /// HMP-GMR settings, by default `max_nc = 4` and `max_iteration = 100`.
    pub settings: RunSettings,
    /// Oracle budget; slower runs become censored rows.
    pub time_limit: Duration,
    /// HMP-GMR timings are averaged over seeds `seed..seed + repeats`.
    pub repeats: u64,
    pub seed: u64,
    pub archive: Option<PathBuf>,
}

impl ScalabilityConfig {
    pub fn new(families: Vec<u8>, n_range: Vec<usize>, time_limit: Duration) -> Self {
        Self {
            families,
            n_range,
            settings: RunSettings::new(Duration::from_secs(20), 100, 4).with_clock(ClockKind::ThreadCpu),
            time_limit,
            repeats: 1,
            seed: 0,
            archive: None,
        }
    }
}

/// Times HMP-GMR and the enumeration oracle on every family and size.
///
/// Runs are sequential so timings do not compete for cores. Once the oracle
/// is censored for a family, larger sizes are recorded as censored without
/// being run, since its cost only grows with `n`.
pub fn run_scalability(cfg: &ScalabilityConfig) -> Result<ExperimentReport, ExperimentError> {
    if cfg.families.is_empty() || cfg.n_range.is_empty() || cfg.repeats == 0 {
        return Err(ExperimentError::Empty("scalability needs families, sizes and repeats"));
    }
    let mut rows = Vec::new();
    for &family in &cfg.families {
        let mut oracle_censored = false;
        for &n in &cfg.n_range {
            let mut total = Duration::ZERO;
            let mut iterations = 0;
            for seed in cfg.seed..cfg.seed + cfg.repeats {
                let net = generate_family(&FamilySpec::new(family, n, seed)?)?;
                let ev = experiment_evidence(&net, n, seed)?;
                archive(cfg.archive.as_deref(), &net, &ev)?;
                let r = run_hmp_gmr(&net, &ev, &cfg.settings)?;
                total += r.elapsed;
                iterations += r.iterations;
            }
            let reps = cfg.repeats as usize;
            rows.push(ReportRow {
                family,
                n,
                seed: cfg.seed,
                algorithm: ALGO_HMP.into(),
                status: "ok".into(),
                runs: reps,
                iterations: Some(iterations / reps),
                samples: None,
                elapsed_ms: millis(total) / reps as f64,
                censored: false,
                kl_total: None,
            });

            let mut row = ReportRow {
                family,
                n,
                seed: cfg.seed,
                algorithm: ALGO_EXACT.into(),
                status: "censored".into(),
                runs: 1,
                iterations: None,
                samples: None,
                elapsed_ms: millis(cfg.time_limit),
                censored: true,
                kl_total: None,
            };
            if !oracle_censored {
                let net = generate_family(&FamilySpec::new(family, n, cfg.seed)?)?;
                let ev = experiment_evidence(&net, n, cfg.seed)?;
                let opts = OracleOptions { deadline: Some(cfg.time_limit), ..Default::default() };
                let start = Instant::now();
                match exact_posteriors_with(&net, &ev, &opts) {
                    Ok(_) if start.elapsed() <= cfg.time_limit => {
                        row.status = "ok".into();
                        row.elapsed_ms = millis(start.elapsed());
                        row.censored = false;
                    }
                    Ok(_) | Err(OracleError::TimedOut { .. }) => {}
                    Err(OracleError::Infeasible { .. }) => row.status = "infeasible".into(),
                    Err(e) => return Err(e.into()),
                }
                oracle_censored = row.censored;
            }
            rows.push(row);
        }
    }
    Ok(ExperimentReport::new(ExperimentKind::Scalability, rows))
}

// ---------------------------------------------------------------------------
// Convergence study

#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    pub family: u8,
    pub n: usize,
    pub runs: u64,
    pub seed: u64,
    pub settings: RunSettings,
    pub archive: Option<PathBuf>,
}

impl ConvergenceConfig {
    /// Desk-scale defaults: 20 s budget, 10 000 iterations, two components.
    pub fn new(family: u8, n: usize, runs: u64) -> Self {
        Self {
            family,
            n,
            runs,
            seed: 0,
            settings: RunSettings::new(Duration::from_secs(20), 10_000, 2).with_clock(ClockKind::ThreadCpu),
            archive: None,
        }
    }

    /// The long 200 s budget.
    pub fn with_long_budget(mut self) -> Self {
        self.settings.max_time = Duration::from_secs(200);
        self
    }
}

/// Runs HMP-GMR on `runs` fresh parameterizations and scores each against the oracle.
pub fn run_convergence_study(cfg: &ConvergenceConfig) -> Result<ExperimentReport, ExperimentError> {
    if cfg.runs == 0 {
        return Err(ExperimentError::Empty("convergence study needs at least one run"));
    }
    let rows: Vec<Result<ReportRow, ExperimentError>> = (cfg.seed..cfg.seed + cfg.runs)
        .into_par_iter()
        .map(|seed| {
            let net = generate_family(&FamilySpec::new(cfg.family, cfg.n, seed)?)?;
            let ev = experiment_evidence(&net, cfg.n, seed)?;
            archive(cfg.archive.as_deref(), &net, &ev)?;
            let r = run_hmp_gmr(&net, &ev, &cfg.settings)?;
            let truth = exact_posteriors(&net, &ev)?;
            let kl = error_report(&truth, &r.beliefs, &ev)?.total;
            Ok(ReportRow {
                family: cfg.family,
                n: cfg.n,
                seed,
                algorithm: ALGO_HMP.into(),
                status: r.status.as_str().into(),
                runs: 1,
                iterations: Some(r.iterations),
                samples: None,
                elapsed_ms: millis(r.elapsed),
                censored: false,
                kl_total: Some(kl),
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(ExperimentReport::new(ExperimentKind::Convergence, rows))
}

// ---------------------------------------------------------------------------
// Matched-time comparison with likelihood weighting

/// Largest relative gap between LW and HMP-GMR elapsed times counted as matched.
pub const TIME_MATCH_TOLERANCE: f64 = 0.2;
const MATCH_ATTEMPTS: usize = 8;

#[derive(Debug, Clone)]
pub struct LwComparisonConfig {
    pub families: Vec<u8>,
    pub n: usize,
    pub runs: u64,
    pub seed: u64,
    pub max_time: Duration,
    /// HMP-GMR components and iterations.
    pub nc: usize,
    pub it: usize,
    pub archive: Option<PathBuf>,
}

impl LwComparisonConfig {
    pub fn new(families: Vec<u8>, n: usize, runs: u64, max_time: Duration) -> Self {
        Self { families, n, runs, seed: 0, max_time, nc: 1, it: 10, archive: None }
    }
}

/// Likelihood weighting tuned so its elapsed time lands within
/// [`TIME_MATCH_TOLERANCE`] of `target`. Starts from a time budget, then
/// rescales the sample count; keeps the closest attempt.
pub fn matched_lw(
    net: &HybridNetwork,
    ev: &Evidence,
    target: Duration,
    seed: u64,
) -> Result<crate::reference::LwOutput, ExperimentError> {
    let target_s = target.as_secs_f64().max(1e-6);
    let gap = |d: Duration| (d.as_secs_f64() - target_s).abs() / target_s;
    let mut settings = LwSettings::new(SampleBudget::Time(target.max(Duration::from_micros(1))), seed);
    settings.clock = ClockKind::ThreadCpu;
    let mut best = likelihood_weighting_with(net, ev, &settings)?;
    let mut last = (best.samples, best.elapsed);
    for _ in 0..MATCH_ATTEMPTS {
        if gap(best.elapsed) <= TIME_MATCH_TOLERANCE {
            break;
        }
        let scale = target_s / last.1.as_secs_f64().max(1e-9);
        let samples = ((last.0 as f64 * scale).round() as usize).max(1);
        settings.budget = SampleBudget::Samples(samples);
        let out = likelihood_weighting_with(net, ev, &settings)?;
        last = (out.samples, out.elapsed);
        if gap(out.elapsed) < gap(best.elapsed) {
            best = out;
        }
    }
    Ok(best)
}

/// Paired HMP-GMR and LW runs per seed at matched CPU time.
pub fn run_lw_comparison(cfg: &LwComparisonConfig) -> Result<ExperimentReport, ExperimentError> {
    if cfg.families.is_empty() || cfg.runs == 0 {
        return Err(ExperimentError::Empty("comparison needs families and runs"));
    }
    let settings = RunSettings::new(cfg.max_time, cfg.it, cfg.nc).with_clock(ClockKind::ThreadCpu);
    let mut rows = Vec::new();
    for &family in &cfg.families {
        for seed in cfg.seed..cfg.seed + cfg.runs {
            let net = generate_family(&FamilySpec::new(family, cfg.n, seed)?)?;
            let ev = experiment_evidence(&net, cfg.n, seed)?;
            archive(cfg.archive.as_deref(), &net, &ev)?;
            let truth = exact_posteriors(&net, &ev)?;
            let h = run_hmp_gmr(&net, &ev, &settings)?;
            let lw = matched_lw(&net, &ev, h.elapsed, seed)?;
            let base = ReportRow {
                family,
                n: cfg.n,
                seed,
                algorithm: ALGO_HMP.into(),
                status: h.status.as_str().into(),
                runs: 1,
                iterations: Some(h.iterations),
                samples: None,
                elapsed_ms: millis(h.elapsed),
                censored: false,
                kl_total: Some(error_report(&truth, &h.beliefs, &ev)?.total),
            };
            let lw_row = ReportRow {
                algorithm: ALGO_LW.into(),
                status: if lw.degenerate { "degenerate" } else { "ok" }.into(),
                iterations: None,
                samples: Some(lw.samples),
                elapsed_ms: millis(lw.elapsed),
                kl_total: Some(error_report(&truth, &lw.beliefs, &ev)?.total),
                ..base.clone()
            };
            rows.push(base);
            rows.push(lw_row);
        }
    }
    Ok(ExperimentReport::new(ExperimentKind::LwCompare, rows))
}

// ---------------------------------------------------------------------------
// Summaries

fn stat(scope: impl Into<String>, metric: impl Into<String>, value: f64) -> SummaryStat {
    SummaryStat { scope: scope.into(), metric: metric.into(), value }
}

fn summarize(kind: ExperimentKind, rows: &[ReportRow]) -> Vec<SummaryStat> {
    match kind {
        ExperimentKind::Scalability => summarize_scalability(rows),
        ExperimentKind::Convergence => summarize_convergence(rows),
        ExperimentKind::LwCompare => summarize_lw(rows),
    }
}

/// Per family and algorithm: elapsed(largest n) / elapsed(smallest n) when
/// neither is censored, and the first censored size if any.
fn summarize_scalability(rows: &[ReportRow]) -> Vec<SummaryStat> {
    let mut groups: BTreeMap<(u8, &str), Vec<&ReportRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.family, r.algorithm.as_str())).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((family, algo), mut g) in groups {
        g.sort_by_key(|r| r.n);
        let scope = format!("family{family}/{algo}");
        if let (Some(lo), Some(hi)) = (g.first(), g.last()) {
            if !lo.censored && !hi.censored && lo.n < hi.n {
                out.push(stat(&scope, format!("growth_n{}_over_n{}", hi.n, lo.n), hi.elapsed_ms / lo.elapsed_ms));
            }
        }
        if let Some(r) = g.iter().find(|r| r.censored) {
            out.push(stat(&scope, "first_censored_n", r.n as f64));
        }
    }
    out
}

/// Per family: percentage of each status, and KL mean and std per status.
fn summarize_convergence(rows: &[ReportRow]) -> Vec<SummaryStat> {
    let mut out = Vec::new();
    let mut families: Vec<u8> = rows.iter().map(|r| r.family).collect();
    families.dedup();
    for family in families {
        let fam: Vec<&ReportRow> = rows.iter().filter(|r| r.family == family).collect();
        let scope = format!("family{family}");
        for s in Status::ALL {
            let kls: Vec<f64> = fam.iter().filter(|r| r.status == s.as_str()).filter_map(|r| r.kl_total).collect();
            out.push(stat(&scope, format!("pct_{s}"), 100.0 * kls.len() as f64 / fam.len() as f64));
            if !kls.is_empty() {
                let (m, sd) = mean_std(&kls);
                out.push(stat(&scope, format!("kl_mean_{s}"), m));
                out.push(stat(&scope, format!("kl_std_{s}"), sd));
            }
        }
    }
    out
}

/// Per family: KL mean and std of each algorithm, `ln(mean_hmp / mean_lw)`,
/// the 95% paired-t interval of `hmp − lw`, and the share of time-matched pairs.
fn summarize_lw(rows: &[ReportRow]) -> Vec<SummaryStat> {
    let mut out = Vec::new();
    let mut families: Vec<u8> = rows.iter().map(|r| r.family).collect();
    families.dedup();
    for family in families {
        let scope = format!("family{family}");
        let pick = |algo: &str| -> Vec<&ReportRow> {
            rows.iter().filter(|r| r.family == family && r.algorithm == algo).collect()
        };
        let (h, l) = (pick(ALGO_HMP), pick(ALGO_LW));
        let hk: Vec<f64> = h.iter().filter_map(|r| r.kl_total).collect();
        let lk: Vec<f64> = l.iter().filter_map(|r| r.kl_total).collect();
        let (hm, hs) = mean_std(&hk);
        let (lm, ls) = mean_std(&lk);
        out.push(stat(&scope, "hmp_kl_mean", hm));
        out.push(stat(&scope, "hmp_kl_std", hs));
        out.push(stat(&scope, "lw_kl_mean", lm));
        out.push(stat(&scope, "lw_kl_std", ls));
        out.push(stat(&scope, "ln_ratio", (hm / lm).ln()));
        if let Ok((lo, hi)) = paired_t_interval(&hk, &lk, 0.95) {
            out.push(stat(&scope, "paired_ci_low", lo));
            out.push(stat(&scope, "paired_ci_high", hi));
        }
        let matched = h
            .iter()
            .zip(&l)
            .filter(|(a, b)| (b.elapsed_ms - a.elapsed_ms).abs() <= TIME_MATCH_TOLERANCE * a.elapsed_ms)
            .count();
        out.push(stat(&scope, "time_matched_fraction", matched as f64 / h.len().max(1) as f64));
    }
    out
}
