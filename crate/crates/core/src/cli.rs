//! Command-line front end. [`dispatch`] parses arguments, runs one
//! subcommand and returns the process exit code.
//!
//! | code | meaning |
//! |---|---|
//! | 0 | success, including non-converged inference |
//! | 1 | unexpected runtime failure |
//! | 2 | bad flags |
//! | 3 | unreadable or malformed input file |
//! | 4 | network or evidence failed validation |
//! | 5 | the exact oracle cannot handle the network |

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::belief::{beliefs_from_json, Beliefs};
use crate::clock::millis;
use crate::engine::{run_hmp_gmr, InferenceError, RunSettings};
use crate::harness::{
    count_cycles, generate_family, run_convergence_study, run_lw_comparison, run_scalability, ConvergenceConfig,
    ExperimentError, ExperimentReport, FamilySpec, LwComparisonConfig, ScalabilityConfig, SpecError,
};
use crate::metrics::{error_report, MetricsError};
use crate::network::{load_network, network_to_json, Evidence, HybridNetwork, LoadError};
use crate::reference::{exact_posteriors, likelihood_weighting, LwError, OracleError, SampleBudget};
use crate::tuner::{tune, EvidenceSampler, Reference, TuneSettings, TunerError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_INVALID: i32 = 4;
pub const EXIT_ORACLE: i32 = 5;

/// Environment variable capping worker threads (0 or unset: one per core).
pub const THREADS_ENV: &str = "CG_INFER_THREADS";

#[derive(Debug, Parser)]
#[command(name = "cg-infer", version, about = "Inference for conditional linear Gaussian Bayesian networks")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file (generate, infer, compare) or directory (tune, bench).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Format of what is printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a benchmark network.
    Generate {
        #[arg(long)]
        family: u8,
        #[arg(long)]
        n: usize,
    },
    /// Compute posterior marginals.
    Infer(InferArgs),
    /// Grid-search max_nc and max_iteration for a network.
    Tune(TuneArgs),
    /// Count elementary cycles of the undirected skeleton.
    Cycles {
        #[arg(long)]
        net: PathBuf,
    },
    /// Run a benchmark experiment.
    Bench {
        #[command(subcommand)]
        experiment: BenchCommand,
    },
    /// Score approximate beliefs against reference beliefs.
    Compare {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        approx: PathBuf,
        #[arg(long)]
        evidence: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    HmpGmr,
    Lw,
    Exact,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub net: PathBuf,
    /// Evidence JSON; omitted means no evidence.
    #[arg(long)]
    pub evidence: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Algo::HmpGmr)]
    pub algo: Algo,
    /// Time budget in milliseconds.
    #[arg(long, default_value_t = 20_000)]
    pub max_time: u64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 4)]
    pub max_nc: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub max_prcs: f64,
    /// LW sample count; without it LW samples for `--max-time`.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReferenceKind {
    Exact,
    Lw,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub net: PathBuf,
    /// Per-run time budget in milliseconds.
    #[arg(long, default_value_t = 3000)]
    pub max_time: u64,
    /// Number of random evidence sets.
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    #[arg(long, default_value_t = 10)]
    pub ul_nc: usize,
    #[arg(long, default_value_t = 10)]
    pub ul_it: usize,
    #[arg(long, value_enum, default_value_t = ReferenceKind::Exact)]
    pub reference: ReferenceKind,
    /// Samples for the LW reference.
    #[arg(long, default_value_t = 100_000)]
    pub lw_samples: usize,
    /// Chance that each candidate evidence node is observed.
    #[arg(long, default_value_t = 0.5)]
    pub leaf_fraction: f64,
    /// Comma-separated evidence candidates; default is every continuous leaf.
    #[arg(long, value_delimiter = ',')]
    pub candidates: Option<Vec<String>>,
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Time HMP-GMR and the oracle over families and sizes.
    Scalability {
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        families: Vec<u8>,
        #[arg(long, default_value_t = 1)]
        n_min: usize,
        #[arg(long, default_value_t = 10)]
        n_max: usize,
        #[arg(long, default_value_t = 4)]
        max_nc: usize,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-3)]
        max_prcs: f64,
        /// Oracle budget in milliseconds.
        #[arg(long, default_value_t = 60_000)]
        time_limit: u64,
        /// HMP-GMR runs averaged per cell.
        #[arg(long, default_value_t = 1)]
        repeats: u64,
    },
    /// Exit statuses and accuracy over many seeded runs.
    Convergence {
        #[arg(long)]
        family: u8,
        #[arg(long, default_value_t = 7)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        runs: u64,
        /// Time budget in milliseconds.
        #[arg(long, default_value_t = 20_000)]
        max_time: u64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 2)]
        max_nc: usize,
        #[arg(long, default_value_t = 1e-3)]
        max_prcs: f64,
    },
    /// HMP-GMR against likelihood weighting at matched CPU time.
    LwCompare {
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        families: Vec<u8>,
        #[arg(long, default_value_t = 7)]
        n: usize,
        #[arg(long, default_value_t = 30)]
        runs: u64,
        /// HMP-GMR time budget in milliseconds.
        #[arg(long, default_value_t = 3000)]
        max_time: u64,
        #[arg(long, default_value_t = 1)]
        nc: usize,
        #[arg(long, default_value_t = 10)]
        it: usize,
    },
}

/// A failure carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl std::fmt::Display) -> Self {
        Self { code, message: message.to_string() }
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        let code = match e {
            LoadError::Validation(_) => EXIT_INVALID,
            _ => EXIT_INPUT,
        };
        CliError::new(code, e)
    }
}

impl From<InferenceError> for CliError {
    fn from(e: InferenceError) -> Self {
        let code = match e {
            InferenceError::Settings(_) => EXIT_USAGE,
            InferenceError::Network(_) | InferenceError::Evidence(_) => EXIT_INVALID,
            InferenceError::Schedule(_) => EXIT_RUNTIME,
        };
        CliError::new(code, e)
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        let code = match e {
            OracleError::Infeasible { .. } | OracleError::TimedOut { .. } => EXIT_ORACLE,
            OracleError::Network(_) | OracleError::Evidence(_) | OracleError::ZeroLikelihood => EXIT_INVALID,
            OracleError::Singular => EXIT_RUNTIME,
        };
        CliError::new(code, e)
    }
}

impl From<LwError> for CliError {
    fn from(e: LwError) -> Self {
        let code = match e {
            LwError::EmptyBudget => EXIT_USAGE,
            LwError::Network(_) | LwError::Evidence(_) => EXIT_INVALID,
        };
        CliError::new(code, e)
    }
}

impl From<TunerError> for CliError {
    fn from(e: TunerError) -> Self {
        match e {
            TunerError::Oracle(o) => o.into(),
            TunerError::Lw(l) => l.into(),
            TunerError::Inference(i) => i.into(),
            TunerError::LeafFraction(_) | TunerError::Bounds => CliError::new(EXIT_USAGE, e),
            TunerError::NoCandidates | TunerError::BadCandidate(_) => CliError::new(EXIT_INVALID, e),
            _ => CliError::new(EXIT_RUNTIME, e),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Spec(_) | ExperimentError::Empty(_) => CliError::new(EXIT_USAGE, e),
            ExperimentError::Oracle(o) => o.into(),
            ExperimentError::Evidence(t) => t.into(),
            ExperimentError::Inference(i) => i.into(),
            ExperimentError::Lw(l) => l.into(),
            _ => CliError::new(EXIT_RUNTIME, e),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::new(EXIT_INVALID, e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(EXIT_RUNTIME, e)
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns its exit code. Results go to `out`, diagnostics to `err`.
pub fn dispatch<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    configure_threads();
    match run(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn configure_threads() {
    let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).unwrap_or(0);
    if threads > 0 {
        // Fails only if the pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::new(EXIT_INPUT, format!("cannot read {}: {e}", path.display())))
}

fn read_evidence(path: Option<&Path>) -> Result<Evidence, CliError> {
    match path {
        None => Ok(Evidence::new()),
        Some(p) => Evidence::from_json(&read(p)?)
            .map_err(|e| CliError::new(EXIT_INPUT, format!("bad evidence {}: {e}", p.display()))),
    }
}

fn read_beliefs(path: &Path) -> Result<Beliefs, CliError> {
    beliefs_from_json(&read(path)?).map_err(|e| CliError::new(EXIT_INPUT, format!("bad beliefs {}: {e}", path.display())))
}

fn positive_ms(ms: u64, flag: &str) -> Result<Duration, CliError> {
    if ms == 0 {
        return Err(CliError::new(EXIT_USAGE, format!("{flag} must be positive")));
    }
    Ok(Duration::from_millis(ms))
}

/// Writes `text` to `--out` when given, otherwise to `out`.
fn emit(cli: &Cli, out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, text)?;
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

/// Output of `infer`. `status` is an HMP-GMR status, `exact`, or for LW
/// `ok`/`degenerate`.
#[derive(Debug, Serialize)]
pub struct InferOutput {
    pub algorithm: &'static str,
    pub status: String,
    pub iterations: Option<usize>,
    pub samples: Option<usize>,
    pub elapsed_ms: f64,
    pub beliefs: Beliefs,
}

fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate { family, n } => {
            let spec = FamilySpec::new(*family, *n, cli.seed).map_err(|e: SpecError| CliError::new(EXIT_USAGE, e))?;
            let net = generate_family(&spec).map_err(|e| CliError::new(EXIT_USAGE, e))?;
            emit(cli, out, &network_to_json(&net))
        }
        Command::Infer(a) => {
            let result = infer(a, cli.seed)?;
            emit(cli, out, &to_json(&result))
        }
        Command::Tune(a) => tune_cmd(cli, a, out),
        Command::Cycles { net } => {
            let net = load_network(net)?;
            writeln!(out, "{}", count_cycles(&net))?;
            Ok(())
        }
        Command::Bench { experiment } => {
            let report = bench(cli, experiment)?;
            match &cli.out {
                Some(dir) => {
                    let (rows, summary) = report.write_dir(dir)?;
                    writeln!(out, "{}\n{}", rows.display(), summary.display())?;
                }
                None if cli.format == Format::Json => out.write_all(to_json(&report).as_bytes())?,
                None => report.write_rows_csv(&mut *out)?,
            }
            Ok(())
        }
        Command::Compare { reference, approx, evidence } => {
            let r = read_beliefs(reference)?;
            let a = read_beliefs(approx)?;
            let ev = read_evidence(Some(evidence))?;
            let report = error_report(&r, &a, &ev)?;
            emit(cli, out, &to_json(&report))
        }
    }
}

/// Runs one `infer` request.
pub fn infer(a: &InferArgs, seed: u64) -> Result<InferOutput, CliError> {
    let max_time = positive_ms(a.max_time, "--max-time")?;
    let settings = RunSettings::new(max_time, a.max_iter, a.max_nc).with_max_prcs(a.max_prcs);
    settings.check()?;
    if a.samples == Some(0) {
        return Err(CliError::new(EXIT_USAGE, "--samples must be positive"));
    }
    let net: HybridNetwork = load_network(&a.net)?;
    let ev = read_evidence(a.evidence.as_deref())?;
    Ok(match a.algo {
        Algo::HmpGmr => {
            let r = run_hmp_gmr(&net, &ev, &settings)?;
            InferOutput {
                algorithm: "hmp-gmr",
                status: r.status.as_str().into(),
                iterations: Some(r.iterations),
                samples: None,
                elapsed_ms: millis(r.elapsed),
                beliefs: r.beliefs,
            }
        }
        Algo::Exact => {
            let start = std::time::Instant::now();
            let beliefs = exact_posteriors(&net, &ev)?;
            InferOutput {
                algorithm: "exact",
                status: "exact".into(),
                iterations: None,
                samples: None,
                elapsed_ms: millis(start.elapsed()),
                beliefs,
            }
        }
        Algo::Lw => {
            let budget = a.samples.map(SampleBudget::Samples).unwrap_or(SampleBudget::Time(max_time));
            let r = likelihood_weighting(&net, &ev, budget, seed)?;
            InferOutput {
                algorithm: "lw",
                status: if r.degenerate { "degenerate" } else { "ok" }.into(),
                iterations: None,
                samples: Some(r.samples),
                elapsed_ms: millis(r.elapsed),
                beliefs: r.beliefs,
            }
        }
    })
}

fn tune_cmd(cli: &Cli, a: &TuneArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let settings = TuneSettings::new(positive_ms(a.max_time, "--max-time")?, a.samples, a.ul_nc, a.ul_it);
    if a.samples == 0 || a.ul_nc == 0 || a.ul_it == 0 {
        return Err(CliError::new(EXIT_USAGE, "--samples, --ul-nc and --ul-it must be at least 1"));
    }
    if !(a.leaf_fraction > 0.0 && a.leaf_fraction <= 1.0) {
        return Err(CliError::new(EXIT_USAGE, "--leaf-fraction must be in (0, 1]"));
    }
    let net = load_network(&a.net)?;
    let mut sampler = EvidenceSampler::new(cli.seed, a.leaf_fraction);
    if let Some(c) = &a.candidates {
        sampler = sampler.with_candidates(c.clone());
    }
    let reference = match a.reference {
        ReferenceKind::Exact => Reference::exact(),
        ReferenceKind::Lw => Reference::Lw { samples: a.lw_samples, seed: cli.seed },
    };
    let result = tune(&net, &settings, &reference, &sampler)?;
    match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("tune.json"), to_json(&result))?;
            result.write_csv(std::fs::File::create(dir.join("grid.csv"))?)?;
            writeln!(out, "best nc={} it={}", result.best_nc, result.best_it)?;
        }
        None if cli.format == Format::Csv => result.write_csv(&mut *out)?,
        None => out.write_all(to_json(&result).as_bytes())?,
    }
    Ok(())
}

fn bench(cli: &Cli, cmd: &BenchCommand) -> Result<ExperimentReport, CliError> {
    let archive = cli.out.as_ref().map(|d| d.join("runs"));
    let report = match cmd {
        BenchCommand::Scalability { families, n_min, n_max, max_nc, max_iter, max_prcs, time_limit, repeats } => {
            if n_min > n_max || *n_min == 0 {
                return Err(CliError::new(EXIT_USAGE, "need 1 <= --n-min <= --n-max"));
            }
            let mut cfg =
                ScalabilityConfig::new(families.clone(), (*n_min..=*n_max).collect(), positive_ms(*time_limit, "--time-limit")?);
            cfg.settings.max_nc = *max_nc;
            cfg.settings.max_iteration = *max_iter;
            cfg.settings.max_prcs = *max_prcs;
            cfg.settings.check()?;
            cfg.repeats = *repeats;
            cfg.seed = cli.seed;
            cfg.archive = archive;
            run_scalability(&cfg)?
        }
        BenchCommand::Convergence { family, n, runs, max_time, max_iter, max_nc, max_prcs } => {
            let mut cfg = ConvergenceConfig::new(*family, *n, *runs);
            cfg.settings.max_time = positive_ms(*max_time, "--max-time")?;
            cfg.settings.max_iteration = *max_iter;
            cfg.settings.max_nc = *max_nc;
            cfg.settings.max_prcs = *max_prcs;
            cfg.settings.check()?;
            cfg.seed = cli.seed;
            cfg.archive = archive;
            run_convergence_study(&cfg)?
        }
        BenchCommand::LwCompare { families, n, runs, max_time, nc, it } => {
            let mut cfg = LwComparisonConfig::new(families.clone(), *n, *runs, positive_ms(*max_time, "--max-time")?);
            RunSettings::new(cfg.max_time, *it, *nc).check()?;
            cfg.nc = *nc;
            cfg.it = *it;
            cfg.seed = cli.seed;
            cfg.archive = archive;
            run_lw_comparison(&cfg)?
        }
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = dispatch(std::iter::once("cg-infer").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn unknown_flag_is_a_usage_error() {
        assert_eq!(run_args(&["cycles", "--bogus"]).0, EXIT_USAGE);
        assert_eq!(run_args(&[]).0, EXIT_USAGE);
    }

    #[test]
    fn help_is_success() {
        let (code, out, _) = run_args(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("infer"));
    }

    #[test]
    fn missing_file_is_an_input_error() {
        let (code, _, err) = run_args(&["cycles", "--net", "/nonexistent/net.json"]);
        assert_eq!(code, EXIT_INPUT, "{err}");
    }

    #[test]
    fn bad_family_is_a_usage_error() {
        assert_eq!(run_args(&["generate", "--family", "9", "--n", "2"]).0, EXIT_USAGE);
    }

    #[test]
    fn generate_prints_a_loadable_network() {
        let (code, out, _) = run_args(&["generate", "--family", "2", "--n", "3", "--seed", "4"]);
        assert_eq!(code, EXIT_OK);
        let net = crate::network::network_from_json(&out).unwrap();
        assert_eq!(net.name(), "family2-n3-seed4");
    }
}
