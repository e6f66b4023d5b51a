//! Benchmark families, cycle counting and the experiment drivers.

mod cycles;
mod experiments;
mod families;

pub use cycles::{count_cycles, elementary_cycles, skeleton};
pub use families::{generate_family, FamilySpec, SpecError, DISCRETE_STATES};
pub use experiments::{
    experiment_evidence, matched_lw, measurement_nodes, run_convergence_study, run_lw_comparison, run_scalability,
    ConvergenceConfig, ExperimentError, ExperimentKind, ExperimentReport, LwComparisonConfig, ReportRow,
    ScalabilityConfig, SummaryStat, ALGO_EXACT, ALGO_HMP, ALGO_LW, TIME_MATCH_TOLERANCE,
};
