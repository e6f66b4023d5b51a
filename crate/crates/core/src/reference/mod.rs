//! Ground truth and baseline inference: the exact enumeration oracle and
//! likelihood weighting.

mod exact;
mod lw;

pub use exact::{
    condition_gaussian, enumerated_configurations, exact_posteriors, exact_posteriors_with, joint_gaussian_for_config,
    MultivariateGaussian, OracleError, OracleOptions, DEFAULT_MAX_CONFIGS,
};
pub use lw::{forward_sample, kde_mixture, likelihood_weighting, likelihood_weighting_with, LwError, LwOutput, LwSettings, SampleBudget, LW_MAX_COMPONENTS};
