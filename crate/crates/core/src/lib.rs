//! Inference for conditional linear Gaussian Bayesian networks.
//!
//! The main entry point is [`run_hmp_gmr`], a loopy pi/lambda message passing
//! scheme that keeps continuous messages as Gaussian mixtures and caps their
//! size by greedy moment-matched merging. Around it sit an exact enumeration
//! oracle, a likelihood weighting sampler, accuracy metrics, a settings tuner
//! and a benchmark harness with four generated network families.

pub mod belief;
pub mod cli;
pub mod clock;
pub mod engine;
pub mod harness;
pub mod mixture;
pub mod metrics;
pub mod network;
pub mod reference;
pub mod tuner;

pub use belief::{Belief, Beliefs};
pub use engine::{belief_difference, run_hmp_gmr, InferenceError, RunResult, RunSettings, Status};
pub use mixture::{GaussianComponent, GaussianMixture};
pub use network::{Evidence, HybridNetwork, Observation};
