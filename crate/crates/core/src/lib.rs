//! Multi-objective Bayesian optimization of keyword-spotting architectures
//! (accuracy versus model size) with pluggable initial designs, including an
//! objective-aware simulated-annealing initializer.
//!
//! The pipeline is: a [`space::SearchSpace`] of configurations, an
//! [`objectives::ObjectiveProblem`] mapping configurations to two minimized
//! objectives, an initializer from [`init`], Gaussian-process surrogates from
//! [`gp`], exact expected hypervolume improvement from [`acquisition`], and
//! the loop in [`mobo`]. [`pareto`] and [`stats`] score finished runs and
//! [`harness`] orchestrates multi-seed comparisons.

pub mod acquisition;
pub mod error;
pub mod gp;
pub mod harness;
pub mod init;
pub mod mobo;
pub mod objectives;
pub mod pareto;
pub mod sobol;
pub mod space;
pub mod stats;

#[cfg(test)]
mod test_util;

pub use acquisition::{ehvi_exact, propose_next, AcquisitionConfig, AcquisitionState};
pub use error::{Error, Result};
pub use gp::{GpModel, KernelParams, Prediction};
pub use harness::{compare, ComparisonReport, ExperimentConfig};
pub use init::{InitMethod, InitializerSpec, OasiParams};
pub use mobo::{run_mobo, ArchiveEntry, FairnessMode, Phase, RunOptions, RunRecord};
pub use objectives::{dscnn_size_bytes, synthetic_accuracy, Bounds, ObjectiveProblem, ObjectiveVector};
pub use pareto::{generational_distance, hypervolume_2d, non_dominated, ParetoFront};
pub use space::{ConfigId, Configuration, DimensionKind, DimensionSpec, SearchSpace, Value};
pub use stats::{dunn_holm, holm_adjust, kruskal_wallis, GroupedSamples, StatReport};
