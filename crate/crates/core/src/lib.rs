//! Fitting multiplicative power-law scour-depth equations with particle
//! swarm optimization.
//!
//! The crate covers the whole workflow: [`data`] ingests laboratory or field
//! measurements and reduces them to dimensionless features, [`swarm`] is the
//! bounded minimizer, [`model`] defines the power-law family and its RMSE
//! objective, [`baseline`] evaluates published equations, [`metrics`] scores
//! predictions and [`workbench`] ties these into sensitivity and comparison
//! runs.

pub mod baseline;
pub mod data;
pub mod metrics;
pub mod model;
pub mod swarm;
pub mod workbench;

pub use baseline::{evaluate_baseline, run_baseline_suite, BaselineId, BaselineOptions};
pub use data::{
    derive_features, DimensionlessRecord, Observation, RawScourRecord, Scale, ScaleInput,
};
pub use metrics::{compute_metrics, MetricReport, PredictionPair, Units};
pub use model::{fit, CoefficientBounds, FeatureId, ModelSpec, PowerLawModel};
pub use swarm::{optimize, OptimizationResult, SearchBounds, SwarmConfig};
pub use workbench::{run_comparison, run_sensitivity, Dataset, WorkbenchConfig};
