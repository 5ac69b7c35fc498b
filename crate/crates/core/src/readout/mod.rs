//! Closed-form ridge classifier output layer and classification metrics.

mod metrics;
mod ridge;

pub use metrics::{default_alpha_grid, evaluate, sweep_regularization, Metrics, SweepPoint, SweepResult};
pub use ridge::{argmax, fit_ridge, predict, signed_targets, FeatureMatrix, RidgeModel, RidgePath};
