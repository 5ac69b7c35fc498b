//! Experiment orchestration: configuration, per-stage caching of fixed
//! transforms, checkpoints and reports.

mod cache;
mod checkpoint;
mod config;
mod experiment;
mod hooks;
mod report;

pub use cache::{StageCache, StageData};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, Model, CHECKPOINT_VERSION};
pub use config::{Architecture, ExperimentConfig, HookKind, OpticsSettings, CACHE_DIR_ENV};
pub use experiment::{
    evaluate_checkpoint, expected_transform_calls, fiber_for, mix, negative_class, run_experiment, run_on,
    stage_zero, sweep_checkpoint, Dataset, Outcome, Split,
};
pub use hooks::{CountingHook, FiberHook};
pub use report::{
    confusion_csv, emit_report, estimate_flops, reference_row, FlopEstimate, ReferenceRow, Report, SplitMetrics,
    FLOPS_FORMULA,
};
