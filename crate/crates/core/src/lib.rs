//! Forward-forward training with layer-local goodness objectives.
//!
//! Trainable blocks are single-kernel dilated convolutions. Between blocks an
//! arbitrary fixed transform can be inserted; [`fiber`] provides one built on a
//! coupled-mode simulation of nonlinear propagation in a graded-index multimode
//! fiber. The output layer is a closed-form ridge classifier ([`readout`]).
//!
//! Module map:
//!
//! - [`data`]: IDX parsing, seeded splits, 32×32 canvases and label embedding.
//! - [`net`]: dilated convolution, goodness, layer-local training, the
//!   end-to-end backprop baseline.
//! - [`fiber`]: mode basis, Kerr tensor, disorder coupling, CW and time-resolved
//!   propagation, phase encoding and intensity readout.
//! - [`readout`]: ridge classifier, regularization sweep, metrics.
//! - [`pipeline`]: experiment orchestration, stage caching, checkpoints, reports.

pub mod data;
pub mod error;
pub mod fiber;
pub mod hashing;
pub mod net;
pub mod pipeline;
pub mod readout;

pub use error::{Error, Result};

/// Side length of every stage representation.
pub const SIDE: usize = 32;
/// Number of features per stage representation.
pub const FEATURES: usize = SIDE * SIDE;
/// Number of classes.
pub const CLASSES: usize = 10;
