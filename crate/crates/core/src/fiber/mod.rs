//! Numerical stand-in for nonlinear propagation through a graded-index
//! multimode fiber, used as a fixed transform between trainable blocks.
//!
//! Input features set the phase of a Gaussian beam; the beam is projected onto
//! Hermite-Gaussian fiber modes, propagated through random linear coupling and
//! Kerr nonlinearity, and read out as a pooled intensity image.

mod coupling;
mod encode;
mod geometry;
mod kerr;
mod modes;
mod propagate;
pub mod selfcheck;
mod store;
mod system;

pub use coupling::{build_coupling, CouplingMatrix};
pub use encode::{
    encode_and_project, input_field, phase_map, render_intensity, render_pulse_intensity, PHASE_DEPTH,
};
pub use geometry::{FiberGeometry, OpticsConfig};
pub use kerr::{compute_kerr_tensor, gauss_hermite, GaussHermiteKerr, KerrOperator, KerrTensor};
pub use modes::{
    build_mode_basis, groups_for, hermite_functions, mode_orders, ModeBasis, DEFAULT_BETA2, DEFAULT_GROUP_DELAY,
    NORM_TOLERANCE,
};
pub use propagate::{
    expm_dense, hermitian_phase_matrix, linear_generator, propagate_cw, propagate_time, CwPropagator, ModeState,
    PulseState, STEP_DRIFT_LIMIT,
};
pub use selfcheck::{run_selfcheck, superposition_residuals, SelfCheckReport};
pub use store::{NamedArrays, STORE_VERSION};
pub use system::{optical_transform, FiberSystem};

pub use num_complex::Complex64;
