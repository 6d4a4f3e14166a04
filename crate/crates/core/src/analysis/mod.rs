//! Post-processing that turns trajectories into decay, convergence, energy
//! and scaling checks.

pub mod diagnostics;
pub mod energy;
pub mod gn;
pub mod kernel;
pub mod rates;
pub mod scaling;

pub use diagnostics::{
    compute_record, Component, DiagnosticsRecord, DiagnosticsSink, DiagnosticsSpec, KernelOptions,
};
pub use energy::{
    check_energy_inequality, decay_bound_fit, energy_h, energy_phi, smallness_threshold, EnergyReport,
};
pub use gn::{gn_theta, GnExponent};
pub use kernel::{boundary_tail, kernel_distance, state_kernel_distance};
pub use rates::{fit_decay_exponent, fit_power_law, RateFit};
pub use scaling::{rescale_initial_state, rescale_params, scaling_residual, ScalingReport};

/// Boundary-shell amplitude (relative to the field max) above which a run is
/// flagged as feeling the box.
pub const TRUNCATION_TAIL_LIMIT: f64 = 1e-8;
