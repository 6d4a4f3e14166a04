//! Pseudo-spectral simulation and verification toolkit for the cross-diffusion
//! system
//!
//! ```text
//! u_t = Delta u - chi div(u grad v) - eps Delta^2 u
//! v_t = Delta v + xi  div(v grad u)
//! ```
//!
//! on a periodic box standing in for the whole space.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod io;
pub mod mild;
pub mod norms;
pub mod semigroup;
pub mod stepper;

pub use dynamics::{SimParams, State};
pub use error::{Error, Result};
pub use grid::{Field, Grid, SpectralField};
pub use norms::LpExponent;
pub use stepper::{run, RunSummary, StepPolicy};
