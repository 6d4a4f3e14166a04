//! Scaled distance to the mass-weighted heat kernel, and the boundary-shell
//! guard that tells whether the box is still large enough.

use crate::analysis::diagnostics::KernelOptions;
use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::norms::{lp_norm, LpExponent};
use crate::semigroup::{box_heat_kernel_field, KernelSpec};

/// `t^{(dim/2)(1-1/p)} ||f - mass G(., t + t_offset)||_p`.
///
/// `G` is the heat kernel of the periodic box, i.e. the free kernel summed
/// over its periodic images, so a field that the exact semigroup produced
/// from a point mass sits at distance zero.
pub fn kernel_distance(f: &Field, t: f64, p: LpExponent, mass: f64, opts: &KernelOptions) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidArgument(format!("kernel distance needs t > 0, got {t}")));
    }
    let spec = KernelSpec::centered_at(t + opts.t_offset, opts.center.clone())?;
    let g = box_heat_kernel_field(f.grid(), &spec)?;
    let diff = f.zip_with(&g, |a, b| a - mass * b)?;
    let dim = f.grid().dim() as f64;
    Ok(t.powf(0.5 * dim * (1.0 - p.reciprocal())) * lp_norm(&diff, p))
}

/// [`kernel_distance`] of both components at the state's own time.
pub fn state_kernel_distance(s: &State, p: LpExponent, masses: (f64, f64), opts: &KernelOptions) -> Result<(f64, f64)> {
    Ok((
        kernel_distance(&s.u, s.t, p, masses.0, opts)?,
        kernel_distance(&s.v, s.t, p, masses.1, opts)?,
    ))
}

/// Largest `|u|`, `|v|` on the outermost grid shell, each relative to the
/// maximum of its own field. Identically zero fields contribute zero.
pub fn boundary_tail(s: &State) -> f64 {
    shell_ratio(&s.u).max(shell_ratio(&s.v))
}

fn shell_ratio(f: &Field) -> f64 {
    let peak = f.max_abs();
    if peak == 0.0 {
        return 0.0;
    }
    let grid = f.grid();
    let shell = f
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| grid.on_boundary_shell(*i))
        .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    shell / peak
}
