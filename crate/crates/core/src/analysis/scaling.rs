//! The parabolic rescaling `u_l(x, t) = l^N u(l x, l^2 t)`,
//! `v_l(x, t) = v(l x, l^2 t)`, which maps solutions onto solutions of the
//! system with `xi` replaced by `xi l^{-N}`.
//!
//! The rescaled run lives on the box of half-width `L / l` with the same
//! number of points, so node `j` of the rescaled grid sits at `1/l` times
//! node `j` of the base grid and no interpolation is needed.

use serde::Serialize;

use crate::analysis::diagnostics::{DiagnosticsSpec, NullSink};
use crate::dynamics::{SimParams, State};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, SpectralField};
use crate::norms::{mass, vector_lp_norm, LpExponent};
use crate::stepper::{run, StepPolicy};

/// Parameters of the rescaled system integrated up to `t_check`. Time-like
/// policy entries shrink by `l^2`; `epsilon` shrinks by `l^2` as well so
/// that the fourth-order term scales like the others.
pub fn rescale_params(base: &SimParams, lambda: f64, t_check: f64) -> Result<SimParams> {
    check_lambda(lambda)?;
    let dim = base.grid.dim();
    let l2 = lambda * lambda;
    let grid = Grid::new(dim, base.grid.half_width() / lambda, base.grid.n())?;
    let policy = StepPolicy {
        dt_init: base.policy.dt_init / l2,
        dt_max: base.policy.dt_max / l2,
        record_every: base.policy.record_every / l2,
        ..base.policy.clone()
    };
    SimParams::new(
        base.chi,
        base.xi * lambda.powi(-(dim as i32)),
        base.epsilon / l2,
        grid,
        policy,
        t_check,
    )
}

/// `(l^N u0(l x), v0(l x))` on `grid`, which must be the base grid shrunk by `l`.
pub fn rescale_initial_state(initial: &State, grid: &Grid, lambda: f64) -> Result<State> {
    check_lambda(lambda)?;
    let base = initial.grid();
    if grid.dim() != base.dim() || grid.n() != base.n() || grid.half_width() * lambda != base.half_width() {
        return Err(Error::InvalidArgument(
            "rescaled grid is not aligned with the base grid".into(),
        ));
    }
    let factor = lambda.powi(base.dim() as i32);
    State::new(
        Field::new(grid, initial.u.values().iter().map(|x| factor * x).collect())?,
        Field::new(grid, initial.v.values().to_vec())?,
        initial.t,
    )
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("scale factor must be positive, got {lambda}")))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    pub lambda: f64,
    pub t_check: f64,
    /// `max |l^N u(l x, l^2 t) - u_l(x, t)|`.
    pub residual_u: f64,
    /// `max |v(l x, l^2 t) - v_l(x, t)|`.
    pub residual_v: f64,
    pub residual: f64,
    /// Relative gap between `||u_l0||_1` and `||u0||_1`.
    pub mass_identity_gap: f64,
    /// Relative gap in `||grad v_l(t)||_r = l^{1 - N/r} ||grad v(l^2 t)||_r`,
    /// worst over `r` in `{1, 2, inf}`.
    pub gradient_identity_gap: f64,
}

/// Integrates the base problem to `l^2 t_check` and the rescaled one to
/// `t_check` and compares them node by node.
pub fn scaling_residual(
    base: &SimParams,
    initial: &State,
    lambda: f64,
    t_check: f64,
    spec: &DiagnosticsSpec,
) -> Result<ScalingReport> {
    if !(t_check.is_finite() && t_check >= 0.0) {
        return Err(Error::InvalidArgument(format!("t_check must be >= 0, got {t_check}")));
    }
    let scaled = rescale_params(base, lambda, t_check)?;
    let scaled_initial = rescale_initial_state(initial, &scaled.grid, lambda)?;
    let mut base_params = base.clone();
    base_params.t_final = lambda * lambda * t_check;

    let (a, b) = rayon::join(
        || run(&base_params, initial.clone(), spec, &mut NullSink),
        || run(&scaled, scaled_initial.clone(), spec, &mut NullSink),
    );
    let (a, b) = (a?.final_state, b?.final_state);

    let factor = lambda.powi(base.grid.dim() as i32);
    let residual_u = max_diff(a.u.values().iter().map(|x| factor * x), b.u.values());
    let residual_v = max_diff(a.v.values().iter().copied(), b.v.values());

    let m0 = mass(&initial.u);
    let m1 = mass(&scaled_initial.u);
    let mass_identity_gap = relative_gap(m1, m0);

    let dim = base.grid.dim() as f64;
    let grad_a = gradient(&a.v);
    let grad_b = gradient(&b.v);
    let mut gradient_identity_gap: f64 = 0.0;
    for r in [LpExponent::ONE, LpExponent::TWO, LpExponent::INFINITY] {
        let lhs = vector_lp_norm(&grad_b, r)?;
        let rhs = lambda.powf(1.0 - dim * r.reciprocal()) * vector_lp_norm(&grad_a, r)?;
        gradient_identity_gap = gradient_identity_gap.max(relative_gap(lhs, rhs));
    }

    Ok(ScalingReport {
        lambda,
        t_check,
        residual_u,
        residual_v,
        residual: residual_u.max(residual_v),
        mass_identity_gap,
        gradient_identity_gap,
    })
}

fn gradient(f: &Field) -> Vec<Field> {
    f.to_spectral().gradient().iter().map(SpectralField::to_physical).collect()
}

fn max_diff(a: impl Iterator<Item = f64>, b: &[f64]) -> f64 {
    a.zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
