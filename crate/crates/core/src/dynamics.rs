//! Right-hand side of the cross-diffusion system
//!
//! ```text
//! u_t = Delta u - eps Delta^2 u - chi div(u grad v)
//! v_t = Delta v + xi div(v grad u)
//! ```
//!
//! evaluated in divergence form so that both tendencies have an exactly
//! vanishing zero Fourier mode.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, SpectralField};
use crate::stepper::StepPolicy;

/// Orientation of a taxis flux.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    /// Attraction up the gradient, `-coeff div(a grad b)`.
    Minus,
    /// Repulsion down the gradient, `+coeff div(a grad b)`.
    Plus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Minus => -1.0,
            Sign::Plus => 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimParams {
    /// Prey-taxis strength of the predator density `u`.
    pub chi: f64,
    /// Predator-avoidance strength of the prey density `v`.
    pub xi: f64,
    /// Weight of the `Delta^2` regularization in the `u` equation.
    pub epsilon: f64,
    pub grid: Grid,
    pub policy: StepPolicy,
    pub t_final: f64,
}

impl SimParams {
    pub fn new(chi: f64, xi: f64, epsilon: f64, grid: Grid, policy: StepPolicy, t_final: f64) -> Result<Self> {
        let p = SimParams {
            chi,
            xi,
            epsilon,
            grid,
            policy,
            t_final,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("chi", self.chi), ("xi", self.xi), ("epsilon", self.epsilon)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be >= 0, got {value}")));
            }
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "t_final must be >= 0, got {}",
                self.t_final
            )));
        }
        self.policy.validate()
    }

    /// Linear symbol of the `u` equation, `-|k|^2 - eps |k|^4`.
    pub fn u_symbol(&self, k2: f64) -> f64 {
        -k2 - self.epsilon * k2 * k2
    }

    /// Linear symbol of the `v` equation, `-|k|^2`.
    pub fn v_symbol(&self, k2: f64) -> f64 {
        -k2
    }
}

/// The pair `(u, v)` at time `t`.
#[derive(Clone, Debug)]
pub struct State {
    pub u: Field,
    pub v: Field,
    pub t: f64,
}

impl State {
    pub fn new(u: Field, v: Field, t: f64) -> Result<Self> {
        if !u.grid().same_as(v.grid()) {
            return Err(Error::GridMismatch);
        }
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidArgument(format!("state time must be >= 0, got {t}")));
        }
        Ok(State { u, v, t })
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

/// `sign * coeff * (a grad b)` with both factors dealiased before the product
/// and the product dealiased after it.
pub fn taxis_flux(a: &Field, b: &Field, coeff: f64, sign: Sign) -> Result<Vec<Field>> {
    if !a.grid().same_as(b.grid()) {
        return Err(Error::GridMismatch);
    }
    let flux = flux_spectral(&a.to_spectral(), &b.to_spectral(), sign.value() * coeff);
    Ok(flux.iter().map(|f| f.to_physical()).collect())
}

pub(crate) fn flux_spectral(a_hat: &SpectralField, b_hat: &SpectralField, factor: f64) -> Vec<SpectralField> {
    let grid = a_hat.grid();
    if factor == 0.0 {
        return (0..grid.dim()).map(|_| SpectralField::zeros(grid)).collect();
    }
    let a = a_hat.dealias().to_physical();
    let b_dealiased = b_hat.dealias();
    (0..grid.dim())
        .map(|axis| {
            let grad = b_dealiased.partial(axis).to_physical();
            let product: Vec<f64> = a
                .values()
                .iter()
                .zip(grad.values())
                .map(|(&x, &y)| factor * x * y)
                .collect();
            Field::from_raw(grid, product).to_spectral().dealias()
        })
        .collect()
}

/// `div(flux)` of the taxis term, in spectral form.
pub(crate) fn taxis_tendency(a_hat: &SpectralField, b_hat: &SpectralField, factor: f64) -> SpectralField {
    if factor == 0.0 {
        return SpectralField::zeros(a_hat.grid());
    }
    SpectralField::divergence(&flux_spectral(a_hat, b_hat, factor))
        .expect("flux has one component per axis")
}

/// The explicit (taxis) parts of both tendencies.
pub(crate) fn nonlinear_terms(
    u_hat: &SpectralField,
    v_hat: &SpectralField,
    params: &SimParams,
) -> (SpectralField, SpectralField) {
    let nu = taxis_tendency(u_hat, v_hat, Sign::Minus.value() * params.chi);
    let nv = taxis_tendency(v_hat, u_hat, Sign::Plus.value() * params.xi);
    (nu, nv)
}

/// Full tendencies `(du/dt, dv/dt)`.
pub fn rhs(state: &State, params: &SimParams) -> Result<(Field, Field)> {
    if !state.grid().same_as(&params.grid) {
        return Err(Error::GridMismatch);
    }
    let u_hat = state.u.to_spectral();
    let v_hat = state.v.to_spectral();
    let (nu, nv) = nonlinear_terms(&u_hat, &v_hat, params);
    let du = u_hat.radial_multiply(|k2| params.u_symbol(k2)).add(&nu)?.to_physical();
    let dv = v_hat.radial_multiply(|k2| params.v_symbol(k2)).add(&nv)?.to_physical();
    if !(du.is_finite() && dv.is_finite()) {
        return Err(Error::NonFinite("tendency"));
    }
    Ok((du, dv))
}
