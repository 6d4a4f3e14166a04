//! `H^2` energy `phi`, its dissipation `h`, and checks of the differential
//! inequality that controls them for small data.

use serde::Serialize;

use crate::analysis::diagnostics::DiagnosticsRecord;
use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::grid::Field;

/// Per-record relative slack allowed when checking that `phi` never grows.
pub const MONOTONE_SLACK: f64 = 1e-8;

/// Slack, relative to `h`, in the discrete residual `phi' + h/2`.
pub const RESIDUAL_SLACK: f64 = 1e-6;

fn h2_weight(k2: f64) -> f64 {
    1.0 + k2 + k2 * k2
}

fn grad_h2_weight(k2: f64) -> f64 {
    k2 * h2_weight(k2)
}

fn sq_norm(f: &Field, weight: fn(f64) -> f64) -> f64 {
    f.to_spectral().weighted_energy(weight)
}

/// `phi = ||u||^2_{H^2} + ||v||^2_{H^2}`.
pub fn energy_phi(s: &State) -> f64 {
    sq_norm(&s.u, h2_weight) + sq_norm(&s.v, h2_weight)
}

/// `h = ||grad u||^2_{H^2} + ||grad v||^2_{H^2}`.
pub fn energy_h(s: &State) -> f64 {
    sq_norm(&s.u, grad_h2_weight) + sq_norm(&s.v, grad_h2_weight)
}

/// `1 / (2 c_star (chi^2 + xi^2))`, infinite without coupling.
pub fn smallness_threshold(chi: f64, xi: f64, c_star: f64) -> Result<f64> {
    if !(c_star.is_finite() && c_star > 0.0) {
        return Err(Error::InvalidArgument(format!("C_star must be positive, got {c_star}")));
    }
    let coupling = chi * chi + xi * xi;
    if coupling == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / (2.0 * c_star * coupling))
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyReport {
    /// `phi_{i+1} <= phi_i (1 + MONOTONE_SLACK)` at every record.
    pub phi_nonincreasing: bool,
    /// Largest `phi_{i+1} / phi_i - 1`.
    pub max_relative_increase: f64,
    /// Largest `dphi/dt + h/2` over the record intervals, with `dphi/dt` the
    /// secant slope and `h` the smaller of its endpoint values. When `h` is
    /// monotone on an interval, `phi' + h/2 <= 0` implies this is `<= 0`.
    pub max_residual: f64,
    /// Largest `(dphi/dt + h/2) / h` over intervals with `h > 0`.
    pub max_relative_residual: f64,
    /// Whether every interval satisfies `dphi/dt + h/2 <= RESIDUAL_SLACK * h`.
    pub residual_ok: bool,
    /// Largest `c` with `dphi/dt + c h <= 0` on every interval.
    pub fitted_c: f64,
    /// `phi(t) <= phi(0)` for every record.
    pub bounded_by_initial: bool,
}

pub fn check_energy_inequality(series: &[DiagnosticsRecord]) -> Result<EnergyReport> {
    if series.len() < 3 {
        return Err(Error::InsufficientSamples(format!(
            "energy check needs at least 3 records, got {}",
            series.len()
        )));
    }
    let phi0 = series[0].phi;
    let mut report = EnergyReport {
        phi_nonincreasing: true,
        max_relative_increase: f64::NEG_INFINITY,
        max_residual: f64::NEG_INFINITY,
        max_relative_residual: f64::NEG_INFINITY,
        residual_ok: true,
        fitted_c: f64::INFINITY,
        bounded_by_initial: series.iter().all(|r| r.phi <= phi0 * (1.0 + MONOTONE_SLACK)),
    };
    for pair in series.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let dt = b.t - a.t;
        if dt <= 0.0 {
            continue;
        }
        if a.phi > 0.0 {
            let increase = b.phi / a.phi - 1.0;
            report.max_relative_increase = report.max_relative_increase.max(increase);
            report.phi_nonincreasing &= increase <= MONOTONE_SLACK;
        } else {
            report.phi_nonincreasing &= b.phi <= 0.0;
        }
        let slope = (b.phi - a.phi) / dt;
        let h = a.h.min(b.h);
        let residual = slope + 0.5 * h;
        report.max_residual = report.max_residual.max(residual);
        if h > 0.0 {
            report.max_relative_residual = report.max_relative_residual.max(residual / h);
            report.fitted_c = report.fitted_c.min(-slope / h);
        }
        report.residual_ok &= residual <= RESIDUAL_SLACK * h;
    }
    for v in [
        &mut report.max_relative_increase,
        &mut report.max_residual,
        &mut report.max_relative_residual,
    ] {
        if !v.is_finite() {
            *v = 0.0;
        }
    }
    if !report.fitted_c.is_finite() {
        report.fitted_c = 0.0;
    }
    Ok(report)
}

/// Largest `A` with `phi(t) <= (phi(0)^{-2/N} + (2/N) A t)^{-N/2}` on the whole
/// series, i.e. `min_t (phi(t)^{-2/N} - phi(0)^{-2/N}) N / (2t)`. A nonpositive
/// value means the bound fails for every positive constant.
pub fn decay_bound_fit(series: &[DiagnosticsRecord], dim: usize) -> Result<f64> {
    let first = series
        .first()
        .ok_or_else(|| Error::InsufficientSamples("empty series".into()))?;
    if series.iter().any(|r| !(r.phi > 0.0)) {
        return Err(Error::InvalidArgument("phi must stay positive".into()));
    }
    let n = dim as f64;
    let base = first.phi.powf(-2.0 / n);
    let best = series
        .iter()
        .filter(|r| r.t > first.t)
        .map(|r| (r.phi.powf(-2.0 / n) - base) * n / (2.0 * (r.t - first.t)))
        .fold(f64::INFINITY, f64::min);
    if best.is_infinite() {
        return Err(Error::InsufficientSamples("need a record after t0".into()));
    }
    Ok(best)
}
