//! Time integration with an exact linear propagator.
//!
//! Both equations are advanced in Fourier space. The diagonal linear part
//! `exp((-|k|^2 - eps |k|^4) dt)` is applied exactly and the taxis terms with
//! an explicit two-stage midpoint rule:
//!
//! ```text
//! w_half = E(dt/2) (w + dt/2 N(w))
//! w_next = E(dt) w + dt E(dt/2) N(w_half)
//! ```
//!
//! The zero mode of `N` vanishes identically and `E(dt)` is one there, so the
//! masses are carried through every step unchanged.

use serde::{Deserialize, Serialize};

use crate::analysis::diagnostics::{compute_record, DiagnosticsRecord, DiagnosticsSink, DiagnosticsSpec};
use crate::analysis::energy::{energy_phi, smallness_threshold};
use crate::dynamics::{nonlinear_terms, SimParams, State};
use crate::error::{Error, Result};
use crate::grid::{Field, SpectralField};
use crate::norms::mass;

/// Relative mass drift allowed across a run before it is flagged.
pub const MASS_DRIFT_LIMIT: f64 = 1e-10;

/// Relative undershoot below zero tolerated in a density.
pub const NEGATIVE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepPolicy {
    pub dt_init: f64,
    pub dt_max: f64,
    pub cfl_safety: f64,
    pub max_steps: usize,
    /// Simulation-time spacing of diagnostics records.
    pub record_every: f64,
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy {
            dt_init: 1e-3,
            dt_max: 0.05,
            cfl_safety: 0.5,
            max_steps: 10_000_000,
            record_every: 0.1,
        }
    }
}

impl StepPolicy {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        positive("dt_init", self.dt_init)?;
        positive("dt_max", self.dt_max)?;
        positive("record_every", self.record_every)?;
        if self.dt_init > self.dt_max {
            return Err(Error::InvalidArgument(format!(
                "dt_init ({}) exceeds dt_max ({})",
                self.dt_init, self.dt_max
            )));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Diagonal propagators for one step size.
struct Propagators {
    dt: f64,
    u_half: Vec<f64>,
    u_full: Vec<f64>,
    v_half: Vec<f64>,
    v_full: Vec<f64>,
}

impl Propagators {
    fn new(params: &SimParams, dt: f64) -> Self {
        let k2 = params.grid.k_squared();
        let build = |sym: &dyn Fn(f64) -> f64, h: f64| k2.iter().map(|&k| (sym(k) * h).exp()).collect();
        let us = |k: f64| params.u_symbol(k);
        let vs = |k: f64| params.v_symbol(k);
        Propagators {
            dt,
            u_half: build(&us, 0.5 * dt),
            u_full: build(&us, dt),
            v_half: build(&vs, 0.5 * dt),
            v_full: build(&vs, dt),
        }
    }
}

struct Integrator<'a> {
    params: &'a SimParams,
    cache: Option<Propagators>,
}

impl<'a> Integrator<'a> {
    fn new(params: &'a SimParams) -> Self {
        Integrator { params, cache: None }
    }

    fn advance(&mut self, u: &SpectralField, v: &SpectralField, dt: f64) -> (SpectralField, SpectralField) {
        if self.cache.as_ref().is_none_or(|c| c.dt.to_bits() != dt.to_bits()) {
            self.cache = Some(Propagators::new(self.params, dt));
        }
        let prop = self.cache.as_ref().expect("propagators just built");

        let (nu0, nv0) = nonlinear_terms(u, v, self.params);
        let u_mid = predictor(u, &nu0, &prop.u_half, dt);
        let v_mid = predictor(v, &nv0, &prop.v_half, dt);
        let (nu1, nv1) = nonlinear_terms(&u_mid, &v_mid, self.params);
        (
            corrector(u, &nu1, &prop.u_full, &prop.u_half, dt),
            corrector(v, &nv1, &prop.v_full, &prop.v_half, dt),
        )
    }
}

fn predictor(w: &SpectralField, n: &SpectralField, half: &[f64], dt: f64) -> SpectralField {
    let mut out = w.clone();
    for ((o, &nk), &e) in out.coeffs_mut().iter_mut().zip(n.coeffs()).zip(half) {
        *o = (*o + nk * (0.5 * dt)) * e;
    }
    out
}

fn corrector(w: &SpectralField, n: &SpectralField, full: &[f64], half: &[f64], dt: f64) -> SpectralField {
    let mut out = w.clone();
    for (((o, &nk), &ef), &eh) in out.coeffs_mut().iter_mut().zip(n.coeffs()).zip(full).zip(half) {
        *o = *o * ef + nk * (dt * eh);
    }
    out
}

fn coeffs_finite(f: &SpectralField) -> bool {
    f.coeffs().iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

/// One step of size `dt`. The caller keeps `dt <= stable_dt`.
pub fn step(state: &State, params: &SimParams, dt: f64) -> Result<State> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if !state.grid().same_as(&params.grid) {
        return Err(Error::GridMismatch);
    }
    let mut integrator = Integrator::new(params);
    let (u, v) = integrator.advance(&state.u.to_spectral(), &state.v.to_spectral(), dt);
    let t = state.t + dt;
    if !(coeffs_finite(&u) && coeffs_finite(&v)) {
        return Err(Error::BlowUpDetected { t });
    }
    let next = State {
        u: u.to_physical(),
        v: v.to_physical(),
        t,
    };
    if !next.is_finite() {
        return Err(Error::BlowUpDetected { t });
    }
    Ok(next)
}

fn max_gradient(f: &SpectralField) -> f64 {
    let grads: Vec<Field> = f.gradient().iter().map(|g| g.to_physical()).collect();
    (0..f.grid().len())
        .map(|i| grads.iter().map(|g| g.values()[i] * g.values()[i]).sum::<f64>())
        .fold(0.0, f64::max)
        .sqrt()
}

fn cfl_dt(u: &SpectralField, v: &SpectralField, params: &SimParams) -> f64 {
    let mut speed = 0.0;
    if params.chi != 0.0 {
        speed += params.chi * max_gradient(v);
    }
    if params.xi != 0.0 {
        speed += params.xi * max_gradient(u);
    }
    let dt = params.policy.cfl_safety * params.grid.dx() / speed.max(1e-30);
    dt.min(params.policy.dt_max)
}

/// `cfl_safety dx / max(1e-30, chi ||grad v||_inf + xi ||grad u||_inf)`,
/// capped by `dt_max`.
pub fn stable_dt(state: &State, params: &SimParams) -> f64 {
    cfl_dt(&state.u.to_spectral(), &state.v.to_spectral(), params)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct RunFlags {
    /// Largest relative mass drift seen at a record.
    pub mass_drift: f64,
    pub mass_drift_exceeded: bool,
    /// Most negative density relative to its field max.
    pub min_relative_density: f64,
    pub negative_density: bool,
    pub max_boundary_tail: f64,
    pub truncation_suspect: bool,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub final_state: State,
    pub series: Vec<DiagnosticsRecord>,
    pub steps: usize,
    pub phi0: f64,
    pub smallness_threshold: f64,
    /// Whether `phi(0)` was below the smallness threshold.
    pub small_data: bool,
    pub flags: RunFlags,
}

/// Integrates `initial` to `params.t_final`, emitting a record at `t = 0`,
/// at every multiple of `record_every`, and at `t_final`.
///
/// Records already handed to `sink` stay there when the run fails.
pub fn run(
    params: &SimParams,
    initial: State,
    spec: &DiagnosticsSpec,
    sink: &mut dyn DiagnosticsSink,
) -> Result<RunSummary> {
    params.validate()?;
    if !initial.grid().same_as(&params.grid) {
        return Err(Error::GridMismatch);
    }
    if !initial.is_finite() {
        return Err(Error::NonFiniteInitialData);
    }
    for f in [&initial.u, &initial.v] {
        let tol = NEGATIVE_TOLERANCE * f.max_abs();
        let min = f.min();
        if min < -tol {
            return Err(Error::NegativeInitialData { min, tol });
        }
    }
    let phi0 = energy_phi(&initial);
    if !phi0.is_finite() {
        return Err(Error::NonFiniteInitialData);
    }
    let threshold = smallness_threshold(params.chi, params.xi, spec.c_star)?;
    let masses = (mass(&initial.u), mass(&initial.v));

    let mut flags = RunFlags::default();
    let mut series = Vec::new();
    let mut emit = |state: &State, flags: &mut RunFlags, series: &mut Vec<DiagnosticsRecord>| -> Result<()> {
        let rec = compute_record(state, spec, masses)?;
        let drift = [(rec.mass_u, masses.0), (rec.mass_v, masses.1)]
            .iter()
            .map(|&(m, m0)| if m0 != 0.0 { ((m - m0) / m0).abs() } else { m.abs() })
            .fold(0.0, f64::max);
        flags.mass_drift = flags.mass_drift.max(drift);
        flags.mass_drift_exceeded |= drift > MASS_DRIFT_LIMIT;
        for f in [&state.u, &state.v] {
            let scale = f.max_abs();
            if scale > 0.0 {
                let rel = f.min() / scale;
                flags.min_relative_density = flags.min_relative_density.min(rel);
                flags.negative_density |= rel < -NEGATIVE_TOLERANCE;
            }
        }
        flags.max_boundary_tail = flags.max_boundary_tail.max(rec.boundary_tail);
        flags.truncation_suspect |= rec.boundary_tail > crate::analysis::TRUNCATION_TAIL_LIMIT;
        sink.record(&rec)?;
        series.push(rec);
        Ok(())
    };

    emit(&initial, &mut flags, &mut series)?;

    let mut u_hat = initial.u.to_spectral();
    let mut v_hat = initial.v.to_spectral();
    let t_start = initial.t;
    let t_end = t_start + params.t_final;
    let mut t = t_start;
    let mut integrator = Integrator::new(params);
    let mut steps = 0usize;
    let mut record_index = 1u64;
    let mut current = initial;

    while t < t_end {
        let target = (t_start + record_index as f64 * params.policy.record_every).min(t_end);
        while t < target {
            let mut dt = cfl_dt(&u_hat, &v_hat, params);
            if steps == 0 {
                dt = dt.min(params.policy.dt_init);
            }
            let remaining = target - t;
            let landing = dt >= remaining * (1.0 - 1e-9);
            if landing {
                dt = remaining;
            }
            if steps >= params.policy.max_steps {
                return Err(Error::StepLimitExceeded {
                    max_steps: params.policy.max_steps,
                    t,
                    dt,
                });
            }
            let (u_next, v_next) = integrator.advance(&u_hat, &v_hat, dt);
            steps += 1;
            t = if landing { target } else { t + dt };
            if !(coeffs_finite(&u_next) && coeffs_finite(&v_next)) {
                return Err(Error::BlowUpDetected { t });
            }
            u_hat = u_next;
            v_hat = v_next;
        }
        current = State {
            u: u_hat.to_physical(),
            v: v_hat.to_physical(),
            t,
        };
        if !current.is_finite() {
            return Err(Error::BlowUpDetected { t });
        }
        emit(&current, &mut flags, &mut series)?;
        record_index += 1;
    }

    Ok(RunSummary {
        final_state: current,
        series,
        steps,
        phi0,
        smallness_threshold: threshold,
        small_data: phi0 <= threshold,
        flags,
    })
}
