//! Per-instant diagnostics records and the consumers they are streamed to.

use serde::Serialize;

use crate::analysis::energy::{energy_h, energy_phi};
use crate::analysis::kernel::{boundary_tail, kernel_distance};
use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::norms::{lp_norm, mass, weighted_moment, LpExponent};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    U,
    V,
}

impl std::str::FromStr for Component {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u" | "U" => Ok(Component::U),
            "v" | "V" => Ok(Component::V),
            other => Err(Error::InvalidArgument(format!("unknown component `{other}`"))),
        }
    }
}

/// Comparison kernel used by the scaled heat-kernel distance.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct KernelOptions {
    /// The state at time `t` is compared with `G(., t + t_offset)`.
    pub t_offset: f64,
    pub center: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct DiagnosticsSpec {
    pub p_list: Vec<LpExponent>,
    pub moment_r: Option<f64>,
    pub kernel: KernelOptions,
    /// Constant in the smallness threshold `1 / (2 C (chi^2 + xi^2))`.
    pub c_star: f64,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        DiagnosticsSpec {
            p_list: vec![LpExponent::ONE, LpExponent::TWO, LpExponent::INFINITY],
            moment_r: None,
            kernel: KernelOptions::default(),
            c_star: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentPair {
    pub p: LpExponent,
    pub u: f64,
    pub v: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub lp_norms: Vec<ComponentPair>,
    /// `||u||^2_{H^2} + ||v||^2_{H^2}`.
    pub phi: f64,
    /// `||grad u||^2_{H^2} + ||grad v||^2_{H^2}`.
    pub h: f64,
    /// Scaled heat-kernel distances; absent where the comparison kernel is
    /// undefined (`t + t_offset <= 0` or `t = 0`).
    pub kernel_dist: Vec<Option<ComponentPair>>,
    pub moment_u: Option<f64>,
    pub boundary_tail: f64,
}

impl DiagnosticsRecord {
    pub fn lp(&self, component: Component, p: LpExponent) -> Option<f64> {
        self.lp_norms.iter().find(|e| e.p == p).map(|e| pick(e, component))
    }

    pub fn kernel_distance(&self, component: Component, p: LpExponent) -> Option<f64> {
        self.kernel_dist
            .iter()
            .flatten()
            .find(|e| e.p == p)
            .map(|e| pick(e, component))
    }

    pub fn mass(&self, component: Component) -> f64 {
        match component {
            Component::U => self.mass_u,
            Component::V => self.mass_v,
        }
    }
}

fn pick(e: &ComponentPair, c: Component) -> f64 {
    match c {
        Component::U => e.u,
        Component::V => e.v,
    }
}

/// Consumer of a run's records, one producer per run.
pub trait DiagnosticsSink {
    fn record(&mut self, rec: &DiagnosticsRecord) -> Result<()>;
}

impl DiagnosticsSink for Vec<DiagnosticsRecord> {
    fn record(&mut self, rec: &DiagnosticsRecord) -> Result<()> {
        self.push(rec.clone());
        Ok(())
    }
}

/// Discards everything.
pub struct NullSink;

impl DiagnosticsSink for NullSink {
    fn record(&mut self, _rec: &DiagnosticsRecord) -> Result<()> {
        Ok(())
    }
}

/// Evaluates every requested diagnostic of `state`. `masses` are the
/// conserved masses used to scale the comparison kernels.
pub fn compute_record(state: &State, spec: &DiagnosticsSpec, masses: (f64, f64)) -> Result<DiagnosticsRecord> {
    let lp_norms = spec
        .p_list
        .iter()
        .map(|&p| ComponentPair {
            p,
            u: lp_norm(&state.u, p),
            v: lp_norm(&state.v, p),
        })
        .collect();
    let kernel_time = state.t + spec.kernel.t_offset;
    let kernel_dist = spec
        .p_list
        .iter()
        .map(|&p| -> Result<Option<ComponentPair>> {
            if state.t <= 0.0 || kernel_time <= 0.0 {
                return Ok(None);
            }
            Ok(Some(ComponentPair {
                p,
                u: kernel_distance(&state.u, state.t, p, masses.0, &spec.kernel)?,
                v: kernel_distance(&state.v, state.t, p, masses.1, &spec.kernel)?,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let moment_u = spec.moment_r.map(|r| weighted_moment(&state.u, r)).transpose()?;
    Ok(DiagnosticsRecord {
        t: state.t,
        mass_u: mass(&state.u),
        mass_v: mass(&state.v),
        lp_norms,
        phi: energy_phi(state),
        h: energy_h(state),
        kernel_dist,
        moment_u,
        boundary_tail: boundary_tail(state),
    })
}
