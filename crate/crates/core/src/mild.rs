//! Reference solutions from the Duhamel formulation
//!
//! ```text
//! u(t) = e^{t Delta} u0 - chi int_0^t div(e^{(t-s) Delta} (u grad v)) ds
//! v(t) = e^{t Delta} v0 + xi  int_0^t div(e^{(t-s) Delta} (v grad u)) ds
//! ```
//!
//! solved by Picard iteration on a trajectory sampled at `m` uniform nodes,
//! with trapezoidal quadrature in `s`. Everything is spectral, so each
//! propagator is a diagonal multiplier and the divergence form keeps every
//! iterate's mass equal to the initial one.

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{taxis_tendency, SimParams, State};
use crate::error::{Error, Result};
use crate::grid::{Field, SpectralField};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PicardConfig {
    pub horizon: f64,
    /// Quadrature nodes, endpoints included.
    pub nodes: usize,
    pub max_iters: usize,
    /// Stop once successive iterates are this close in sup norm at every node.
    pub tol: f64,
    /// Also solve with half the nodes and fail when the terminal states differ
    /// by more than `10 tol`.
    pub check_quadrature: bool,
}

impl PicardConfig {
    pub fn new(horizon: f64, nodes: usize) -> Self {
        PicardConfig {
            horizon,
            nodes,
            max_iters: 200,
            tol: 1e-12,
            check_quadrature: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.nodes < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 nodes, got {}", self.nodes)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be positive".into()));
        }
        Ok(())
    }

    fn step(&self) -> f64 {
        self.horizon / (self.nodes - 1) as f64
    }
}

#[derive(Clone, Debug)]
pub struct PicardOutcome {
    /// State at the horizon.
    pub state: State,
    pub iterations: usize,
    /// Sup-norm distance between successive iterates, one entry per iteration.
    pub residuals: Vec<f64>,
}

/// Sampled trajectory of both components, one spectral field per node.
struct Trajectory {
    u: Vec<SpectralField>,
    v: Vec<SpectralField>,
}

/// Solves the mild equations on `[0, cfg.horizon]` from `(u0, v0)`.
///
/// The first iterate is the free evolution, so without coupling the first
/// update reproduces it and the solve stops after one iteration.
pub fn picard_solve(u0: &Field, v0: &Field, params: &SimParams, cfg: &PicardConfig) -> Result<PicardOutcome> {
    let outcome = picard_core(u0, v0, params, cfg)?;
    if cfg.check_quadrature {
        let coarse_nodes = (cfg.nodes / 2).max(2);
        if coarse_nodes < cfg.nodes {
            let coarse = PicardConfig {
                nodes: coarse_nodes,
                check_quadrature: false,
                ..cfg.clone()
            };
            let other = picard_core(u0, v0, params, &coarse)?;
            let change = outcome
                .state
                .u
                .max_abs_diff(&other.state.u)?
                .max(outcome.state.v.max_abs_diff(&other.state.v)?);
            let limit = 10.0 * cfg.tol;
            if change > limit {
                return Err(Error::QuadratureUnderResolved { change, limit });
            }
        }
    }
    Ok(outcome)
}

fn picard_core(u0: &Field, v0: &Field, params: &SimParams, cfg: &PicardConfig) -> Result<PicardOutcome> {
    params.validate()?;
    cfg.validate()?;
    if !(u0.grid().same_as(&params.grid) && v0.grid().same_as(&params.grid)) {
        return Err(Error::GridMismatch);
    }
    if !(u0.is_finite() && v0.is_finite()) {
        return Err(Error::NonFiniteInitialData);
    }
    let grid = &params.grid;
    let ds = cfg.step();
    let m = cfg.nodes;
    let k2 = grid.k_squared();
    let u_step: Vec<f64> = k2.iter().map(|&k| (params.u_symbol(k) * ds).exp()).collect();
    let v_step: Vec<f64> = k2.iter().map(|&k| (params.v_symbol(k) * ds).exp()).collect();

    let free_u = free_evolution(&u0.to_spectral(), &u_step, m);
    let free_v = free_evolution(&v0.to_spectral(), &v_step, m);
    let mut traj = Trajectory {
        u: free_u.clone(),
        v: free_v.clone(),
    };
    let mut residuals = Vec::new();
    loop {
        let next = Trajectory {
            u: update(&free_u, &traj.u, &traj.v, -params.chi, &u_step, ds),
            v: update(&free_v, &traj.v, &traj.u, params.xi, &v_step, ds),
        };
        let residual = trajectory_distance(&traj, &next);
        residuals.push(residual);
        traj = next;
        if !residual.is_finite() {
            return Err(Error::NoContraction {
                iters: residuals.len(),
                residual,
            });
        }
        if residual <= cfg.tol {
            break;
        }
        if residuals.len() >= cfg.max_iters {
            return Err(Error::NoContraction {
                iters: residuals.len(),
                residual,
            });
        }
    }
    let state = State::new(
        traj.u[m - 1].to_physical(),
        traj.v[m - 1].to_physical(),
        cfg.horizon,
    )?;
    Ok(PicardOutcome {
        state,
        iterations: residuals.len(),
        residuals,
    })
}

fn free_evolution(w0: &SpectralField, step: &[f64], m: usize) -> Vec<SpectralField> {
    let mut out = Vec::with_capacity(m);
    out.push(w0.clone());
    for _ in 1..m {
        let next = multiply(out.last().expect("nonempty"), step);
        out.push(next);
    }
    out
}

fn multiply(w: &SpectralField, mult: &[f64]) -> SpectralField {
    let mut out = w.clone();
    for (c, &e) in out.coeffs_mut().iter_mut().zip(mult) {
        *c *= e;
    }
    out
}

/// `free_i + factor int_0^{s_i} E(s_i - s) div(a grad b)(s) ds` at every node.
/// The same routine serves both components with the roles of `a` and `b`
/// exchanged.
fn update(
    free: &[SpectralField],
    a: &[SpectralField],
    b: &[SpectralField],
    factor: f64,
    step: &[f64],
    ds: f64,
) -> Vec<SpectralField> {
    if factor == 0.0 {
        return free.to_vec();
    }
    let tendencies: Vec<SpectralField> = a
        .iter()
        .zip(b)
        .map(|(ai, bi)| taxis_tendency(ai, bi, factor))
        .collect();
    let integrals = trapezoid_integrals(&tendencies, step, ds);
    free.iter()
        .zip(&integrals)
        .map(|(f, d)| f.add(d).expect("same grid"))
        .collect()
}

/// `int_0^{s_i} E(s_i - s) g(s) ds` by the trapezoidal rule, for every node,
/// through the running sums `A_i = E A_{i-1} + g_i` and `B_i = E B_{i-1}`
/// (with `B_0 = g_0`): the trapezoid sum is `ds (A_i - B_i/2 - g_i/2)`.
fn trapezoid_integrals(g: &[SpectralField], step: &[f64], ds: f64) -> Vec<SpectralField> {
    let grid = g[0].grid().clone();
    let len = grid.len();
    let mut acc = vec![Complex64::new(0.0, 0.0); len];
    let mut first = g[0].coeffs().to_vec();
    let mut out = Vec::with_capacity(g.len());
    for (i, gi) in g.iter().enumerate() {
        if i > 0 {
            for ((a, f), &e) in acc.iter_mut().zip(first.iter_mut()).zip(step) {
                *a *= e;
                *f *= e;
            }
        }
        for (a, &c) in acc.iter_mut().zip(gi.coeffs()) {
            *a += c;
        }
        let coeffs: Vec<Complex64> = if i == 0 {
            vec![Complex64::new(0.0, 0.0); len]
        } else {
            acc.iter()
                .zip(&first)
                .zip(gi.coeffs())
                .map(|((&a, &f), &c)| (a - 0.5 * f - 0.5 * c) * ds)
                .collect()
        };
        out.push(SpectralField::new(&grid, coeffs).expect("length matches grid"));
    }
    out
}

fn trajectory_distance(a: &Trajectory, b: &Trajectory) -> f64 {
    let pairs = a.u.iter().zip(&b.u).chain(a.v.iter().zip(&b.v));
    pairs
        .map(|(x, y)| {
            let mut d = x.clone();
            for (c, &o) in d.coeffs_mut().iter_mut().zip(y.coeffs()) {
                *c -= o;
            }
            d.to_physical().max_abs()
        })
        .fold(0.0, f64::max)
}

/// `coeff sum_k w_k div(e^{(t - s_k) Delta} F(s_k))` with trapezoidal weights
/// `w_k`, where `flux[k]` is the vector field `F` at `s_k = k ds` and
/// `t = (flux.len() - 1) ds`.
pub fn duhamel_term(flux: &[Vec<Field>], ds: f64, coeff: f64) -> Result<Field> {
    if flux.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "Duhamel quadrature needs at least 2 nodes, got {}",
            flux.len()
        )));
    }
    if !(ds.is_finite() && ds > 0.0) {
        return Err(Error::InvalidArgument(format!("node spacing must be positive, got {ds}")));
    }
    let grid = flux[0]
        .first()
        .ok_or_else(|| Error::InvalidArgument("flux has no components".into()))?
        .grid()
        .clone();
    let last = flux.len() - 1;
    let t = last as f64 * ds;
    let mut total = SpectralField::zeros(&grid);
    for (k, f) in flux.iter().enumerate() {
        if f.len() != grid.dim() {
            return Err(Error::ShapeMismatch {
                expected: grid.dim(),
                got: f.len(),
            });
        }
        if f.iter().any(|c| !c.grid().same_as(&grid)) {
            return Err(Error::GridMismatch);
        }
        let weight = if k == 0 || k == last { 0.5 * ds } else { ds };
        let lag = t - k as f64 * ds;
        let spectral: Vec<SpectralField> = f.iter().map(Field::to_spectral).collect();
        let div = SpectralField::divergence(&spectral)?.radial_multiply(|k2| (-k2 * lag).exp());
        total = total.add(&div.scaled(weight * coeff))?;
    }
    Ok(total.to_physical())
}
