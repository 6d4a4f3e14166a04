//! Heat kernel samples, the exact spectral heat semigroup, closed-form kernel
//! norms and the `L^p`-`L^q` smoothing ratios.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::norms::{lp_norm, vector_lp_norm, LpExponent};

/// Boundary-to-peak ratio above which a kernel sample is truncation-suspect.
pub const KERNEL_TAIL_LIMIT: f64 = 1e-12;

/// A heat kernel `G(. - center, t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    pub t: f64,
    /// Missing trailing coordinates are taken as zero.
    pub center: Vec<f64>,
}

impl KernelSpec {
    pub fn new(t: f64) -> Result<Self> {
        Self::centered_at(t, Vec::new())
    }

    pub fn centered_at(t: f64, center: Vec<f64>) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidArgument(format!("kernel time must be positive, got {t}")));
        }
        Ok(KernelSpec { t, center })
    }

    fn center_coord(&self, axis: usize) -> f64 {
        self.center.get(axis).copied().unwrap_or(0.0)
    }
}

/// `(4 pi t)^{-dim/2} exp(-r2 / 4t)`.
pub fn heat_kernel_value(dim: usize, t: f64, r2: f64) -> f64 {
    (4.0 * PI * t).powf(-(dim as f64) / 2.0) * (-r2 / (4.0 * t)).exp()
}

/// Free-space kernel sampled on the grid nodes.
pub fn heat_kernel_field(grid: &Grid, spec: &KernelSpec) -> Result<Field> {
    let factors: Vec<Vec<f64>> = (0..grid.dim())
        .map(|a| {
            let c = spec.center_coord(a);
            (0..grid.n())
                .map(|j| {
                    let d = grid.coordinate(j) - c;
                    heat_kernel_value(1, spec.t, d * d)
                })
                .collect()
        })
        .collect();
    Ok(separable_product(grid, &factors))
}

/// Heat kernel of the periodic box: the free kernel summed over all periodic
/// images. This is what the exact spectral semigroup produces from a point
/// source, and it carries exactly unit mass.
pub fn box_heat_kernel_field(grid: &Grid, spec: &KernelSpec) -> Result<Field> {
    let period = 2.0 * grid.half_width();
    // images farther than this underflow exp()
    let reach = (4.0 * spec.t * 745.0).sqrt();
    let images = ((reach / grid.half_width() - 1.0) / 2.0).ceil().max(1.0) as i64;
    let factors: Vec<Vec<f64>> = (0..grid.dim())
        .map(|a| {
            let c = spec.center_coord(a);
            (0..grid.n())
                .map(|j| {
                    let x = grid.coordinate(j) - c;
                    (-images..=images)
                        .map(|m| {
                            let d = x + m as f64 * period;
                            heat_kernel_value(1, spec.t, d * d)
                        })
                        .sum()
                })
                .collect()
        })
        .collect();
    Ok(separable_product(grid, &factors))
}

fn separable_product(grid: &Grid, factors: &[Vec<f64>]) -> Field {
    let values = (0..grid.len())
        .map(|flat| {
            factors
                .iter()
                .enumerate()
                .map(|(a, f)| f[grid.axis_index(flat, a)])
                .product()
        })
        .collect();
    Field::from_raw(grid, values)
}

/// `G` at the nearest box face relative to its peak. Samples with a ratio
/// above [`KERNEL_TAIL_LIMIT`] do not fit the box.
pub fn kernel_tail_ratio(grid: &Grid, spec: &KernelSpec) -> f64 {
    let l = grid.half_width();
    let d = (0..grid.dim())
        .map(|a| {
            let c = spec.center_coord(a);
            (l - c).min(l + c)
        })
        .fold(f64::INFINITY, f64::min);
    (-d * d / (4.0 * spec.t)).exp()
}

/// `||G(., t)||_p = (4 pi t)^{-(dim/2)(1-1/p)} p^{-dim/(2p)}`; the `p` factor
/// is dropped at `p = inf`, where its limit is one.
pub fn kernel_lp_norm_closed(dim: usize, t: f64, p: LpExponent) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidArgument(format!("kernel time must be positive, got {t}")));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidArgument(format!("dimension must be 1..=3, got {dim}")));
    }
    let half_dim = dim as f64 / 2.0;
    let base = (4.0 * PI * t).powf(-half_dim * (1.0 - p.reciprocal()));
    if p.is_infinite() {
        Ok(base)
    } else {
        Ok(base * p.value().powf(-half_dim / p.value()))
    }
}

/// `e^{t Delta} f` through the exact multiplier `exp(-|k|^2 t)`.
pub fn apply_semigroup(f: &Field, t: f64) -> Result<Field> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("semigroup time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    Ok(f.to_spectral().radial_multiply(|k2| (-k2 * t).exp()).to_physical())
}

fn check_exponent_order(t: f64, p: LpExponent, q: LpExponent) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    if q > p {
        return Err(Error::InvalidArgument(format!("need q <= p, got q = {q}, p = {p}")));
    }
    Ok(())
}

/// `||e^{t Delta} f||_p / ((4 pi t)^{-(dim/2)(1/q - 1/p)} ||f||_q)`.
///
/// At most one for every `f` in the continuum; on the grid this holds for
/// nonnegative profiles resolved by the mesh.
pub fn check_lp_lq_bound(f: &Field, t: f64, p: LpExponent, q: LpExponent) -> Result<f64> {
    check_exponent_order(t, p, q)?;
    let denom_norm = lp_norm(f, q);
    if denom_norm == 0.0 {
        return Ok(0.0);
    }
    let dim = f.grid().dim() as f64;
    let smoothing = (4.0 * PI * t).powf(-(dim / 2.0) * (q.reciprocal() - p.reciprocal()));
    let evolved = apply_semigroup(f, t)?;
    Ok(lp_norm(&evolved, p) / (smoothing * denom_norm))
}

/// `||grad e^{t Delta} f||_p t^{(dim/2)(1/q - 1/p) + 1/2} / ||f||_q`, bounded
/// uniformly in `t` with an unspecified constant.
pub fn gradient_semigroup_bound(f: &Field, t: f64, p: LpExponent, q: LpExponent) -> Result<f64> {
    check_exponent_order(t, p, q)?;
    let denom_norm = lp_norm(f, q);
    if denom_norm == 0.0 {
        return Ok(0.0);
    }
    let dim = f.grid().dim() as f64;
    let evolved = f.to_spectral().radial_multiply(|k2| (-k2 * t).exp());
    let grad: Vec<Field> = evolved.gradient().iter().map(|g| g.to_physical()).collect();
    let weight = t.powf((dim / 2.0) * (q.reciprocal() - p.reciprocal()) + 0.5);
    Ok(vector_lp_norm(&grad, p)? * weight / denom_norm)
}
