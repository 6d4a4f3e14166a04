//! Periodic box discretization, discrete Fourier transforms and the spectral
//! differential operators every other module is built on.
//!
//! The box is `[-L, L)^dim` sampled with `n` points per axis. Arrays are stored
//! row-major with the last axis contiguous. The forward transform is
//! unnormalized and the inverse carries `1/n^dim`, so the zero mode of a
//! field equals the plain sum of its samples.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Smallest supported per-axis resolution.
pub const MIN_POINTS: usize = 8;

/// Arrays at least this long are transformed line-parallel.
const PARALLEL_LEN: usize = 1 << 14;

#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    dim: usize,
    half_width: f64,
    n: usize,
    dx: f64,
    wavenumbers: Vec<f64>,
    /// `|k|^2` for every flat index.
    k_squared: Vec<f64>,
    /// Modes kept by the 2/3 rule.
    retained: Vec<bool>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, n: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half-width must be positive, got {half_width}"
            )));
        }
        if n < MIN_POINTS || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= {MIN_POINTS}, got {n}"
            )));
        }
        let dx = 2.0 * half_width / n as f64;
        let wavenumbers: Vec<f64> = (0..n)
            .map(|j| std::f64::consts::PI * signed_index(j, n) as f64 / half_width)
            .collect();
        let cutoff = (n / 3) as i64;
        let total = n.pow(dim as u32);
        let mut k_squared = Vec::with_capacity(total);
        let mut retained = Vec::with_capacity(total);
        let mut idx = [0usize; 3];
        for flat in 0..total {
            unflatten(flat, dim, n, &mut idx);
            let mut k2 = 0.0;
            let mut keep = true;
            for &j in &idx[..dim] {
                k2 += wavenumbers[j] * wavenumbers[j];
                keep &= signed_index(j, n).abs() <= cutoff;
            }
            k_squared.push(k2);
            retained.push(keep);
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Grid {
            inner: Arc::new(GridInner {
                dim,
                half_width,
                n,
                dx,
                wavenumbers,
                k_squared,
                retained,
                forward,
                inverse,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn half_width(&self) -> f64 {
        self.inner.half_width
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn dx(&self) -> f64 {
        self.inner.dx
    }

    /// Total number of grid points, `n^dim`.
    pub fn len(&self) -> usize {
        self.inner.k_squared.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `dx^dim`, the rectangle-rule weight.
    pub fn cell_volume(&self) -> f64 {
        self.inner.dx.powi(self.inner.dim as i32)
    }

    /// Per-axis wavenumbers in DFT order, `k_j = pi * j / L`.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    pub fn k_squared(&self) -> &[f64] {
        &self.inner.k_squared
    }

    /// Coordinate of node `j` along any axis.
    pub fn coordinate(&self, j: usize) -> f64 {
        -self.inner.half_width + j as f64 * self.inner.dx
    }

    /// Index of `flat` along `axis`.
    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        let stride = self.inner.n.pow((self.inner.dim - 1 - axis) as u32);
        (flat / stride) % self.inner.n
    }

    /// Wavenumber of mode `flat` along `axis`.
    pub fn wavenumber_at(&self, flat: usize, axis: usize) -> f64 {
        self.inner.wavenumbers[self.axis_index(flat, axis)]
    }

    /// Writes the physical coordinates of `flat` into `out[..dim]`.
    pub fn point(&self, flat: usize, out: &mut [f64]) {
        let mut idx = [0usize; 3];
        unflatten(flat, self.inner.dim, self.inner.n, &mut idx);
        for (o, &j) in out.iter_mut().zip(&idx[..self.inner.dim]) {
            *o = self.coordinate(j);
        }
    }

    /// True when `flat` touches the outermost shell of the box on some axis.
    pub fn on_boundary_shell(&self, flat: usize) -> bool {
        let n = self.inner.n;
        (0..self.inner.dim).any(|a| {
            let j = self.axis_index(flat, a);
            j == 0 || j == n - 1
        })
    }

    fn retained(&self, flat: usize) -> bool {
        self.inner.retained[flat]
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self == other
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let plan = if inverse {
            &self.inner.inverse
        } else {
            &self.inner.forward
        };
        let n = self.inner.n;
        let dim = self.inner.dim;
        let mut buf = Vec::new();
        for axis in 0..dim {
            let stride = n.pow((dim - 1 - axis) as u32);
            if stride == 1 {
                run_lines(plan.as_ref(), data, n);
                continue;
            }
            let block = n * stride;
            buf.resize(block, Complex64::new(0.0, 0.0));
            for chunk in data.chunks_mut(block) {
                for j in 0..n {
                    for i in 0..stride {
                        buf[i * n + j] = chunk[j * stride + i];
                    }
                }
                run_lines(plan.as_ref(), &mut buf, n);
                for j in 0..n {
                    for i in 0..stride {
                        chunk[j * stride + i] = buf[i * n + j];
                    }
                }
            }
        }
        if inverse {
            let scale = 1.0 / data.len() as f64;
            data.iter_mut().for_each(|c| *c *= scale);
        }
    }
}

fn run_lines(plan: &dyn Fft<f64>, data: &mut [Complex64], n: usize) {
    if data.len() >= PARALLEL_LEN {
        let lines_per_task = (PARALLEL_LEN / n).max(1);
        data.par_chunks_mut(n * lines_per_task)
            .for_each(|c| plan.process(c));
    } else {
        plan.process(data);
    }
}

/// DFT index `j` mapped to `{0, .., n/2, -n/2+1, .., -1}`.
pub fn signed_index(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

fn unflatten(flat: usize, dim: usize, n: usize, out: &mut [usize; 3]) {
    let mut rest = flat;
    for a in (0..dim).rev() {
        out[a] = rest % n;
        rest /= n;
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.dim == other.inner.dim
            && self.inner.n == other.inner.n
            && self.inner.half_width.to_bits() == other.inner.half_width.to_bits()
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.inner.dim)
            .field("half_width", &self.inner.half_width)
            .field("n", &self.inner.n)
            .field("dx", &self.inner.dx)
            .finish()
    }
}

/// Real samples of one scalar unknown.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    /// Wraps `values`; rejects wrong lengths and non-finite entries.
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field values"));
        }
        Ok(Field {
            grid: grid.clone(),
            values,
        })
    }

    /// Unchecked constructor for values produced internally; callers that can
    /// produce non-finite data must check `is_finite` themselves.
    pub(crate) fn from_raw(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field {
            grid: grid.clone(),
            values,
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Field {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f` at every grid node.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let dim = grid.dim();
        let mut x = [0.0; 3];
        let values = (0..grid.len())
            .map(|flat| {
                grid.point(flat, &mut x);
                f(&x[..dim])
            })
            .collect();
        Field {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, c: f64) -> Field {
        self.map(|v| v * c)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Field {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Largest pointwise difference to `other`.
    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    pub fn to_spectral(&self) -> SpectralField {
        let mut coeffs: Vec<Complex64> = self
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.grid.transform(&mut coeffs, false);
        SpectralField {
            grid: self.grid.clone(),
            coeffs,
        }
    }
}

/// Fourier coefficients of a field under the unnormalized forward DFT.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(SpectralField {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn zeros(grid: &Grid) -> Self {
        SpectralField {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn zero_mode(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Inverse transform; the (round-off sized) imaginary part is dropped.
    pub fn to_physical(&self) -> Field {
        let mut data = self.coeffs.clone();
        self.grid.transform(&mut data, true);
        Field::from_raw(&self.grid, data.into_iter().map(|c| c.re).collect())
    }

    /// Multiplies each mode by `symbol(|k|^2)`.
    pub fn radial_multiply(&self, symbol: impl Fn(f64) -> f64) -> SpectralField {
        let coeffs = self
            .coeffs
            .iter()
            .zip(self.grid.k_squared())
            .map(|(&c, &k2)| c * symbol(k2))
            .collect();
        SpectralField {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// `i k_axis` times each mode.
    pub fn partial(&self, axis: usize) -> SpectralField {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(flat, &c)| c * Complex64::new(0.0, self.grid.wavenumber_at(flat, axis)))
            .collect();
        SpectralField {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    pub fn gradient(&self) -> Vec<SpectralField> {
        (0..self.grid.dim()).map(|a| self.partial(a)).collect()
    }

    /// Sum of `i k_a F_a` over the components of a vector field.
    pub fn divergence(components: &[SpectralField]) -> Result<SpectralField> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty vector field".into()))?;
        let grid = first.grid.clone();
        if components.len() != grid.dim() {
            return Err(Error::ShapeMismatch {
                expected: grid.dim(),
                got: components.len(),
            });
        }
        if components.iter().any(|c| !c.grid.same_as(&grid)) {
            return Err(Error::GridMismatch);
        }
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (axis, comp) in components.iter().enumerate() {
            for (flat, (o, &c)) in out.iter_mut().zip(&comp.coeffs).enumerate() {
                *o += c * Complex64::new(0.0, grid.wavenumber_at(flat, axis));
            }
        }
        Ok(SpectralField { grid, coeffs: out })
    }

    pub fn laplacian(&self) -> SpectralField {
        self.radial_multiply(|k2| -k2)
    }

    pub fn bilaplacian(&self) -> SpectralField {
        self.radial_multiply(|k2| k2 * k2)
    }

    /// Zeroes every mode whose index exceeds `n/3` on some axis.
    pub fn dealias(&self) -> SpectralField {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(flat, &c)| {
                if self.grid.retained(flat) {
                    c
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        SpectralField {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    pub fn scaled(&self, c: f64) -> SpectralField {
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(SpectralField {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| a + b)
                .collect(),
        })
    }

    /// `sum |f|^2 dx^dim` computed from the coefficients (Parseval).
    pub fn energy(&self) -> f64 {
        let total = self.grid.len() as f64;
        let sum: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        sum * self.grid.cell_volume() / total
    }

    /// `sum w(|k|^2) |f_k|^2 dx^dim / n^dim`, the weighted Parseval sum.
    pub fn weighted_energy(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let total = self.grid.len() as f64;
        let sum: f64 = self
            .coeffs
            .iter()
            .zip(self.grid.k_squared())
            .map(|(c, &k2)| weight(k2) * c.norm_sqr())
            .sum();
        sum * self.grid.cell_volume() / total
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(grid: &Grid, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Field::new(grid, values).unwrap()
    }

    fn rel_max_err(a: &Field, b: &Field) -> f64 {
        a.max_abs_diff(b).unwrap() / b.max_abs().max(1e-300)
    }

    #[test]
    fn grid_with_pi_half_width_has_integer_wavenumbers() {
        let g = Grid::new(1, PI, 8).unwrap();
        assert!((g.dx() - PI / 4.0).abs() < 1e-15);
        let expected = [0.0, 1.0, 2.0, 3.0, 4.0, -3.0, -2.0, -1.0];
        for (k, e) in g.wavenumbers().iter().zip(expected) {
            assert!((k - e).abs() < 1e-14, "{k} vs {e}");
        }
        assert_eq!(g.dx() * g.n() as f64, 2.0 * g.half_width());
    }

    #[test]
    fn grid_arithmetic() {
        let g = Grid::new(2, 10.0, 64).unwrap();
        assert_eq!(g.dx(), 0.3125);
        assert_eq!(g.len(), 64 * 64);
    }

    #[test]
    fn grid_rejects_bad_inputs() {
        assert!(Grid::new(3, 10.0, 10).is_err());
        assert!(Grid::new(1, 0.0, 16).is_err());
        assert!(Grid::new(1, -1.0, 16).is_err());
        assert!(Grid::new(1, 1.0, 4).is_err());
        assert!(Grid::new(4, 1.0, 8).is_err());
    }

    #[test]
    fn wavenumbers_antisymmetric_about_nyquist() {
        let g = Grid::new(1, 3.0, 32).unwrap();
        let k = g.wavenumbers();
        for j in 1..16 {
            assert_eq!(k[j], -k[32 - j]);
        }
    }

    #[test]
    fn constant_has_only_zero_mode() {
        let g = Grid::new(2, 1.0, 8).unwrap();
        let sf = Field::constant(&g, 2.5).to_spectral();
        assert!((sf.zero_mode().re - 2.5 * 64.0).abs() < 1e-12);
        for c in &sf.coeffs()[1..] {
            assert!(c.norm() < 1e-12);
        }
    }

    #[test]
    fn cosine_has_two_modes() {
        let g = Grid::new(1, PI, 8).unwrap();
        let sf = Field::from_fn(&g, |x| x[0].cos()).to_spectral();
        let nonzero = sf.coeffs().iter().filter(|c| c.norm() > 1e-12).count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn round_trip_random() {
        for (dim, n) in [(1, 64), (2, 32), (3, 16)] {
            let g = Grid::new(dim, 2.0, n).unwrap();
            let f = random_field(&g, 7 + dim as u64);
            let back = f.to_spectral().to_physical();
            assert!(rel_max_err(&back, &f) <= 1e-12);
        }
    }

    #[test]
    fn round_trip_large_parallel_path() {
        let g = Grid::new(2, 2.0, 256).unwrap();
        let f = random_field(&g, 3);
        let back = f.to_spectral().to_physical();
        assert!(rel_max_err(&back, &f) <= 1e-12);
    }

    #[test]
    fn harmonic_derivatives_are_exact() {
        let g = Grid::new(1, PI, 16).unwrap();
        let f = Field::from_fn(&g, |x| x[0].cos());
        let lap = f.to_spectral().laplacian().to_physical();
        assert!(rel_max_err(&lap, &f.scaled(-1.0)) < 1e-12);
        let bilap = f.to_spectral().bilaplacian().to_physical();
        assert!(rel_max_err(&bilap, &f) < 1e-12);
        let dx = f.to_spectral().partial(0).to_physical();
        let expected = Field::from_fn(&g, |x| -x[0].sin());
        assert!(rel_max_err(&dx, &expected) < 1e-12);
    }

    #[test]
    fn mixed_harmonic_in_3d() {
        let g = Grid::new(3, PI, 16).unwrap();
        let f = Field::from_fn(&g, |x| (x[0] + 2.0 * x[1]).sin() * x[2].cos());
        let lap = f.to_spectral().laplacian().to_physical();
        assert!(rel_max_err(&lap, &f.scaled(-6.0)) < 1e-12);
    }

    #[test]
    fn divergence_of_gradient_is_laplacian() {
        for (dim, n) in [(1, 64), (2, 32), (3, 16)] {
            let g = Grid::new(dim, 1.5, n).unwrap();
            let sf = random_field(&g, 11).to_spectral();
            let div = SpectralField::divergence(&sf.gradient()).unwrap().to_physical();
            let lap = sf.laplacian().to_physical();
            assert!(rel_max_err(&div, &lap) <= 1e-12);
        }
    }

    #[test]
    fn divergence_rejects_wrong_arity() {
        let g = Grid::new(2, 1.0, 8).unwrap();
        let sf = SpectralField::zeros(&g);
        assert!(SpectralField::divergence(&[sf]).is_err());
    }

    #[test]
    fn dealias_keeps_low_modes_and_kills_nyquist() {
        let g = Grid::new(1, PI, 16).unwrap();
        let low = Field::from_fn(&g, |x| x[0].cos()).to_spectral();
        let d = low.dealias();
        for (a, b) in d.coeffs().iter().zip(low.coeffs()) {
            assert!(*a == *b || (a.norm() == 0.0 && b.norm() < 1e-14));
        }
        let nyquist = Field::from_fn(&g, |x| (8.0 * x[0]).cos()).to_spectral();
        assert!(nyquist.dealias().coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn dealias_reduces_energy_and_is_idempotent() {
        let g = Grid::new(2, 1.0, 32).unwrap();
        let sf = random_field(&g, 5).to_spectral();
        let d = sf.dealias();
        assert!(d.energy() <= sf.energy());
        let dd = d.dealias();
        assert_eq!(d.coeffs(), dd.coeffs());
    }

    #[test]
    fn parseval() {
        for (dim, n) in [(1, 128), (2, 32), (3, 8)] {
            let g = Grid::new(dim, 3.0, n).unwrap();
            let f = random_field(&g, 13);
            let direct: f64 = f.values().iter().map(|v| v * v).sum::<f64>() * g.cell_volume();
            let spectral = f.to_spectral().energy();
            assert!((direct - spectral).abs() <= 1e-10 * direct);
        }
    }

    #[test]
    fn field_rejects_non_finite_and_bad_length() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        assert!(Field::new(&g, vec![0.0; 7]).is_err());
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(Field::new(&g, v).is_err());
    }
}
