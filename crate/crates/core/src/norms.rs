//! Integral quantities over fields: mass, Lebesgue and Sobolev norms,
//! weighted moments. All integrals use the rectangle rule `sum f dx^dim`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid::{Field, SpectralField};

/// A Lebesgue exponent `p` in `[1, inf]`. Infinity is stored as `f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LpExponent(f64);

impl LpExponent {
    pub const ONE: LpExponent = LpExponent(1.0);
    pub const TWO: LpExponent = LpExponent(2.0);
    pub const INFINITY: LpExponent = LpExponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidArgument(format!("exponent p must be >= 1, got {p}")));
        }
        Ok(LpExponent(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `1/p`, zero for `p = inf`.
    pub fn reciprocal(self) -> f64 {
        if self.is_infinite() {
            0.0
        } else {
            1.0 / self.0
        }
    }

    /// Column-name form: `1`, `1.5`, `inf`.
    pub fn label(self) -> String {
        self.to_string()
    }
}

impl fmt::Display for LpExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for LpExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" | "INF" => Ok(LpExponent::INFINITY),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad exponent `{other}`")))?;
                LpExponent::new(p)
            }
        }
    }
}

impl Serialize for LpExponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for LpExponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(p) => LpExponent::new(p).map_err(serde::de::Error::custom),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Which norm of which derivative to take.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormRequest {
    pub p: LpExponent,
    /// 0: `f`, 1: `|grad f|`, 2: Frobenius norm of the Hessian.
    pub derivative_order: u8,
}

/// Discrete `int f dx`.
pub fn mass(f: &Field) -> f64 {
    f.values().iter().sum::<f64>() * f.grid().cell_volume()
}

pub fn lp_norm(f: &Field, p: LpExponent) -> f64 {
    lp_norm_values(f.values(), f.grid().cell_volume(), p)
}

fn lp_norm_values(values: &[f64], cell: f64, p: LpExponent) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let p = p.value();
    if p == 1.0 {
        values.iter().map(|v| v.abs()).sum::<f64>() * cell
    } else if p == 2.0 {
        (values.iter().map(|v| v * v).sum::<f64>() * cell).sqrt()
    } else {
        (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * cell).powf(1.0 / p)
    }
}

/// `L^p` norm of the pointwise Euclidean magnitude of a vector field.
pub fn vector_lp_norm(components: &[Field], p: LpExponent) -> Result<f64> {
    let first = components
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty vector field".into()))?;
    let grid = first.grid();
    if components.iter().any(|c| !c.grid().same_as(grid)) {
        return Err(Error::GridMismatch);
    }
    let magnitude: Vec<f64> = (0..grid.len())
        .map(|i| {
            components
                .iter()
                .map(|c| c.values()[i] * c.values()[i])
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(lp_norm_values(&magnitude, grid.cell_volume(), p))
}

/// `||D^order f||_p` with the derivative tensor measured pointwise in the
/// Euclidean (Frobenius) norm.
pub fn norm(f: &Field, req: NormRequest) -> Result<f64> {
    let sf = f.to_spectral();
    match req.derivative_order {
        0 => Ok(lp_norm(f, req.p)),
        1 => {
            let grad: Vec<Field> = sf.gradient().iter().map(|g| g.to_physical()).collect();
            vector_lp_norm(&grad, req.p)
        }
        2 => {
            let dim = f.grid().dim();
            let mut hessian = Vec::with_capacity(dim * dim);
            for i in 0..dim {
                let di = sf.partial(i);
                for j in 0..dim {
                    hessian.push(di.partial(j).to_physical());
                }
            }
            vector_lp_norm(&hessian, req.p)
        }
        k => Err(Error::InvalidArgument(format!("unsupported derivative order {k}"))),
    }
}

/// `||f||^2_{H^order} = sum_{j<=order} ||grad^j f||^2_{L^2}`, each `grad^j`
/// summed over all ordered multi-indices. Spectrally this is
/// `sum_k (1 + |k|^2 + .. + |k|^{2 order}) |f_k|^2`.
pub fn sobolev_sq(f: &Field, order: u32) -> Result<f64> {
    sobolev_sq_spectral(&f.to_spectral(), order)
}

pub(crate) fn sobolev_sq_spectral(sf: &SpectralField, order: u32) -> Result<f64> {
    if order > 3 {
        return Err(Error::InvalidArgument(format!(
            "Sobolev order must be at most 3, got {order}"
        )));
    }
    Ok(sf.weighted_energy(|k2| {
        let mut w = 1.0;
        let mut term = 1.0;
        for _ in 0..order {
            term *= k2;
            w += term;
        }
        w
    }))
}

/// `sum (1 + |x|^2)^r f^2 dx^dim`, with `x` the signed box coordinate.
pub fn weighted_moment(f: &Field, r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "moment exponent must lie in (0, 1], got {r}"
        )));
    }
    let grid = f.grid();
    let dim = grid.dim();
    let mut x = [0.0; 3];
    let sum: f64 = f
        .values()
        .iter()
        .enumerate()
        .map(|(flat, &v)| {
            grid.point(flat, &mut x);
            let r2: f64 = x[..dim].iter().map(|c| c * c).sum();
            (1.0 + r2).powf(r) * v * v
        })
        .sum();
    Ok(sum * grid.cell_volume())
}
