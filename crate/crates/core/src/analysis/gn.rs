//! Exact exponent algebra for the Gagliardo-Nirenberg interpolation
//! `||D^j f||_p <= C ||D^m f||_r^theta ||f||_q^{1-theta}`.

use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;

use crate::error::{Error, Result};

/// A rational Lebesgue exponent in `[1, inf]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GnExponent {
    Finite(Rational64),
    Infinite,
}

impl GnExponent {
    pub fn integer(p: i64) -> Self {
        GnExponent::Finite(Rational64::from_integer(p))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        GnExponent::Finite(Rational64::new(num, den))
    }

    pub fn reciprocal(self) -> Rational64 {
        match self {
            GnExponent::Finite(p) => p.recip(),
            GnExponent::Infinite => Rational64::from_integer(0),
        }
    }

    fn validate(self, name: &str) -> Result<()> {
        match self {
            GnExponent::Finite(p) if p < Rational64::from_integer(1) => {
                Err(Error::InvalidArgument(format!("{name} must be >= 1, got {p}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for GnExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GnExponent::Finite(p) => write!(f, "{p}"),
            GnExponent::Infinite => write!(f, "inf"),
        }
    }
}

/// Accepts `inf`, integers and fractions such as `4/3`.
impl FromStr for GnExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if matches!(s.to_ascii_lowercase().as_str(), "inf" | "infinity") {
            return Ok(GnExponent::Infinite);
        }
        let bad = || Error::InvalidArgument(format!("cannot parse exponent `{s}`"));
        let r = match s.split_once('/') {
            Some((a, b)) => {
                let den: i64 = b.trim().parse().map_err(|_| bad())?;
                if den == 0 {
                    return Err(bad());
                }
                Rational64::new(a.trim().parse().map_err(|_| bad())?, den)
            }
            None => Rational64::from_integer(s.parse().map_err(|_| bad())?),
        };
        Ok(GnExponent::Finite(r))
    }
}

/// Solves `1/p = j/N + (1/r - m/N) theta + (1 - theta)/q` for `theta`
/// exactly, and requires `theta` in `[j/m, 1]`.
pub fn gn_theta(j: u32, m: u32, p: GnExponent, q: GnExponent, r: GnExponent, dim: u32) -> Result<Rational64> {
    if m <= j {
        return Err(Error::InvalidArgument(format!("need m > j, got j = {j}, m = {m}")));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    p.validate("p")?;
    q.validate("q")?;
    r.validate("r")?;
    let n = Rational64::from_integer(dim as i64);
    let jr = Rational64::from_integer(j as i64);
    let mr = Rational64::from_integer(m as i64);
    let lhs = p.reciprocal() - jr / n - q.reciprocal();
    let coef = r.reciprocal() - mr / n - q.reciprocal();
    if coef == Rational64::from_integer(0) {
        return Err(Error::InvalidArgument(
            "exponent relation does not determine theta (degenerate coefficient)".into(),
        ));
    }
    let theta = lhs / coef;
    let lower = jr / mr;
    if theta < lower || theta > Rational64::from_integer(1) {
        return Err(Error::ExponentOutOfRange {
            theta: theta.to_string(),
            lower: lower.to_string(),
        });
    }
    Ok(theta)
}

/// `1/p - j/N - (1/r - m/N) theta - (1 - theta)/q`, zero for an exact solution.
pub fn gn_residual(j: u32, m: u32, p: GnExponent, q: GnExponent, r: GnExponent, dim: u32, theta: Rational64) -> Rational64 {
    let n = Rational64::from_integer(dim as i64);
    let one = Rational64::from_integer(1);
    p.reciprocal()
        - Rational64::from_integer(j as i64) / n
        - (r.reciprocal() - Rational64::from_integer(m as i64) / n) * theta
        - (one - theta) * q.reciprocal()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_exponents() {
        assert_eq!("inf".parse::<GnExponent>().unwrap(), GnExponent::Infinite);
        assert_eq!("4/3".parse::<GnExponent>().unwrap(), GnExponent::ratio(4, 3));
        assert_eq!("5".parse::<GnExponent>().unwrap(), GnExponent::integer(5));
        assert!("1/0".parse::<GnExponent>().is_err());
        assert!("x".parse::<GnExponent>().is_err());
    }

    #[test]
    fn trivial_case() {
        let p = GnExponent::integer(3);
        let theta = gn_theta(0, 2, p, p, GnExponent::integer(2), 2).unwrap();
        assert_eq!(theta, Rational64::from_integer(0));
    }

    #[test]
    fn out_of_range_and_invalid() {
        // Sobolev-type target beyond the embedding: theta > 1
        let err = gn_theta(1, 2, GnExponent::Infinite, GnExponent::integer(2), GnExponent::integer(2), 4);
        assert!(matches!(err, Err(Error::ExponentOutOfRange { .. })));
        assert!(gn_theta(2, 2, GnExponent::integer(2), GnExponent::integer(2), GnExponent::integer(2), 1).is_err());
        assert!(gn_theta(0, 1, GnExponent::ratio(1, 2), GnExponent::integer(2), GnExponent::integer(2), 1).is_err());
    }
}
