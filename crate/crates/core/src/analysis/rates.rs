//! Power-law fits of norm series against time.

use serde::Serialize;

use crate::analysis::diagnostics::{Component, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::norms::LpExponent;

/// Fits need at least this many samples inside the window.
pub const MIN_FIT_SAMPLES: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    /// Slope of `log y` against `log t`.
    pub exponent: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub rms_residual: f64,
    pub samples: usize,
}

/// Least-squares line through `(log t, log y)`. Every `t` and `y` must be
/// positive.
pub fn fit_power_law(ts: &[f64], ys: &[f64]) -> Result<RateFit> {
    if ts.len() != ys.len() {
        return Err(Error::ShapeMismatch {
            expected: ts.len(),
            got: ys.len(),
        });
    }
    if ts.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "rate fit needs at least {MIN_FIT_SAMPLES} samples, got {}",
            ts.len()
        )));
    }
    if let Some(bad) = ts.iter().zip(ys).find(|(t, y)| !(**t > 0.0 && **y > 0.0 && y.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "nonpositive sample (t = {}, value = {})",
            bad.0, bad.1
        )));
    }
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ls: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ls.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&ls) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all samples share one time".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ls)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(RateFit {
        exponent: slope,
        intercept,
        window: (ts[0], ts[ts.len() - 1]),
        rms_residual: (rss / n).sqrt(),
        samples: xs.len(),
    })
}

/// Fits `||component||_p` over the records with `t` in `[window.0, window.1]`.
pub fn fit_decay_exponent(
    series: &[DiagnosticsRecord],
    component: Component,
    p: LpExponent,
    window: (f64, f64),
) -> Result<RateFit> {
    fit_series(series, window, |r| {
        r.lp(component, p)
            .ok_or_else(|| Error::UnknownQuantity(format!("lp_{}_{}", name(component), p)))
    })
}

/// Fits any per-record quantity over a window.
pub fn fit_series(
    series: &[DiagnosticsRecord],
    window: (f64, f64),
    value: impl Fn(&DiagnosticsRecord) -> Result<f64>,
) -> Result<RateFit> {
    if !(window.0 < window.1) {
        return Err(Error::InvalidArgument(format!(
            "empty window [{}, {}]",
            window.0, window.1
        )));
    }
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for r in series.iter().filter(|r| r.t >= window.0 && r.t <= window.1) {
        ts.push(r.t);
        ys.push(value(r)?);
    }
    if ts.is_empty() {
        return Err(Error::InsufficientSamples(format!(
            "no records in window [{}, {}]",
            window.0, window.1
        )));
    }
    let mut fit = fit_power_law(&ts, &ys)?;
    fit.window = window;
    Ok(fit)
}

/// `[t_final / 10, t_final]`.
pub fn default_window(t_final: f64) -> (f64, f64) {
    (t_final / 10.0, t_final)
}

fn name(c: Component) -> &'static str {
    match c {
        Component::U => "u",
        Component::V => "v",
    }
}
