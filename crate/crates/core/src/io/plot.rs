//! Two-column plot data with a one-line sidecar description.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io::series::SeriesFile;
use crate::norms::LpExponent;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotTransform {
    /// `(t, y)`.
    Raw,
    /// `(ln t, ln y)`, samples with `t <= 0` or `y <= 0` dropped.
    LogLog,
    /// `(t, kdist)` for a scaled kernel-distance column.
    ScaledKernel,
}

impl FromStr for PlotTransform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(PlotTransform::Raw),
            "loglog" => Ok(PlotTransform::LogLog),
            "scaled-kernel" => Ok(PlotTransform::ScaledKernel),
            other => Err(Error::InvalidArgument(format!(
                "unknown transform `{other}` (raw, loglog, scaled-kernel)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotData {
    pub points: Vec<(f64, f64)>,
    pub description: String,
}

/// Heat-equation slope `-(dim/2)(1 - 1/p)` for `lp_*_<p>` columns.
fn reference_slope(quantity: &str, dim: usize) -> Option<(LpExponent, f64)> {
    let p: LpExponent = quantity
        .strip_prefix("lp_u_")
        .or_else(|| quantity.strip_prefix("lp_v_"))?
        .parse()
        .ok()?;
    Some((p, -(dim as f64) / 2.0 * (1.0 - p.reciprocal())))
}

pub fn plot_data(series: &SeriesFile, quantity: &str, transform: PlotTransform, dim: usize) -> Result<PlotData> {
    let ys = series.column(quantity)?;
    let ts = series.column("t")?;
    let mut description = format!("x=t y={quantity}");
    let points: Vec<(f64, f64)> = match transform {
        PlotTransform::Raw => ts.into_iter().zip(ys).collect(),
        PlotTransform::LogLog => {
            description = format!("x=log(t) y=log({quantity})");
            if let Some((p, slope)) = reference_slope(quantity, dim) {
                let _ = write!(
                    description,
                    "; reference slope -N/2(1-1/p) = {slope} for N={dim}, p={p}"
                );
            }
            ts.into_iter()
                .zip(ys)
                .filter(|(t, y)| *t > 0.0 && *y > 0.0)
                .map(|(t, y)| (t.ln(), y.ln()))
                .collect()
        }
        PlotTransform::ScaledKernel => {
            if !quantity.starts_with("kdist_") {
                return Err(Error::InvalidArgument(format!(
                    "scaled-kernel plots take a kdist_* column, got `{quantity}`"
                )));
            }
            description.push_str("; limit 0 as t -> inf");
            ts.into_iter().zip(ys).filter(|(_, y)| !y.is_nan()).collect()
        }
    };
    Ok(PlotData { points, description })
}

/// Writes `path` and `path.meta`; returns the sidecar path.
pub fn emit_plot_data(
    series: &SeriesFile,
    quantity: &str,
    transform: PlotTransform,
    dim: usize,
    path: &Path,
) -> Result<PathBuf> {
    let data = plot_data(series, quantity, transform, dim)?;
    let mut body = String::new();
    for (x, y) in &data.points {
        let _ = writeln!(body, "{x:.16e} {y:.16e}");
    }
    fs::write(path, body)?;
    let mut meta = path.as_os_str().to_owned();
    meta.push(".meta");
    let meta = PathBuf::from(meta);
    fs::write(&meta, format!("{}\n", data.description))?;
    Ok(meta)
}
