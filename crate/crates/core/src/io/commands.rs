//! Drivers behind the CLI subcommands. Each returns a [`Report`] holding a
//! human-readable text block and a single-line JSON document.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::diagnostics::Component;
use crate::analysis::energy::{check_energy_inequality, decay_bound_fit, EnergyReport};
use crate::analysis::gn::{gn_residual, gn_theta, GnExponent};
use crate::analysis::rates::{fit_decay_exponent, RateFit};
use crate::analysis::scaling::{scaling_residual, ScalingReport};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::io::config::{load_config, parse_config, ExperimentConfig};
use crate::io::plot::{emit_plot_data, PlotTransform};
use crate::io::series::{read_series, CsvSink};
use crate::io::snapshot::{snapshot_save, Snapshot};
use crate::norms::LpExponent;
use crate::semigroup::{check_lp_lq_bound, gradient_semigroup_bound};
use crate::stepper::{run, RunFlags};

/// Slack on the `L^p`-`L^q` ratio before a sweep row counts as a violation.
pub const SEMIGROUP_RATIO_SLACK: f64 = 1e-8;

/// Tolerance on the discrete rescaling norm identities.
pub const SCALING_IDENTITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Report {
    pub text: String,
    pub json: Value,
    /// 0 on success, 4 when a verification check failed; a sweep reports the
    /// largest code of its runs.
    pub exit_code: i32,
}

impl Report {
    fn new(text: String, json: Value) -> Self {
        Report {
            text,
            json,
            exit_code: 0,
        }
    }

    fn verdict(text: String, json: Value, passed: bool) -> Self {
        Report {
            text,
            json,
            exit_code: if passed { 0 } else { 4 },
        }
    }

    pub fn passed(&self) -> bool {
        self.exit_code == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NamedFit {
    pub component: &'static str,
    pub p: LpExponent,
    pub fit: Option<RateFit>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationSummary {
    pub status: String,
    pub t_reached: f64,
    pub steps: usize,
    pub records: usize,
    pub phi0: f64,
    pub smallness_threshold: f64,
    pub small_data: bool,
    pub flags: RunFlags,
    pub rate_window: (f64, f64),
    pub rate_fits: Vec<NamedFit>,
    pub energy: Option<EnergyReport>,
    pub a_star_fit: Option<f64>,
}

/// Runs the configured experiment, streaming `series.csv` into `out` and
/// then writing `summary.json`. A failed run leaves the rows produced so far
/// followed by a truncation marker, plus a summary carrying the error.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path, reproducible: bool) -> Result<Report> {
    fs::create_dir_all(out)?;
    let params = cfg.sim_params()?;
    let initial = cfg.initial_state()?;
    let spec = cfg.diagnostics_spec();
    if cfg.diagnostics.snapshots {
        snapshot_save(&snapshot_of(cfg, initial.clone()), &out.join("initial.snap"))?;
    }
    let mut sink = CsvSink::create(&out.join("series.csv"), &spec.p_list, reproducible)?;
    let result = run(&params, initial, &spec, &mut sink);
    let summary = match result {
        Err(e) => {
            sink.mark_truncated(&e.to_string())?;
            sink.finish()?;
            let failure = json!({
                "status": "failed",
                "exit_code": e.exit_code(),
                "error": e.to_string(),
            });
            fs::write(out.join("summary.json"), format!("{failure}\n"))?;
            return Err(e);
        }
        Ok(s) => {
            sink.finish()?;
            s
        }
    };
    if cfg.diagnostics.snapshots {
        snapshot_save(&snapshot_of(cfg, summary.final_state.clone()), &out.join("final.snap"))?;
    }

    let window = cfg.rate_window();
    let mut rate_fits = Vec::new();
    for &p in &spec.p_list {
        for (name, c) in [("u", Component::U), ("v", Component::V)] {
            let r = fit_decay_exponent(&summary.series, c, p, window);
            rate_fits.push(NamedFit {
                component: name,
                p,
                error: r.as_ref().err().map(ToString::to_string),
                fit: r.ok(),
            });
        }
    }
    let (energy, a_star_fit) = if cfg.analysis.energy_checks {
        (
            check_energy_inequality(&summary.series).ok(),
            decay_bound_fit(&summary.series, cfg.grid.dim).ok(),
        )
    } else {
        (None, None)
    };
    let doc = SimulationSummary {
        status: "completed".into(),
        t_reached: summary.final_state.t,
        steps: summary.steps,
        records: summary.series.len(),
        phi0: summary.phi0,
        smallness_threshold: summary.smallness_threshold,
        small_data: summary.small_data,
        flags: summary.flags.clone(),
        rate_window: window,
        rate_fits,
        energy,
        a_star_fit,
    };
    let value = serde_json::to_value(&doc).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    fs::write(out.join("summary.json"), format!("{}\n", serde_json::to_string_pretty(&value).expect("valid json")))?;

    let mut text = format!(
        "completed t = {} in {} steps, {} records\nphi(0) = {:.6e}, threshold = {:.6e}, small data: {}\nmass drift {:.3e}, boundary tail {:.3e}{}\n",
        doc.t_reached,
        doc.steps,
        doc.records,
        doc.phi0,
        doc.smallness_threshold,
        doc.small_data,
        doc.flags.mass_drift,
        doc.flags.max_boundary_tail,
        if doc.flags.truncation_suspect { " (truncation suspect)" } else { "" },
    );
    for f in &doc.rate_fits {
        if let Some(fit) = &f.fit {
            text.push_str(&format!(
                "rate {}_{} on [{}, {}]: {:.4}\n",
                f.component, f.p, window.0, window.1, fit.exponent
            ));
        }
    }
    Ok(Report::new(text, value))
}

fn snapshot_of(cfg: &ExperimentConfig, state: crate::dynamics::State) -> Snapshot {
    Snapshot {
        state,
        chi: cfg.physics.chi,
        xi: cfg.physics.xi,
        epsilon: cfg.physics.epsilon,
    }
}

/// Test profiles for the semigroup sweep, all centered in the box.
pub fn sweep_profiles(grid: &Grid) -> Vec<(&'static str, Field)> {
    let r2 = |x: &[f64]| x.iter().map(|c| c * c).sum::<f64>();
    vec![
        ("gaussian", Field::from_fn(grid, |x| (-r2(x) / 2.0).exp())),
        (
            "bump",
            Field::from_fn(grid, |x| {
                let s = r2(x) / 4.0;
                if s < 1.0 {
                    (1.0 - 1.0 / (1.0 - s)).exp()
                } else {
                    0.0
                }
            }),
        ),
        (
            "double_gaussian",
            Field::from_fn(grid, |x| {
                let rest: f64 = x[1..].iter().map(|c| c * c).sum();
                (-((x[0] - 2.0).powi(2) + rest)).exp() + (-((x[0] + 2.0).powi(2) + rest)).exp()
            }),
        ),
        (
            "sech2",
            Field::from_fn(grid, |x| x.iter().map(|c| 1.0 / c.cosh().powi(2)).product()),
        ),
        (
            "signed_wave",
            Field::from_fn(grid, |x| (2.0 * x[0]).cos() * (-r2(x) / 4.0).exp()),
        ),
    ]
}

#[derive(Clone, Debug, Serialize)]
pub struct SemigroupRow {
    pub profile: String,
    pub t: f64,
    pub q: LpExponent,
    pub p: LpExponent,
    pub ratio: f64,
    pub gradient_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SemigroupReport {
    pub rows: Vec<SemigroupRow>,
    pub max_ratio: f64,
    pub violations: Vec<SemigroupRow>,
}

/// `(q, p)` pairs of the default sweep.
pub fn default_pairs() -> Vec<(LpExponent, LpExponent)> {
    vec![
        (LpExponent::ONE, LpExponent::TWO),
        (LpExponent::ONE, LpExponent::INFINITY),
        (LpExponent::TWO, LpExponent::TWO),
        (LpExponent::TWO, LpExponent::INFINITY),
    ]
}

pub fn semigroup_sweep(
    profiles: &[(&str, Field)],
    times: &[f64],
    pairs: &[(LpExponent, LpExponent)],
) -> Result<SemigroupReport> {
    let mut rows = Vec::new();
    for (name, f) in profiles {
        for &t in times {
            for &(q, p) in pairs {
                rows.push(SemigroupRow {
                    profile: name.to_string(),
                    t,
                    q,
                    p,
                    ratio: check_lp_lq_bound(f, t, p, q)?,
                    gradient_ratio: gradient_semigroup_bound(f, t, p, q)?,
                });
            }
        }
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let violations = rows
        .iter()
        .filter(|r| !(r.ratio <= 1.0 + SEMIGROUP_RATIO_SLACK))
        .cloned()
        .collect();
    Ok(SemigroupReport {
        rows,
        max_ratio,
        violations,
    })
}

pub fn cmd_verify_semigroup(grid: &Grid) -> Result<Report> {
    let profiles = sweep_profiles(grid);
    let report = semigroup_sweep(&profiles, &[0.1, 1.0, 10.0], &default_pairs())?;
    let mut text = String::from("profile          t      q    p    ratio        grad_ratio\n");
    for r in &report.rows {
        text.push_str(&format!(
            "{:<16} {:<6} {:<4} {:<4} {:.6e} {:.6e}\n",
            r.profile, r.t, r.q, r.p, r.ratio, r.gradient_ratio
        ));
    }
    for v in &report.violations {
        text.push_str(&format!(
            "VIOLATION {} t={} q={} p={} ratio={:e}\n",
            v.profile, v.t, v.q, v.p, v.ratio
        ));
    }
    let passed = report.violations.is_empty();
    let json = serde_json::to_value(&report).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(Report::verdict(text, json, passed))
}

pub fn cmd_scaling_check(cfg: &ExperimentConfig, lambda: Option<f64>, t_check: Option<f64>) -> Result<Report> {
    let lambda = lambda.unwrap_or(cfg.analysis.scaling_lambda);
    let t_check = t_check
        .or(cfg.analysis.scaling_t_check)
        .unwrap_or(cfg.time.t_final / (lambda * lambda));
    let params = cfg.sim_params()?;
    let initial = cfg.initial_state()?;
    let report: ScalingReport = scaling_residual(&params, &initial, lambda, t_check, &cfg.diagnostics_spec())?;
    let text = format!(
        "lambda = {lambda}, t_check = {t_check}\nresidual u {:.3e}, v {:.3e}\nmass identity gap {:.3e}, gradient identity gap {:.3e}\n",
        report.residual_u, report.residual_v, report.mass_identity_gap, report.gradient_identity_gap
    );
    let passed = report.mass_identity_gap <= SCALING_IDENTITY_TOL && report.gradient_identity_gap <= SCALING_IDENTITY_TOL;
    let json = serde_json::to_value(&report).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(Report::verdict(text, json, passed))
}

pub fn cmd_rate_fit(series: &Path, window: Option<(f64, f64)>, p: LpExponent, component: Component) -> Result<Report> {
    let file = read_series(series)?;
    let records = file.records()?;
    let t_end = records
        .last()
        .map(|r| r.t)
        .ok_or_else(|| Error::InsufficientSamples("empty series".into()))?;
    let window = window.unwrap_or_else(|| crate::analysis::rates::default_window(t_end));
    let fit = fit_decay_exponent(&records, component, p, window)?;
    let text = format!(
        "exponent {:.6} on [{}, {}] from {} samples (rms residual {:.2e})\n",
        fit.exponent, window.0, window.1, fit.samples, fit.rms_residual
    );
    let json = serde_json::to_value(&fit).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(Report::new(text, json))
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelDistanceSummary {
    pub p: LpExponent,
    pub component: String,
    pub t_final: f64,
    pub at_t_final: f64,
    pub t_tenth: f64,
    pub at_t_tenth: f64,
    pub ratio: f64,
    /// Nonincreasing over the final decade.
    pub decreasing: bool,
}

/// Reads the scaled kernel distance column and compares its value at the
/// end of the series with the one nearest a tenth of the final time.
pub fn kernel_distance_summary(series: &Path, p: LpExponent, component: Component) -> Result<KernelDistanceSummary> {
    let records = read_series(series)?.records()?;
    let samples: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| r.kernel_distance(component, p).map(|d| (r.t, d)))
        .filter(|(_, d)| d.is_finite())
        .collect();
    let &(t_final, at_t_final) = samples
        .last()
        .ok_or_else(|| Error::InsufficientSamples("no kernel distances in series".into()))?;
    let &(t_tenth, at_t_tenth) = samples
        .iter()
        .min_by(|a, b| {
            (a.0 - t_final / 10.0)
                .abs()
                .partial_cmp(&(b.0 - t_final / 10.0).abs())
                .expect("finite times")
        })
        .expect("nonempty");
    let tail: Vec<f64> = samples.iter().filter(|(t, _)| *t >= t_tenth).map(|s| s.1).collect();
    Ok(KernelDistanceSummary {
        p,
        component: match component {
            Component::U => "u".into(),
            Component::V => "v".into(),
        },
        t_final,
        at_t_final,
        t_tenth,
        at_t_tenth,
        ratio: at_t_final / at_t_tenth,
        decreasing: tail.windows(2).all(|w| w[1] <= w[0]),
    })
}

pub fn cmd_kernel_distance(series: &Path, p: LpExponent, component: Component) -> Result<Report> {
    let s = kernel_distance_summary(series, p, component)?;
    let text = format!(
        "scaled kernel distance ({}, p={}): {:.4e} at t={}, {:.4e} at t={}, ratio {:.4}{}\n",
        s.component,
        s.p,
        s.at_t_final,
        s.t_final,
        s.at_t_tenth,
        s.t_tenth,
        s.ratio,
        if s.decreasing { ", decreasing" } else { "" }
    );
    let json = serde_json::to_value(&s).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(Report::new(text, json))
}

pub fn cmd_gn(j: u32, m: u32, p: GnExponent, q: GnExponent, r: GnExponent, dim: u32) -> Result<Report> {
    let theta = gn_theta(j, m, p, q, r, dim)?;
    let one = num_rational::Rational64::from_integer(1);
    let residual = gn_residual(j, m, p, q, r, dim, theta);
    let text = format!("theta = {theta}, 1 - theta = {}\n", one - theta);
    let json = json!({
        "j": j, "m": m, "p": p.to_string(), "q": q.to_string(), "r": r.to_string(), "N": dim,
        "theta": theta.to_string(),
        "one_minus_theta": (one - theta).to_string(),
        "theta_float": *theta.numer() as f64 / *theta.denom() as f64,
        "residual": residual.to_string(),
    });
    Ok(Report::new(text, json))
}

pub fn cmd_plot(series: &Path, quantity: &str, transform: PlotTransform, dim: usize, out: &Path) -> Result<Report> {
    fs::create_dir_all(out)?;
    let file = read_series(series)?;
    let path = out.join(format!("{quantity}.dat"));
    let meta = emit_plot_data(&file, quantity, transform, dim, &path)?;
    let text = format!("wrote {} and {}\n", path.display(), meta.display());
    Ok(Report::new(
        text,
        json!({"data": path.display().to_string(), "meta": meta.display().to_string()}),
    ))
}

/// A sweep file names a base config and a list of runs, each with dotted-key
/// overrides:
///
/// ```toml
/// base = "base.toml"
///
/// [[run]]
/// name = "weak"
/// [run.set]
/// "physics.chi" = 0.1
/// ```
#[derive(Clone, Debug, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub base: PathBuf,
    #[serde(rename = "run")]
    pub runs: Vec<SweepRun>,
}

#[derive(Clone, Debug, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRun {
    pub name: String,
    #[serde(default)]
    pub set: toml::Table,
}

/// Applies dotted-key overrides to a config document.
pub fn apply_overrides(base: &str, set: &toml::Table) -> Result<String> {
    let mut doc: toml::Table = toml::from_str(base).map_err(|e| Error::Config {
        key: String::new(),
        line: 0,
        message: e.message().to_string(),
    })?;
    for (key, value) in set {
        let parts: Vec<&str> = key.split('.').collect();
        let (last, path) = parts.split_last().expect("split yields one part");
        let mut table = &mut doc;
        for part in path {
            table = table
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| Error::Config {
                    key: key.clone(),
                    line: 0,
                    message: format!("`{part}` is not a section"),
                })?;
        }
        table.insert(last.to_string(), value.clone());
    }
    toml::to_string(&doc).map_err(|e| Error::InvalidArgument(e.to_string()))
}

pub fn cmd_sweep(sweep_path: &Path, out: &Path, reproducible: bool) -> Result<Report> {
    let text = fs::read_to_string(sweep_path)?;
    let sweep: SweepFile = toml::from_str(&text).map_err(|e| Error::Config {
        key: String::new(),
        line: e.span().map_or(0, |s| text[..s.start].matches('\n').count() + 1),
        message: e.message().to_string(),
    })?;
    let dir = sweep_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let base_path = dir.join(&sweep.base);
    let base_text = fs::read_to_string(&base_path)?;
    // validate the base once so its errors carry real line numbers
    load_config(&base_path)?;
    let mut names = std::collections::HashSet::new();
    for r in &sweep.runs {
        if r.name.is_empty() || r.name.contains(['/', '\\']) || !names.insert(r.name.clone()) {
            return Err(Error::Config {
                key: "run.name".into(),
                line: 0,
                message: format!("run names must be unique plain names, got `{}`", r.name),
            });
        }
    }
    let base_dir = base_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let results: Vec<(String, i32, String)> = sweep
        .runs
        .par_iter()
        .map(|r| {
            let outcome = apply_overrides(&base_text, &r.set)
                .and_then(|t| parse_config(&t))
                .and_then(|mut cfg| {
                    cfg.base_dir = base_dir.clone();
                    cmd_simulate(&cfg, &out.join(&r.name), reproducible)
                });
            match outcome {
                Ok(_) => (r.name.clone(), 0, "completed".to_string()),
                Err(e) => (r.name.clone(), e.exit_code(), e.to_string()),
            }
        })
        .collect();
    let mut text = String::new();
    for (name, code, msg) in &results {
        text.push_str(&format!("{name}: exit {code}: {msg}\n"));
    }
    let json = json!({
        "runs": results.iter().map(|(n, c, m)| json!({"name": n, "exit_code": c, "message": m})).collect::<Vec<_>>(),
    });
    Ok(Report {
        text,
        json,
        exit_code: results.iter().map(|r| r.1).max().unwrap_or(0),
    })
}
