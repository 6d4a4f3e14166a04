//! Experiment configuration files.
//!
//! A config is a TOML document with the sections `[grid]`, `[physics]`,
//! `[time]`, `[initial.u]`, `[initial.v]`, `[diagnostics]` and `[analysis]`.
//! Unknown keys are rejected, and every error names the offending key and
//! the line it sits on.
//!
//! ```toml
//! [grid]
//! dim = 1
//! half_width = 40.0
//! n = 512
//!
//! [physics]
//! chi = 0.5
//! xi = 0.5
//!
//! [time]
//! t_final = 50.0
//!
//! [initial.u]
//! kind = "gaussian"
//! mass = 1.0
//! width = 0.5
//!
//! [initial.v]
//! kind = "expression"
//! name = "bump"
//! amplitude = 0.2
//! width = 2.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::diagnostics::{DiagnosticsSpec, KernelOptions};
use crate::dynamics::{SimParams, State};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::io::snapshot::snapshot_load;
use crate::norms::LpExponent;
use crate::stepper::StepPolicy;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub half_width: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub chi: f64,
    pub xi: f64,
    #[serde(default)]
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_final: f64,
    #[serde(default = "defaults::dt_init")]
    pub dt_init: f64,
    #[serde(default = "defaults::dt_max")]
    pub dt_max: f64,
    #[serde(default = "defaults::cfl_safety")]
    pub cfl_safety: f64,
    #[serde(default = "defaults::max_steps")]
    pub max_steps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Gaussian,
    File,
    Expression,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `amplitude exp(1 - 1/(1 - |x-c|^2/width^2))` inside the ball of radius
    /// `width`, zero outside.
    Bump,
    /// Two Gaussians `amplitude exp(-|x - c -+ s e_1|^2 / width^2)`, `s` the
    /// separation.
    DoubleGaussian,
    /// `amplitude prod_i sech^2((x_i - c_i) / width)`.
    Sech2,
}

/// Initial density of one component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub kind: InitialKind,
    /// Gaussian: total mass.
    pub mass: Option<f64>,
    /// Gaussian: standard deviation. Expression: profile length scale.
    pub width: Option<f64>,
    pub center: Option<Vec<f64>>,
    /// File: snapshot path, relative to the config file.
    pub path: Option<PathBuf>,
    /// Expression: profile name.
    pub name: Option<Profile>,
    pub amplitude: Option<f64>,
    pub separation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub u: InitialSpec,
    pub v: InitialSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    #[serde(default = "defaults::p_list")]
    pub p_list: Vec<LpExponent>,
    /// Simulation-time spacing of records.
    #[serde(default = "defaults::cadence")]
    pub cadence: f64,
    pub moment_r: Option<f64>,
    /// Write `initial.snap` and `final.snap` next to the series.
    #[serde(default)]
    pub snapshots: bool,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection {
            p_list: defaults::p_list(),
            cadence: defaults::cadence(),
            moment_r: None,
            snapshots: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Rate-fit window; the last decade `[t_final/10, t_final]` when absent.
    pub rate_window: Option<[f64; 2]>,
    #[serde(default = "defaults::yes")]
    pub kernel_distance: bool,
    #[serde(default)]
    pub kernel_t_offset: f64,
    #[serde(default)]
    pub kernel_center: Vec<f64>,
    #[serde(default = "defaults::lambda")]
    pub scaling_lambda: f64,
    /// Comparison time of the rescaled run; `t_final / lambda^2` when absent.
    pub scaling_t_check: Option<f64>,
    #[serde(default = "defaults::yes")]
    pub energy_checks: bool,
    #[serde(default = "defaults::c_star")]
    pub c_star: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            rate_window: None,
            kernel_distance: true,
            kernel_t_offset: 0.0,
            kernel_center: Vec::new(),
            scaling_lambda: defaults::lambda(),
            scaling_t_check: None,
            energy_checks: true,
            c_star: defaults::c_star(),
        }
    }
}

mod defaults {
    use crate::norms::LpExponent;
    use crate::stepper::StepPolicy;

    pub fn dt_init() -> f64 {
        StepPolicy::default().dt_init
    }
    pub fn dt_max() -> f64 {
        StepPolicy::default().dt_max
    }
    pub fn cfl_safety() -> f64 {
        StepPolicy::default().cfl_safety
    }
    pub fn max_steps() -> usize {
        StepPolicy::default().max_steps
    }
    pub fn cadence() -> f64 {
        StepPolicy::default().record_every
    }
    pub fn p_list() -> Vec<LpExponent> {
        vec![LpExponent::ONE, LpExponent::TWO, LpExponent::INFINITY]
    }
    pub fn yes() -> bool {
        true
    }
    pub fn lambda() -> f64 {
        2.0
    }
    pub fn c_star() -> f64 {
        1.0
    }
}

/// A parsed and validated experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSection,
    pub physics: PhysicsSection,
    pub time: TimeSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    /// Directory that relative snapshot paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let (key, line) = match e.span() {
            Some(span) => (
                text.get(span.clone()).unwrap_or("").trim().trim_matches('"').to_string(),
                line_of(text, span.start),
            ),
            None => (String::new(), 0),
        };
        Error::Config {
            key,
            line,
            message: e.message().trim().to_string(),
        }
    })?;
    cfg.validate(text)?;
    Ok(cfg)
}

/// Reads a config file; relative snapshot paths resolve against its directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = parse_config(&text)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(cfg)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[section]`, or of the section header when the key
/// is absent, or 0.
fn locate(text: &str, section: &str, key: &str) -> usize {
    let mut current = String::new();
    let mut header_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section {
                header_line = i + 1;
            }
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return i + 1;
                }
            }
        }
    }
    header_line
}

struct Checker<'a> {
    text: &'a str,
}

impl Checker<'_> {
    fn fail(&self, section: &str, key: &str, message: impl Into<String>) -> Error {
        Error::Config {
            key: format!("{section}.{key}"),
            line: locate(self.text, section, key),
            message: message.into(),
        }
    }

    fn require(&self, ok: bool, section: &str, key: &str, message: &str) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(self.fail(section, key, message))
        }
    }
}

impl ExperimentConfig {
    fn validate(&self, text: &str) -> Result<()> {
        let c = Checker { text };
        let g = &self.grid;
        c.require((1..=3).contains(&g.dim), "grid", "dim", "must be 1, 2 or 3")?;
        c.require(g.half_width.is_finite() && g.half_width > 0.0, "grid", "half_width", "must be positive")?;
        c.require(
            g.n >= crate::grid::MIN_POINTS && g.n.is_power_of_two(),
            "grid",
            "n",
            "must be a power of two, at least 8",
        )?;

        let p = &self.physics;
        c.require(p.chi.is_finite() && p.chi >= 0.0, "physics", "chi", "must be nonnegative")?;
        c.require(p.xi.is_finite() && p.xi >= 0.0, "physics", "xi", "must be nonnegative")?;
        c.require(p.epsilon.is_finite() && p.epsilon >= 0.0, "physics", "epsilon", "must be nonnegative")?;

        let t = &self.time;
        c.require(t.t_final.is_finite() && t.t_final >= 0.0, "time", "t_final", "must be nonnegative")?;
        c.require(t.dt_init.is_finite() && t.dt_init > 0.0, "time", "dt_init", "must be positive")?;
        c.require(t.dt_max.is_finite() && t.dt_max > 0.0, "time", "dt_max", "must be positive")?;
        c.require(t.dt_init <= t.dt_max, "time", "dt_init", "must not exceed dt_max")?;
        c.require(t.cfl_safety > 0.0 && t.cfl_safety <= 1.0, "time", "cfl_safety", "must lie in (0, 1]")?;
        c.require(t.max_steps > 0, "time", "max_steps", "must be positive")?;

        for (name, spec) in [("initial.u", &self.initial.u), ("initial.v", &self.initial.v)] {
            validate_initial(&c, name, spec, g.dim)?;
        }

        let d = &self.diagnostics;
        c.require(!d.p_list.is_empty(), "diagnostics", "p_list", "must not be empty")?;
        c.require(d.cadence.is_finite() && d.cadence > 0.0, "diagnostics", "cadence", "must be positive")?;
        if let Some(r) = d.moment_r {
            c.require(r > 0.0 && r <= 1.0, "diagnostics", "moment_r", "must lie in (0, 1]")?;
        }

        let a = &self.analysis;
        if let Some([lo, hi]) = a.rate_window {
            c.require(lo > 0.0 && lo < hi, "analysis", "rate_window", "needs 0 < t_lo < t_hi")?;
        }
        c.require(a.kernel_t_offset.is_finite() && a.kernel_t_offset >= 0.0, "analysis", "kernel_t_offset", "must be nonnegative")?;
        c.require(a.kernel_center.len() <= g.dim, "analysis", "kernel_center", "has more coordinates than dimensions")?;
        c.require(a.scaling_lambda.is_finite() && a.scaling_lambda > 0.0, "analysis", "scaling_lambda", "must be positive")?;
        if let Some(tc) = a.scaling_t_check {
            c.require(tc.is_finite() && tc >= 0.0, "analysis", "scaling_t_check", "must be nonnegative")?;
        }
        c.require(a.c_star.is_finite() && a.c_star > 0.0, "analysis", "c_star", "must be positive")?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.dim, self.grid.half_width, self.grid.n)
    }

    pub fn policy(&self) -> StepPolicy {
        StepPolicy {
            dt_init: self.time.dt_init,
            dt_max: self.time.dt_max,
            cfl_safety: self.time.cfl_safety,
            max_steps: self.time.max_steps,
            record_every: self.diagnostics.cadence,
        }
    }

    pub fn sim_params(&self) -> Result<SimParams> {
        SimParams::new(
            self.physics.chi,
            self.physics.xi,
            self.physics.epsilon,
            self.grid()?,
            self.policy(),
            self.time.t_final,
        )
    }

    pub fn diagnostics_spec(&self) -> DiagnosticsSpec {
        DiagnosticsSpec {
            p_list: self.diagnostics.p_list.clone(),
            moment_r: self.diagnostics.moment_r,
            kernel: KernelOptions {
                t_offset: self.analysis.kernel_t_offset,
                center: self.analysis.kernel_center.clone(),
            },
            c_star: self.analysis.c_star,
        }
    }

    /// `[t_lo, t_hi]` for rate fits.
    pub fn rate_window(&self) -> (f64, f64) {
        match self.analysis.rate_window {
            Some([lo, hi]) => (lo, hi),
            None => crate::analysis::rates::default_window(self.time.t_final),
        }
    }

    pub fn initial_state(&self) -> Result<State> {
        let grid = self.grid()?;
        let u = build_initial(&self.initial.u, &grid, &self.base_dir, true)?;
        let v = build_initial(&self.initial.v, &grid, &self.base_dir, false)?;
        State::new(u, v, 0.0)
    }
}

fn validate_initial(c: &Checker, section: &str, s: &InitialSpec, dim: usize) -> Result<()> {
    let forbid = |present: bool, key: &str| {
        c.require(!present, section, key, &format!("not used by kind `{}`", kind_name(s.kind)))
    };
    match s.kind {
        InitialKind::Gaussian => {
            let mass = s.mass.ok_or_else(|| c.fail(section, "mass", "required for a gaussian"))?;
            c.require(mass.is_finite() && mass >= 0.0, section, "mass", "must be nonnegative")?;
            let width = s.width.ok_or_else(|| c.fail(section, "width", "required for a gaussian"))?;
            c.require(width.is_finite() && width > 0.0, section, "width", "must be positive")?;
            forbid(s.path.is_some(), "path")?;
            forbid(s.name.is_some(), "name")?;
            forbid(s.amplitude.is_some(), "amplitude")?;
            forbid(s.separation.is_some(), "separation")?;
        }
        InitialKind::File => {
            c.require(s.path.is_some(), section, "path", "required for a file")?;
            for (present, key) in [
                (s.mass.is_some(), "mass"),
                (s.width.is_some(), "width"),
                (s.center.is_some(), "center"),
                (s.name.is_some(), "name"),
                (s.amplitude.is_some(), "amplitude"),
                (s.separation.is_some(), "separation"),
            ] {
                forbid(present, key)?;
            }
        }
        InitialKind::Expression => {
            let name = s.name.ok_or_else(|| c.fail(section, "name", "required for an expression"))?;
            if let Some(a) = s.amplitude {
                c.require(a.is_finite() && a >= 0.0, section, "amplitude", "must be nonnegative")?;
            }
            if let Some(w) = s.width {
                c.require(w.is_finite() && w > 0.0, section, "width", "must be positive")?;
            }
            if let Some(sep) = s.separation {
                c.require(sep.is_finite(), section, "separation", "must be finite")?;
                c.require(name == Profile::DoubleGaussian, section, "separation", "only used by double_gaussian")?;
            }
            forbid(s.mass.is_some(), "mass")?;
            forbid(s.path.is_some(), "path")?;
        }
    }
    if let Some(center) = &s.center {
        c.require(center.len() <= dim, section, "center", "has more coordinates than dimensions")?;
        c.require(center.iter().all(|x| x.is_finite()), section, "center", "must be finite")?;
    }
    Ok(())
}

fn kind_name(k: InitialKind) -> &'static str {
    match k {
        InitialKind::Gaussian => "gaussian",
        InitialKind::File => "file",
        InitialKind::Expression => "expression",
    }
}

/// Samples one component's initial density on `grid`.
pub fn build_initial(spec: &InitialSpec, grid: &Grid, base_dir: &Path, is_u: bool) -> Result<Field> {
    let center = spec.center.clone().unwrap_or_default();
    let offset = move |x: &[f64], axis: usize| x[axis] - center.get(axis).copied().unwrap_or(0.0);
    match spec.kind {
        InitialKind::Gaussian => {
            let mass = spec.mass.unwrap_or(1.0);
            let sigma = spec.width.unwrap_or(1.0);
            let dim = grid.dim() as f64;
            let norm = mass * (2.0 * std::f64::consts::PI * sigma * sigma).powf(-dim / 2.0);
            Ok(Field::from_fn(grid, |x| {
                let r2: f64 = (0..x.len()).map(|a| offset(x, a).powi(2)).sum();
                norm * (-r2 / (2.0 * sigma * sigma)).exp()
            }))
        }
        InitialKind::Expression => {
            let amp = spec.amplitude.unwrap_or(1.0);
            let w = spec.width.unwrap_or(1.0);
            Ok(match spec.name.expect("validated") {
                Profile::Bump => Field::from_fn(grid, |x| {
                    let r2: f64 = (0..x.len()).map(|a| offset(x, a).powi(2)).sum::<f64>() / (w * w);
                    if r2 < 1.0 {
                        amp * (1.0 - 1.0 / (1.0 - r2)).exp()
                    } else {
                        0.0
                    }
                }),
                Profile::DoubleGaussian => {
                    let s = spec.separation.unwrap_or(1.0);
                    Field::from_fn(grid, |x| {
                        let rest: f64 = (1..x.len()).map(|a| offset(x, a).powi(2)).sum();
                        let d0 = offset(x, 0);
                        let g = |shift: f64| (-((d0 - shift).powi(2) + rest) / (w * w)).exp();
                        amp * (g(s) + g(-s))
                    })
                }
                Profile::Sech2 => Field::from_fn(grid, |x| {
                    amp * (0..x.len())
                        .map(|a| 1.0 / (offset(x, a) / w).cosh().powi(2))
                        .product::<f64>()
                }),
            })
        }
        InitialKind::File => {
            let path = spec.path.as_ref().expect("validated");
            let path = if path.is_absolute() {
                path.clone()
            } else {
                base_dir.join(path)
            };
            let snap = snapshot_load(&path)?;
            if snap.state.grid() != grid {
                return Err(Error::Snapshot(format!(
                    "{} was written on a different grid",
                    path.display()
                )));
            }
            Ok(if is_u { snap.state.u } else { snap.state.v })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
dim = 1
half_width = 20.0
n = 128

[physics]
chi = 0.5
xi = 0.25

[time]
t_final = 2.0

[initial.u]
kind = "gaussian"
mass = 1.0
width = 0.5

[initial.v]
kind = "gaussian"
mass = 2.0
width = 1.0
center = [1.0]
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.physics.epsilon, 0.0);
        assert_eq!(cfg.diagnostics.cadence, 0.1);
        assert_eq!(
            cfg.diagnostics.p_list,
            vec![LpExponent::ONE, LpExponent::TWO, LpExponent::INFINITY]
        );
        assert_eq!(cfg.rate_window(), (0.2, 2.0));
        let s = cfg.initial_state().unwrap();
        let m = crate::norms::mass(&s.v);
        assert!((m - 2.0).abs() < 1e-10);
    }

    #[test]
    fn negative_chi_names_key_and_line() {
        let text = MINIMAL.replace("chi = 0.5", "chi = -0.5");
        match parse_config(&text).unwrap_err() {
            Error::Config { key, line, .. } => {
                assert_eq!(key, "physics.chi");
                assert_eq!(line, 8);
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let text = MINIMAL.replace("xi = 0.25", "xhi = 0.25");
        match parse_config(&text).unwrap_err() {
            Error::Config { key, line, message } => {
                assert_eq!(key, "xhi", "{message}");
                assert_eq!(line, 9);
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn infinity_in_p_list() {
        let text = format!("{MINIMAL}\n[diagnostics]\np_list = [2, 4, inf, \"inf\"]\n");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.diagnostics.p_list[2], LpExponent::INFINITY);
        assert_eq!(cfg.diagnostics.p_list[3], LpExponent::INFINITY);
    }

    #[test]
    fn moment_exponent_range() {
        let text = format!("{MINIMAL}\n[diagnostics]\nmoment_r = 1.5\n");
        assert!(matches!(parse_config(&text), Err(Error::Config { .. })));
        let text = format!("{MINIMAL}\n[diagnostics]\np_list = []\n");
        assert!(matches!(parse_config(&text), Err(Error::Config { .. })));
    }

    #[test]
    fn expression_profiles_are_nonnegative() {
        let g = Grid::new(2, 6.0, 32).unwrap();
        for name in [Profile::Bump, Profile::DoubleGaussian, Profile::Sech2] {
            let spec = InitialSpec {
                kind: InitialKind::Expression,
                mass: None,
                width: Some(2.0),
                center: Some(vec![0.5]),
                path: None,
                name: Some(name),
                amplitude: Some(0.3),
                separation: None,
            };
            let f = build_initial(&spec, &g, Path::new("."), true).unwrap();
            assert!(f.min() >= 0.0);
            assert!(f.max_abs() > 0.0 && f.max_abs() <= 0.6 + 1e-12);
        }
    }

    #[test]
    fn kind_specific_keys_enforced() {
        let text = MINIMAL.replacen("width = 0.5", "width = 0.5\nname = \"bump\"", 1);
        assert!(matches!(parse_config(&text), Err(Error::Config { .. })));
    }
}
