use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use crossdiff::analysis::gn::GnExponent;
use crossdiff::analysis::Component;
use crossdiff::io::commands::{self, Report};
use crossdiff::io::config::load_config;
use crossdiff::io::plot::PlotTransform;
use crossdiff::{Error, Grid, LpExponent, Result};

#[derive(Parser)]
#[command(name = "crossdiff", version, about = "Cross-diffusion simulator and verification harness")]
struct Cli {
    /// Experiment config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Omit timestamps so identical configs give byte-identical output.
    #[arg(long, global = true)]
    reproducible: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write series.csv and summary.json.
    Simulate,
    /// Sweep the heat-semigroup smoothing estimates on the config's grid
    /// (or a default 1D grid without a config).
    VerifySemigroup,
    /// Compare a run with its parabolically rescaled counterpart.
    ScalingCheck {
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        t_check: Option<f64>,
    },
    /// Fit a power law to a norm column of a series.
    RateFit {
        series: PathBuf,
        #[arg(long, default_value = "inf")]
        p: LpExponent,
        #[arg(long, default_value = "u")]
        component: Component,
        #[arg(long, num_args = 2, value_names = ["T_LO", "T_HI"])]
        window: Option<Vec<f64>>,
    },
    /// Summarize the scaled heat-kernel distance of a series.
    KernelDistance {
        series: PathBuf,
        #[arg(long, default_value = "inf")]
        p: LpExponent,
        #[arg(long, default_value = "u")]
        component: Component,
    },
    /// Solve the Gagliardo-Nirenberg exponent relation for theta.
    Gn {
        #[arg(long)]
        j: u32,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        p: GnExponent,
        #[arg(long)]
        q: GnExponent,
        #[arg(long)]
        r: GnExponent,
        #[arg(long = "dim")]
        dim: u32,
    },
    /// Run every entry of a sweep file, one output directory per run.
    Sweep { file: PathBuf },
    /// Write two-column plot data for one series column.
    Plot {
        series: PathBuf,
        #[arg(long)]
        quantity: String,
        #[arg(long, default_value = "raw")]
        transform: PlotTransform,
        #[arg(long, default_value_t = 1)]
        dim: usize,
    },
}

fn require_config(cli: &Cli) -> Result<PathBuf> {
    cli.config.clone().ok_or_else(|| Error::Config {
        key: "--config".into(),
        line: 0,
        message: "this command needs a config file".into(),
    })
}

fn dispatch(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Simulate => {
            let cfg = load_config(&require_config(cli)?)?;
            commands::cmd_simulate(&cfg, &cli.out, cli.reproducible)
        }
        Command::VerifySemigroup => {
            let grid = match &cli.config {
                Some(path) => load_config(path)?.grid()?,
                None => Grid::new(1, 64.0, 1024)?,
            };
            commands::cmd_verify_semigroup(&grid)
        }
        Command::ScalingCheck { lambda, t_check } => {
            let cfg = load_config(&require_config(cli)?)?;
            commands::cmd_scaling_check(&cfg, *lambda, *t_check)
        }
        Command::RateFit {
            series,
            p,
            component,
            window,
        } => commands::cmd_rate_fit(series, window.as_ref().map(|w| (w[0], w[1])), *p, *component),
        Command::KernelDistance { series, p, component } => commands::cmd_kernel_distance(series, *p, *component),
        Command::Gn { j, m, p, q, r, dim } => commands::cmd_gn(*j, *m, *p, *q, *r, *dim),
        Command::Sweep { file } => commands::cmd_sweep(file, &cli.out, cli.reproducible),
        Command::Plot {
            series,
            quantity,
            transform,
            dim,
        } => commands::cmd_plot(series, quantity, *transform, *dim, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(report) => {
            print!("{}", report.text);
            println!("{}", report.json);
            ExitCode::from(report.exit_code as u8)
        }
        Err(e) => {
            let code = e.exit_code();
            eprintln!("error: {e}");
            println!("{}", json!({"status": "error", "exit_code": code, "error": e.to_string()}));
            ExitCode::from(code as u8)
        }
    }
}
