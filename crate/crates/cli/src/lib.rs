//! Command-line front end for `ribbonlim`.
//!
//! Every command resolves a JSON configuration (built-in defaults, then an
//! optional `--config` file, then `--set key=value` pairs, then the
//! shortcut flags) and writes reports that start with the resolved
//! configuration as `# key=value` comment lines.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;
pub mod validate;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use commands::Outputs;
use config::Config;
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "ribbonlim", version, about = "Elastic ribbon limit models: densities, profiles and developable strips")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the constants alpha_plus and alpha_minus of the rigidity.
    Alphas(Common),
    /// Tabulate the reduced density on a (mu, tau) grid.
    DensityTable {
        #[command(flatten)]
        common: Common,
        /// Chart coordinate of the density context.
        #[arg(long, allow_negative_numbers = true)]
        at: Option<f64>,
    },
    /// Compute the spontaneous (or clamped) curvature profile.
    Spontaneous {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        shape: ShapeOutputs,
        /// Minimize with clamped ends instead of pointwise.
        #[arg(long)]
        clamped: bool,
    },
    /// Build the ruled strip of a curvature profile.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        shape: ShapeOutputs,
        /// Profile CSV with columns t, mu, tau.
        #[arg(long)]
        profile: Option<String>,
    },
    /// Replace a profile by a laminated field of zero determinant.
    Corrugate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        shape: ShapeOutputs,
        /// Profile CSV with columns t, mu, tau and optionally gamma_star.
        #[arg(long)]
        profile: Option<String>,
    },
    /// Run seeded self-checks.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Suites to run: constants, relaxation, density, frames, surface, spontaneous.
        suites: Vec<String>,
        /// Run every suite.
        #[arg(long)]
        all: bool,
    },
}

#[derive(Args, Debug, Default)]
struct ShapeOutputs {
    /// Write the strip as an OBJ mesh.
    #[arg(long)]
    mesh: Option<String>,
    /// Write the flat coordinates of the mesh vertices as CSV.
    #[arg(long)]
    flat: Option<String>,
    /// Write the centerline and directors as CSV.
    #[arg(long)]
    emit_centerline: Option<String>,
    /// Number of corrugation cells.
    #[arg(long)]
    cells: Option<usize>,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set chart.type="arc"`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Main output file (default: stdout).
    #[arg(long, short)]
    out: Option<String>,
    /// Seed for randomized checks.
    #[arg(long)]
    seed: Option<u64>,
    /// Sadowsky rigidity.
    #[arg(long)]
    sadowsky: bool,
    /// Isotropic rigidity with K_mu and K_lambda.
    #[arg(long, num_args = 2, value_names = ["K_MU", "K_LAMBDA"], allow_negative_numbers = true)]
    isotropic: Option<Vec<f64>>,
    /// Orthotropic rigidity.
    #[arg(long, num_args = 4, value_names = ["K11", "K12", "K22", "K33"], allow_negative_numbers = true)]
    orthotropic: Option<Vec<f64>>,
    /// General rigidity by its upper triangle C11 C12 C13 C22 C23 C33.
    #[arg(long, num_args = 6, value_name = "C", allow_negative_numbers = true)]
    voigt: Option<Vec<f64>>,
    /// Chart type: rectangle, arc, sheared or sampled.
    #[arg(long)]
    chart: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    kappa0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    d12: Option<f64>,
    #[arg(long)]
    d22: Option<f64>,
    /// Sampled chart CSV (columns t, d11, d21, d12, d22 and optionally kappa).
    #[arg(long)]
    chart_file: Option<String>,
    #[arg(long)]
    length: Option<f64>,
    #[arg(long)]
    intervals: Option<usize>,
    /// Constant natural curvature A11 A12 A22.
    #[arg(long, num_args = 3, value_names = ["A11", "A12", "A22"], allow_negative_numbers = true)]
    natural: Option<Vec<f64>>,
    /// Natural curvature table CSV (columns t, a11, a12, a22).
    #[arg(long)]
    natural_file: Option<String>,
}

impl Common {
    fn overrides(&self) -> Result<Vec<(String, Value)>, CliError> {
        let mut o = Vec::new();
        for item in &self.set {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| CliError::input("--set", format!("expected KEY=VALUE, got '{item}'")))?;
            let value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
            o.push((key.trim().to_string(), value));
        }
        let mut put = |k: &str, v: Value| o.push((k.to_string(), v));
        if self.sadowsky {
            put("rigidity.type", json!("sadowsky"));
        }
        if let Some(v) = &self.isotropic {
            put("rigidity.type", json!("isotropic"));
            put("rigidity.k_mu", json!(v[0]));
            put("rigidity.k_lambda", json!(v[1]));
        }
        if let Some(v) = &self.orthotropic {
            put("rigidity.type", json!("orthotropic"));
            for (k, x) in ["k11", "k12", "k22", "k33"].iter().zip(v) {
                put(&format!("rigidity.{k}"), json!(x));
            }
        }
        if let Some(v) = &self.voigt {
            put("rigidity.type", json!("voigt"));
            put("rigidity.entries", json!(v));
        }
        if let Some(v) = &self.chart {
            put("chart.type", json!(v));
        }
        if let Some(v) = self.kappa0 {
            put("chart.kappa0", json!(v));
        }
        if let Some(v) = self.d12 {
            put("chart.d12", json!(v));
        }
        if let Some(v) = self.d22 {
            put("chart.d22", json!(v));
        }
        if let Some(v) = &self.chart_file {
            put("chart.type", json!("sampled"));
            put("chart.file", json!(v));
        }
        if let Some(v) = self.length {
            put("length", json!(v));
        }
        if let Some(v) = self.intervals {
            put("intervals", json!(v));
        }
        if let Some(v) = &self.natural {
            put("natural_curvature.type", json!("constant"));
            put("natural_curvature.a11", json!(v[0]));
            put("natural_curvature.a12", json!(v[1]));
            put("natural_curvature.a22", json!(v[2]));
        }
        if let Some(v) = &self.natural_file {
            put("natural_curvature.type", json!("table"));
            put("natural_curvature.file", json!(v));
        }
        if let Some(v) = self.seed {
            put("seed", json!(v));
        }
        Ok(o)
    }

    fn load(&self, extra: Vec<(String, Value)>) -> Result<Config, CliError> {
        let mut o = self.overrides()?;
        o.extend(extra);
        Config::load(self.config.as_deref(), &o)
    }

    fn outputs(&self, shape: Option<&ShapeOutputs>, profile: Option<&String>) -> Outputs {
        Outputs {
            out: self.out.clone(),
            mesh: shape.and_then(|s| s.mesh.clone()),
            flat: shape.and_then(|s| s.flat.clone()),
            centerline: shape.and_then(|s| s.emit_centerline.clone()),
            profile: profile.cloned(),
        }
    }
}

fn cells(shape: &ShapeOutputs) -> Vec<(String, Value)> {
    shape.cells.map(|n| vec![("surface.cells".to_string(), json!(n))]).unwrap_or_default()
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Alphas(common) => commands::alphas(&common.load(vec![])?, &common.outputs(None, None)),
        Command::DensityTable { common, at } => {
            let extra = at.map(|t| vec![("density_table.at".to_string(), json!(t))]).unwrap_or_default();
            commands::density_table(&common.load(extra)?, &common.outputs(None, None))
        }
        Command::Spontaneous { common, shape, clamped } => {
            let mut extra = cells(&shape);
            if clamped {
                extra.push(("spontaneous.mode".into(), json!("clamped")));
            }
            commands::spontaneous(&common.load(extra)?, &common.outputs(Some(&shape), None))
        }
        Command::Reconstruct { common, shape, profile } => {
            commands::reconstruct(&common.load(cells(&shape))?, &common.outputs(Some(&shape), profile.as_ref()))
        }
        Command::Corrugate { common, shape, profile } => {
            commands::corrugate_cmd(&common.load(cells(&shape))?, &common.outputs(Some(&shape), profile.as_ref()))
        }
        Command::Validate { common, suites, all } => {
            let cfg = common.load(vec![])?;
            let names: Vec<String> = if all || suites.is_empty() {
                validate::SUITES.iter().map(|s| s.to_string()).collect()
            } else {
                suites
            };
            let mut header = vec![("command".to_string(), "validate".to_string())];
            header.extend(cfg.header());
            header.push(("suites".into(), names.join(" ")));
            let mut report = table::Report::new(&header);
            let failed = validate::run(&names, cfg.u64("seed")?, &mut report)?;
            commands::emit(common.out.as_deref(), &report.into_string())?;
            if failed.is_empty() {
                Ok(())
            } else {
                let list: Vec<String> = failed.iter().map(|c| format!("{}.{}", c.suite, c.check)).collect();
                Err(CliError::Validation(list.join(", ")))
            }
        }
    }
}

fn thread_pool() -> Result<Option<rayon::ThreadPool>, CliError> {
    let Ok(value) = std::env::var("RIBBONLIM_THREADS") else {
        return Ok(None);
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::input("RIBBONLIM_THREADS", format!("expected a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map(Some)
        .map_err(|e| CliError::input("RIBBONLIM_THREADS", e.to_string()))
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code: 0 on success, 1 for input errors, 2 for numerical or validation
/// failures.
pub fn run(argv: Vec<OsString>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = thread_pool().and_then(|pool| match pool {
        Some(pool) => pool.install(|| dispatch(cli.command)),
        None => dispatch(cli.command),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
