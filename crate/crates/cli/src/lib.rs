//! Command-line driver: configuration, run orchestration and file output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use error::{CliError, CliResult};

use config::Settings;

#[derive(Debug, Parser)]
#[command(name = "shrinkflow", version, about = "Curve shortening flow experiments near the round shrinking circle")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Flow one curve and write series.csv, summary.json and final_curve.csv.
    Run(ConfigArgs),
    /// Check the discrete evolution identities at two resolutions and write identities.json.
    Verify(VerifyArgs),
    /// Run a grid of single-mode perturbations of the shrinker and write rates.csv.
    Sweep(SweepArgs),
    /// Integrate the radius ODE of a round sphere under the rescaled flow.
    SphereOde(SphereArgs),
}

/// Settings shared by the flow commands. Flags override the configuration file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// File of `key = value` lines using the flag names with underscores.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// circle:R | ellipse:A,B | fourier:K=AMP,... | file:PATH (x,y CSV).
    #[arg(long)]
    pub initial: Option<String>,
    /// mcf | rescaled | normal_rescaled.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub n_points: Option<String>,
    /// Sampling interval of the recorded series.
    #[arg(long, allow_hyphen_values = true)]
    pub dt: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_end: Option<String>,
    /// Resample to equal arclength every this many steps (0 disables).
    #[arg(long, allow_hyphen_values = true)]
    pub resample_every: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub cfl: Option<String>,
    /// Pin centroid and area in the rescaled modes (true or false).
    #[arg(long)]
    pub normalize: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub burn_in: Option<String>,
    /// START,END of the rate fit window.
    #[arg(long, allow_hyphen_values = true)]
    pub fit_window: Option<String>,
    /// Stop an mcf run below this fraction of the initial area.
    #[arg(long, allow_hyphen_values = true)]
    pub area_stop: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub tail_start: Option<String>,
    #[arg(long)]
    pub output_dir: Option<String>,
    /// Tolerance override, repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
}

impl ConfigArgs {
    /// Configuration file (if any) overlaid with the given flags.
    pub fn settings(&self) -> CliResult<Settings> {
        let mut s = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        let flags = [
            ("initial", &self.initial),
            ("mode", &self.mode),
            ("n_points", &self.n_points),
            ("dt", &self.dt),
            ("t_end", &self.t_end),
            ("resample_every", &self.resample_every),
            ("cfl", &self.cfl),
            ("normalize", &self.normalize),
            ("burn_in", &self.burn_in),
            ("fit_window", &self.fit_window),
            ("area_stop", &self.area_stop),
            ("tail_start", &self.tail_start),
            ("output_dir", &self.output_dir),
        ];
        for (key, value) in flags {
            s.overlay(key, value.as_deref())?;
        }
        for item in &self.tol {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("tol: expected NAME=VALUE, got `{item}`")))?;
            s.overlay(&format!("tol.{}", name.trim()), Some(value.trim()))?;
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Restrict to these identities (repeatable); all by default.
    #[arg(long = "identity")]
    pub identities: Vec<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Comma-separated wavenumbers (at least 2).
    #[arg(long)]
    pub modes: Option<String>,
    /// Comma-separated amplitudes of the radial perturbation.
    #[arg(long, allow_hyphen_values = true)]
    pub amplitudes: Option<String>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SphereArgs {
    /// Dimension n of the sphere S^n.
    #[arg(long, default_value_t = 1)]
    pub dimension: u32,
    /// Initial radius; defaults to the fixed point sqrt(2n).
    #[arg(long, allow_hyphen_values = true)]
    pub r0: Option<f64>,
    #[arg(long, default_value_t = 10.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value = "out")]
    pub output_dir: PathBuf,
}

/// Runs the parsed command.
pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run(args) => commands::run(&args).map(|_| ()),
        Command::Verify(args) => commands::verify(&args).map(|_| ()),
        Command::Sweep(args) => commands::sweep(&args).map(|_| ()),
        Command::SphereOde(args) => commands::sphere_ode(&args).map(|_| ()),
    }
}
