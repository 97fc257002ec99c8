//! Run configuration from a TOML-style file plus command-line overrides.
//!
//! ```text
//! [band]   theta1_deg theta2_deg omega lambda upsilon psi1 psi2 u_scale
//! [grid]   n_rho n_phi n_zonal
//! [run]    mode method dt cfl t_end output_stride checkpoint_every
//!          amplitude wavenumber seed limiter drift_tolerance out
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use circumpolar_core::euler2d::Limiter;
use circumpolar_core::{AnnulusGrid, BandConfig, Method};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Zonal,
    Evolve,
    Stability,
    Spectrum,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Zonal => "zonal",
            Mode::Evolve => "evolve",
            Mode::Stability => "stability",
            Mode::Spectrum => "spectrum",
        })
    }
}

impl FromStr for Mode {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zonal" => Ok(Mode::Zonal),
            "evolve" => Ok(Mode::Evolve),
            "stability" => Ok(Mode::Stability),
            "spectrum" => Ok(Mode::Spectrum),
            other => Err(CliError::validation(
                "mode",
                format!("expected zonal, evolve, stability or spectrum, got `{other}`"),
            )),
        }
    }
}

/// A fully validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub mode: Mode,
    pub config: BandConfig,
    pub n_rho: usize,
    pub n_phi: usize,
    /// Latitude intervals of the zonal profile written by `zonal` mode.
    pub n_zonal: usize,
    pub method: Method,
    /// Fixed time step; `None` picks the largest step with Courant number `cfl`.
    pub dt: Option<f64>,
    pub cfl: f64,
    pub t_end: f64,
    pub output_stride: usize,
    /// Checkpoint every this many outputs (the final state is always written).
    pub checkpoint_every: usize,
    /// Peak perturbation speed relative to the peak zonal speed.
    pub amplitude: f64,
    pub wavenumber: u32,
    pub seed: u64,
    pub limiter: Limiter,
    pub drift_tolerance: f64,
    pub output_dir: PathBuf,
}

pub const DEFAULT_N: usize = 128;
pub const DEFAULT_N_ZONAL: usize = 400;
pub const DEFAULT_CFL: f64 = 0.5;
pub const DEFAULT_T_END: f64 = 1.0;
pub const DEFAULT_OUTPUT_STRIDE: usize = 10;
pub const DEFAULT_CHECKPOINT_EVERY: usize = 10;
pub const DEFAULT_STABILITY_AMPLITUDE: f64 = 0.01;
pub const DEFAULT_WAVENUMBER: u32 = 3;
pub const DEFAULT_DRIFT_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    band: BandSection,
    grid: GridSection,
    run: RunSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BandSection {
    theta1_deg: Option<f64>,
    theta2_deg: Option<f64>,
    omega: Option<f64>,
    lambda: Option<f64>,
    upsilon: Option<f64>,
    psi1: Option<f64>,
    psi2: Option<f64>,
    u_scale: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GridSection {
    n_rho: Option<usize>,
    n_phi: Option<usize>,
    n_zonal: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunSection {
    mode: Option<String>,
    method: Option<String>,
    dt: Option<f64>,
    cfl: Option<f64>,
    t_end: Option<f64>,
    output_stride: Option<usize>,
    checkpoint_every: Option<usize>,
    amplitude: Option<f64>,
    wavenumber: Option<u32>,
    seed: Option<u64>,
    limiter: Option<String>,
    drift_tolerance: Option<f64>,
    out: Option<PathBuf>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// zonal, evolve, stability or spectrum
    #[arg(long)]
    pub mode: Option<String>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Radial grid cells
    #[arg(long)]
    pub n_rho: Option<usize>,
    /// Azimuthal grid cells
    #[arg(long)]
    pub n_phi: Option<usize>,
    /// Time step (default: from the CFL target)
    #[arg(long, allow_hyphen_values = true)]
    pub dt: Option<f64>,
    /// Final time
    #[arg(long, allow_hyphen_values = true)]
    pub t_end: Option<f64>,
    /// Lagrange multiplier lambda
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Constant vorticity offset Upsilon
    #[arg(long, allow_hyphen_values = true)]
    pub upsilon: Option<f64>,
    /// Stream function on the southern boundary
    #[arg(long, allow_hyphen_values = true)]
    pub psi1: Option<f64>,
    /// Stream function on the northern boundary
    #[arg(long, allow_hyphen_values = true)]
    pub psi2: Option<f64>,
    /// Southern boundary latitude in degrees
    #[arg(long, allow_hyphen_values = true)]
    pub theta1_deg: Option<f64>,
    /// Northern boundary latitude in degrees
    #[arg(long, allow_hyphen_values = true)]
    pub theta2_deg: Option<f64>,
    /// Perturbation amplitude relative to the peak zonal speed
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude: Option<f64>,
    /// Perturbation azimuthal wavenumber
    #[arg(long)]
    pub wavenumber: Option<u32>,
    /// Seed for the perturbation phase
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Parses configuration text (possibly empty) and applies `overrides`.
pub fn parse_config(text: &str, overrides: &Overrides) -> Result<RunSpec> {
    let file: FileConfig = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
    build(file, overrides)
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text, overrides)
}

fn parse_error(text: &str, e: &toml::de::Error) -> CliError {
    let (line, key) = match e.span() {
        Some(span) => {
            let start = span.start.min(text.len());
            let line = text[..start].matches('\n').count() + 1;
            let key = text
                .lines()
                .nth(line - 1)
                .and_then(|l| l.split_once('='))
                .map(|(k, _)| k.trim().to_string())
                .filter(|k| !k.is_empty());
            (line, key)
        }
        None => (0, None),
    };
    CliError::Parse {
        line,
        key,
        message: e.message().to_string(),
    }
}

fn build(file: FileConfig, o: &Overrides) -> Result<RunSpec> {
    let FileConfig { band: b, grid, run: r } = file;
    let mode: Mode = o
        .mode
        .clone()
        .or(r.mode)
        .ok_or_else(|| CliError::validation("mode", "a run mode is required"))?
        .parse()?;

    let defaults = BandConfig::default();
    let theta1_deg = o.theta1_deg.or(b.theta1_deg).unwrap_or(defaults.theta1.to_degrees());
    let theta2_deg = o.theta2_deg.or(b.theta2_deg).unwrap_or(defaults.theta2.to_degrees());
    let config = BandConfig {
        theta1: theta1_deg.to_radians(),
        theta2: theta2_deg.to_radians(),
        psi1: o.psi1.or(b.psi1).unwrap_or(defaults.psi1),
        psi2: o.psi2.or(b.psi2).unwrap_or(defaults.psi2),
        omega: b.omega.unwrap_or(defaults.omega),
        lambda: o.lambda.or(b.lambda).unwrap_or(defaults.lambda),
        upsilon: o.upsilon.or(b.upsilon).unwrap_or(defaults.upsilon),
        u_scale: b.u_scale.unwrap_or(defaults.u_scale),
    };
    config
        .validate()
        .map_err(|e| CliError::validation("band", e.to_string()))?;

    let method = match r.method {
        Some(m) => m
            .parse()
            .map_err(|e: circumpolar_core::Error| CliError::validation("method", e.to_string()))?,
        None => Method::FiniteDifference,
    };
    let limiter = match r.limiter {
        Some(l) => l
            .parse()
            .map_err(|e: circumpolar_core::Error| CliError::validation("limiter", e.to_string()))?,
        None => Limiter::default(),
    };
    let default_amplitude = if mode == Mode::Stability {
        DEFAULT_STABILITY_AMPLITUDE
    } else {
        0.0
    };
    let spec = RunSpec {
        mode,
        config,
        n_rho: o.n_rho.or(grid.n_rho).unwrap_or(DEFAULT_N),
        n_phi: o.n_phi.or(grid.n_phi).unwrap_or(DEFAULT_N),
        n_zonal: grid.n_zonal.unwrap_or(DEFAULT_N_ZONAL),
        method,
        dt: o.dt.or(r.dt),
        cfl: r.cfl.unwrap_or(DEFAULT_CFL),
        t_end: o.t_end.or(r.t_end).unwrap_or(DEFAULT_T_END),
        output_stride: r.output_stride.unwrap_or(DEFAULT_OUTPUT_STRIDE),
        checkpoint_every: r.checkpoint_every.unwrap_or(DEFAULT_CHECKPOINT_EVERY),
        amplitude: o.amplitude.or(r.amplitude).unwrap_or(default_amplitude),
        wavenumber: o.wavenumber.or(r.wavenumber).unwrap_or(DEFAULT_WAVENUMBER),
        seed: o.seed.or(r.seed).unwrap_or(0),
        limiter,
        drift_tolerance: r.drift_tolerance.unwrap_or(DEFAULT_DRIFT_TOLERANCE),
        output_dir: o.out.clone().or(r.out).unwrap_or_else(|| PathBuf::from("out")),
    };
    spec.validate()?;
    Ok(spec)
}

impl RunSpec {
    /// Checks the invariants that do not depend on the run mode's numerics.
    pub fn validate(&self) -> Result<()> {
        let time_stepping = matches!(self.mode, Mode::Evolve | Mode::Stability);
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(CliError::validation("dt", format!("must be positive, got {dt}")));
            }
        }
        if time_stepping && !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(CliError::validation(
                "t_end",
                format!("must be positive, got {}", self.t_end),
            ));
        }
        if !(self.cfl > 0.0 && self.cfl <= circumpolar_core::euler2d::DEFAULT_COURANT_LIMIT) {
            return Err(CliError::validation(
                "cfl",
                format!(
                    "must lie in (0, {}], got {}",
                    circumpolar_core::euler2d::DEFAULT_COURANT_LIMIT,
                    self.cfl
                ),
            ));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(CliError::validation(
                "amplitude",
                format!("must be non-negative, got {}", self.amplitude),
            ));
        }
        if self.amplitude > 0.0 && self.wavenumber == 0 {
            return Err(CliError::validation("wavenumber", "must be at least 1"));
        }
        if self.output_stride == 0 {
            return Err(CliError::validation("output_stride", "must be at least 1"));
        }
        if !(self.drift_tolerance > 0.0) {
            return Err(CliError::validation("drift_tolerance", "must be positive"));
        }
        if self.n_zonal < 64 {
            return Err(CliError::validation(
                "n_zonal",
                format!("must be at least 64, got {}", self.n_zonal),
            ));
        }
        if time_stepping {
            self.grid()?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<AnnulusGrid> {
        AnnulusGrid::new(self.config.theta1, self.config.theta2, self.n_rho, self.n_phi)
            .map_err(|e| CliError::validation("grid", e.to_string()))
    }
}
