//! Resolved run configuration. Every command writes the fully materialized
//! config to `run_config.json`; passing that file back with `--config`
//! reproduces the run.

use std::path::{Path, PathBuf};

use clap::Args;
use scour_core::baseline::BaselineOptions;
use scour_core::metrics::Units;
use scour_core::model::CoefficientBounds;
use scour_core::swarm::SwarmConfig;
use scour_core::workbench::{FitTarget, WorkbenchConfig};
use scour_core::Scale;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 42;
pub const SEED_ENV: &str = "SCOUR_SEED";
pub const CONFIG_FILE: &str = "run_config.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub scale: Option<Scale>,
    pub data: Option<PathBuf>,
    pub spec_ids: Vec<String>,
    pub models: Vec<PathBuf>,
    /// `swarm.seed` is the fit seed.
    pub swarm: SwarmConfig,
    pub bounds: CoefficientBounds,
    pub split_ratio: f64,
    pub split_seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub strict: bool,
    pub hancu_squared: bool,
    pub units: Units,
    pub fit_target: FitTarget,
    pub compare: bool,
    pub repeats: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            scale: None,
            data: None,
            spec_ids: Vec::new(),
            models: Vec::new(),
            swarm: SwarmConfig::default().with_seed(DEFAULT_SEED),
            bounds: CoefficientBounds::default(),
            split_ratio: 0.7,
            split_seed: None,
            output_dir: None,
            strict: false,
            hancu_squared: false,
            units: Units::Meters,
            fit_target: FitTarget::Dimensionless,
            compare: false,
            repeats: 1,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn workbench(&self) -> WorkbenchConfig {
        WorkbenchConfig {
            swarm: self.swarm.clone(),
            bounds: self.bounds,
            split_ratio: self.split_ratio,
            split_seed: self.split_seed.unwrap_or(self.swarm.seed),
            fit_target: self.fit_target,
            units: self.units,
            baseline: BaselineOptions {
                hancu_squared: self.hancu_squared,
            },
        }
    }

    pub fn data_path(&self) -> Result<&Path, CliError> {
        self.data
            .as_deref()
            .ok_or_else(|| CliError::Usage("--data is required".into()))
    }

    pub fn out_dir(&self) -> Result<&Path, CliError> {
        self.output_dir
            .as_deref()
            .ok_or_else(|| CliError::Usage("--out is required".into()))
    }

    pub fn write_echo(&self, dir: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(dir.join(CONFIG_FILE), text)?;
        Ok(())
    }
}

/// Options shared by the fitting commands. Anything given here overrides the
/// `--config` file, which overrides built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Replay or extend a previously written run_config.json
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// lab or field; detected from the CSV header when omitted
    #[arg(long)]
    pub scale: Option<Scale>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Fit seed (falls back to the config file, then $SCOUR_SEED, then 42)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seed of the train/test shuffle; defaults to the fit seed
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Training fraction
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Inertia weight
    #[arg(long)]
    pub w: Option<f64>,
    /// Cognitive coefficient
    #[arg(long)]
    pub c1: Option<f64>,
    /// Social coefficient
    #[arg(long)]
    pub c2: Option<f64>,
    /// Velocity cap as a fraction of each dimension's span
    #[arg(long)]
    pub velocity_cap: Option<f64>,
    #[arg(long)]
    pub a_min: Option<f64>,
    #[arg(long)]
    pub a_max: Option<f64>,
    #[arg(long)]
    pub exponent_min: Option<f64>,
    #[arg(long)]
    pub exponent_max: Option<f64>,
    /// Reject the whole file on the first bad row
    #[arg(long)]
    pub strict: bool,
    /// Use Vc^2/(gD) in Hancu's equation
    #[arg(long)]
    pub hancu_squared: bool,
    /// Units of reported metrics: meters or dimensionless
    #[arg(long, value_parser = parse_units)]
    pub units: Option<Units>,
    /// Residual minimized while fitting: dimensionless or meters
    #[arg(long, value_parser = parse_fit_target)]
    pub fit_target: Option<FitTarget>,
    /// Worker threads; results do not depend on it
    #[arg(long)]
    pub workers: Option<usize>,
}

fn parse_units(s: &str) -> Result<Units, String> {
    match s {
        "meters" | "m" => Ok(Units::Meters),
        "dimensionless" => Ok(Units::Dimensionless),
        _ => Err(format!("unknown units `{s}` (meters or dimensionless)")),
    }
}

fn parse_fit_target(s: &str) -> Result<FitTarget, String> {
    match s {
        "meters" | "m" => Ok(FitTarget::Meters),
        "dimensionless" => Ok(FitTarget::Dimensionless),
        _ => Err(format!(
            "unknown fit target `{s}` (dimensionless or meters)"
        )),
    }
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => {
            v.trim().parse().map(Some).map_err(|_| {
                CliError::Usage(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))
            })
        }
        Err(_) => Ok(None),
    }
}

impl CommonArgs {
    pub fn resolve(&self, command: &str) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => {
                let mut c = RunConfig::default();
                if let Some(seed) = env_seed()? {
                    c.swarm.seed = seed;
                }
                c
            }
        };
        cfg.command = command.to_string();
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value {
                    $field = v;
                }
            };
        }
        if self.scale.is_some() {
            cfg.scale = self.scale;
        }
        if self.data.is_some() {
            cfg.data.clone_from(&self.data);
        }
        if self.out.is_some() {
            cfg.output_dir.clone_from(&self.out);
        }
        if self.split_seed.is_some() {
            cfg.split_seed = self.split_seed;
        }
        set!(cfg.swarm.seed, self.seed);
        set!(cfg.split_ratio, self.ratio);
        set!(cfg.swarm.particle_count, self.particles);
        set!(cfg.swarm.iteration_count, self.iterations);
        set!(cfg.swarm.inertia_weight, self.w);
        set!(cfg.swarm.cognitive_coeff, self.c1);
        set!(cfg.swarm.social_coeff, self.c2);
        set!(cfg.swarm.velocity_cap_fraction, self.velocity_cap);
        set!(cfg.bounds.constant_lower, self.a_min);
        set!(cfg.bounds.constant_upper, self.a_max);
        set!(cfg.bounds.exponent_lower, self.exponent_min);
        set!(cfg.bounds.exponent_upper, self.exponent_max);
        set!(cfg.units, self.units);
        set!(cfg.fit_target, self.fit_target);
        cfg.strict |= self.strict;
        cfg.hancu_squared |= self.hancu_squared;

        if cfg.split_seed.is_none() {
            cfg.split_seed = Some(cfg.swarm.seed);
        }
        cfg.swarm
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if !(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0) {
            return Err(CliError::Usage(format!(
                "--ratio must lie strictly between 0 and 1, got {}",
                cfg.split_ratio
            )));
        }
        Ok(cfg)
    }
}
