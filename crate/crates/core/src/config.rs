//! Run configuration.
//!
//! A run is described by a TOML file. Every key is optional except where
//! noted; unknown keys are rejected. Any key can be overridden from the
//! environment with `PPMLR_` followed by the dotted key path in upper case,
//! dots written as `__`:
//!
//! ```text
//! PPMLR_STEPS=20
//! PPMLR_PARTITION__NX=3
//! PPMLR_SOLAR_WIND__V_SW="[-3.0, 0.0, 0.0]"
//! ```
//!
//! Override values are parsed as TOML values, falling back to a plain
//! string.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::decomp::PartitionConfig;
use crate::error::{Error, Result};
use crate::exchange::TransportKind;
use crate::grid::{AxisSpec, StretchedGrid};
use crate::perfmodel::BandwidthSpec;
use crate::physics::Constants;
use crate::ppm1d::GHOST;
use crate::stepper::{RadialProfile, SolarWindParams};

pub const ENV_PREFIX: &str = "PPMLR_";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GridConfig {
    /// Uniform cells on a box.
    Uniform { lo: [f64; 3], hi: [f64; 3], cells: [usize; 3] },
    /// Uniform core with geometric stretching outside, per axis.
    Stretched { x: AxisSpec, y: AxisSpec, z: AxisSpec },
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig::Stretched {
            x: AxisSpec::magnetosphere_x(),
            y: AxisSpec::magnetosphere_yz(),
            z: AxisSpec::magnetosphere_yz(),
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<StretchedGrid> {
        match self {
            GridConfig::Uniform { lo, hi, cells } => StretchedGrid::uniform(*lo, *hi, *cells),
            GridConfig::Stretched { x, y, z } => StretchedGrid::from_specs(&[*x, *y, *z]),
        }
    }
}

/// Initial condition and outer boundaries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    /// Dipole-region plasma inside x = 15, solar wind beyond; inflow on +x.
    #[default]
    Magnetosphere,
    /// Overpressured sphere at the domain centre, outflow on all faces.
    Blast,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlastParams {
    pub radius: f64,
    pub rho: f64,
    pub p_in: f64,
    pub p_out: f64,
    /// Uniform background field.
    pub b: [f64; 3],
}

impl Default for BlastParams {
    fn default() -> Self {
        Self {
            radius: 0.1,
            rho: 1.0,
            p_in: 10.0,
            p_out: 0.1,
            b: [0.0; 3],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Problem,
    pub grid: GridConfig,
    pub partition: PartitionConfig,
    pub solar_wind: SolarWindParams,
    pub profile: RadialProfile,
    pub blast: BlastParams,
    pub constants: Constants,
    pub cfl: f64,
    pub ghost: usize,
    pub transport: TransportKind,
    /// Exactly one of `steps` and `end_time` is set.
    pub steps: Option<u64>,
    pub end_time: Option<f64>,
    /// Write a snapshot every this many steps, and after the last step.
    pub snapshot_every: u64,
    pub out: PathBuf,
    /// Seeds the initial density perturbation.
    pub seed: u64,
    /// Relative amplitude of uniform random density noise; 0 disables it.
    pub perturbation: f64,
    pub sources: bool,
    pub flattening: bool,
    /// Pressure floor for the sweeps.
    pub pressure_floor: Option<f64>,
    /// Frozen inner core radius for the magnetosphere problem.
    pub frozen_radius: f64,
    /// Seconds a worker waits for a neighbour before reporting a deadlock.
    pub timeout_seconds: f64,
    /// Modeled seconds per copy event, added to transfer time.
    pub copy_latency: f64,
    pub bandwidth: BandwidthSpec,
    /// Fraction of device bandwidth assumed achieved by the report.
    pub efficiency: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: Problem::Magnetosphere,
            grid: GridConfig::default(),
            partition: PartitionConfig::new(1, 1, 1),
            solar_wind: SolarWindParams::default(),
            profile: RadialProfile::default(),
            blast: BlastParams::default(),
            constants: Constants::default(),
            cfl: 0.5,
            ghost: GHOST,
            transport: TransportKind::Staged,
            steps: None,
            end_time: None,
            snapshot_every: 10,
            out: PathBuf::from("out"),
            seed: 0,
            perturbation: 0.0,
            sources: true,
            flattening: false,
            pressure_floor: None,
            frozen_radius: crate::stepper::FROZEN_RADIUS,
            timeout_seconds: 30.0,
            copy_latency: 0.0,
            bandwidth: BandwidthSpec::TITAN,
            efficiency: 0.732,
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Parse an override value as TOML, or keep it as a string.
fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

fn set_path(table: &mut Table, path: &[String], value: Value) -> Result<()> {
    let (last, parents) = path.split_last().ok_or_else(|| config_err("empty override key"))?;
    let mut t = table;
    for key in parents {
        let entry = t.entry(key.clone()).or_insert_with(|| Value::Table(Table::new()));
        t = entry
            .as_table_mut()
            .ok_or_else(|| config_err(format!("override path crosses non-table key `{key}`")))?;
    }
    t.insert(last.clone(), value);
    Ok(())
}

impl RunConfig {
    /// Parse `text` and apply overrides from `vars` (name, value pairs;
    /// only names starting with [`ENV_PREFIX`] are used).
    pub fn parse_with_env<I>(text: &str, vars: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let cfg = Self::parse_unchecked(text, vars)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn parse_unchecked<I>(text: &str, vars: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut table: Table = text.parse().map_err(|e: toml::de::Error| config_err(e.message().to_string()))?;
        let mut overrides: Vec<(String, String)> = vars
            .into_iter()
            .filter(|(k, _)| k.starts_with(ENV_PREFIX) && k.len() > ENV_PREFIX.len())
            .collect();
        overrides.sort();
        for (name, raw) in overrides {
            let path: Vec<String> = name[ENV_PREFIX.len()..]
                .split("__")
                .map(|s| s.to_ascii_lowercase())
                .collect();
            set_path(&mut table, &path, parse_value(&raw))?;
        }
        let cfg: RunConfig = Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| config_err(e.message().to_string()))?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_env(text, std::iter::empty())
    }

    /// Read a file and apply `PPMLR_*` overrides from the process environment.
    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with(Some(path), |_| {})
    }

    /// Like [`RunConfig::load`], with a final `adjust` (command-line flags)
    /// applied before validation. Without a path the defaults are used.
    pub fn load_with(path: Option<&Path>, adjust: impl FnOnce(&mut RunConfig)) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| config_err(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        let mut cfg = Self::parse_unchecked(&text, std::env::vars())?;
        adjust(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        self.solar_wind.validate()?;
        self.bandwidth.validate()?;
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(config_err(format!("cfl must be in (0, 1], got {}", self.cfl)));
        }
        if self.ghost < GHOST {
            return Err(config_err(format!("ghost must be at least {GHOST}, got {}", self.ghost)));
        }
        if self.snapshot_every < 1 {
            return Err(config_err("snapshot_every must be at least 1"));
        }
        match (self.steps, self.end_time) {
            (Some(_), Some(_)) => return Err(config_err("set only one of steps and end_time")),
            (None, None) => return Err(config_err("one of steps or end_time is required")),
            (None, Some(t)) if !(t > 0.0) => {
                return Err(config_err(format!("end_time must be positive, got {t}")))
            }
            _ => {}
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(config_err(format!("efficiency must be in (0, 1], got {}", self.efficiency)));
        }
        if !(self.perturbation >= 0.0 && self.perturbation < 1.0) {
            return Err(config_err(format!(
                "perturbation must be in [0, 1), got {}",
                self.perturbation
            )));
        }
        if let Some(f) = self.pressure_floor {
            if !(f > 0.0) {
                return Err(config_err(format!("pressure_floor must be positive, got {f}")));
            }
        }
        if !(self.timeout_seconds > 0.0) || !(self.copy_latency >= 0.0) {
            return Err(config_err("timeout_seconds must be positive and copy_latency non-negative"));
        }
        let b = &self.blast;
        if self.problem == Problem::Blast && !(b.radius > 0.0 && b.rho > 0.0 && b.p_in > 0.0 && b.p_out > 0.0) {
            return Err(config_err("blast radius, density and pressures must be positive"));
        }
        Ok(())
    }

    /// The configuration as TOML text.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}
