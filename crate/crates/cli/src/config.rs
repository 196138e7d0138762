//! Run configuration. See `CONFIG.md` for the schema.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use helium_jc::{GridSpec, PhysicalParams, QubitLevel};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub params: PhysicalParams,
    pub truncation: Truncation,
    pub grid: GridConfig,
    pub time: TimeSpec,
    pub rabi: RabiConfig,
    pub prepare: PrepareConfig,
    pub validate: ValidateConfig,
    pub sweep: SweepConfig,
    pub output_dir: PathBuf,
    /// Reserved. Every run is deterministic.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: PhysicalParams::default(),
            truncation: Truncation::default(),
            grid: GridConfig::default(),
            time: TimeSpec::default(),
            rabi: RabiConfig::default(),
            prepare: PrepareConfig::default(),
            validate: ValidateConfig::default(),
            sweep: SweepConfig::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Truncation {
    pub n_c: usize,
    pub n_v: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Self { n_c: 40, n_v: 8 }
    }
}

impl FromStr for Truncation {
    type Err = String;

    /// `N_c` or `N_c,N_v`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad truncation `{t}`: {e}"));
        match s.split_once(',') {
            Some((c, v)) => Ok(Self { n_c: parse(c)?, n_v: parse(v)? }),
            None => Ok(Self { n_c: parse(s)?, ..Self::default() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Box height in surface Bohr radii.
    pub height_rb: f64,
    pub n_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { height_rb: GridSpec::DEFAULT_HEIGHT_RB, n_points: GridSpec::DEFAULT_POINTS }
    }
}

impl GridConfig {
    pub fn spec(&self, bohr_radius: f64) -> GridSpec {
        GridSpec { z_max: self.height_rb * bohr_radius, n_points: self.n_points }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnits {
    /// `τ = Ω_c t`.
    Rabi,
    Seconds,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSpec {
    pub t_max: f64,
    pub n_samples: usize,
    pub units: TimeUnits,
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self { t_max: 10.0, n_samples: 201, units: TimeUnits::Rabi }
    }
}

impl TimeSpec {
    /// Sample times in seconds.
    pub fn times(&self, omega_rabi_c: f64) -> Vec<f64> {
        let t_max = match self.units {
            TimeUnits::Rabi => self.t_max / omega_rabi_c,
            TimeUnits::Seconds => self.t_max,
        };
        if self.n_samples == 1 {
            return vec![0.0];
        }
        (0..self.n_samples).map(|k| t_max * k as f64 / (self.n_samples - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RabiConfig {
    pub m: usize,
    pub qubit: QubitLevel,
}

impl Default for RabiConfig {
    fn default() -> Self {
        Self { m: 0, qubit: QubitLevel::Excited }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Coherent,
    Cat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    None,
    G,
    E,
}

impl Measure {
    pub fn level(self) -> Option<QubitLevel> {
        match self {
            Measure::None => None,
            Measure::G => Some(QubitLevel::Ground),
            Measure::E => Some(QubitLevel::Excited),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrepareConfig {
    pub target: Target,
    /// Preparation time `Ω_c t`.
    pub t_rabi: f64,
    pub measure: Measure,
    pub wigner: bool,
    pub wigner_resolution: usize,
    /// Half-width of the Wigner window in `|β|`; defaults to `|α| + 3`.
    pub wigner_radius: Option<f64>,
}

impl Default for PrepareConfig {
    fn default() -> Self {
        Self {
            target: Target::Cat,
            t_rabi: 1.5,
            measure: Measure::None,
            wigner: false,
            wigner_resolution: 61,
            wigner_radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LdSweep {
    pub etas: Vec<f64>,
    pub t_rabi: f64,
}

impl Default for LdSweep {
    fn default() -> Self {
        Self { etas: vec![1e-4, 1e-3, 1e-2], t_rabi: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RwaSweep {
    /// Values of `Ω_c/ω_c`.
    pub ratios: Vec<f64>,
    pub t_rabi: f64,
    pub m: usize,
    pub qubit: QubitLevel,
}

impl Default for RwaSweep {
    fn default() -> Self {
        Self {
            ratios: vec![1e-2, 5e-3, 2.5e-3],
            t_rabi: std::f64::consts::PI,
            m: 0,
            qubit: QubitLevel::Excited,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrongDriveSweep {
    /// Values of `Ω_l/Ω_c`, each at least 10.
    pub ratios: Vec<f64>,
    pub t_rabi: f64,
}

impl Default for StrongDriveSweep {
    fn default() -> Self {
        Self { ratios: vec![100.0, 1000.0], t_rabi: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateConfig {
    pub ld: LdSweep,
    pub rwa: RwaSweep,
    pub strong_drive: StrongDriveSweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Name of a `[params]` field.
    pub parameter: String,
    pub values: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { parameter: "e_perp".into(), values: vec![1.0e4, 2.0e4, 3.0e4, 4.0e4] }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> CliResult<()> {
        self.params.validate().map_err(|e| CliError::Config(format!("[params] {e}")))?;
        let bad = |what: &str| Err(CliError::Config(what.to_string()));
        if self.truncation.n_c < 2 {
            return bad("truncation.n_c must be >= 2");
        }
        if self.truncation.n_v < 8 {
            return bad("truncation.n_v must be >= 8");
        }
        if !(self.grid.height_rb > 0.0) || self.grid.n_points == 0 {
            return bad("grid.height_rb and grid.n_points must be positive");
        }
        if !(self.time.t_max.is_finite() && self.time.t_max >= 0.0) || self.time.n_samples == 0 {
            return bad("time.t_max must be finite and >= 0, time.n_samples >= 1");
        }
        if !(self.prepare.t_rabi.is_finite() && self.prepare.t_rabi >= 0.0) {
            return bad("prepare.t_rabi must be finite and >= 0");
        }
        if self.prepare.wigner_resolution == 0 {
            return bad("prepare.wigner_resolution must be >= 1");
        }
        if let Some(r) = self.prepare.wigner_radius {
            if !(r > 0.0 && r.is_finite()) {
                return bad("prepare.wigner_radius must be positive");
            }
        }
        let v = &self.validate;
        if v.ld.etas.iter().any(|e| !(e.is_finite() && *e >= 0.0)) || !(v.ld.t_rabi >= 0.0) {
            return bad("validate.ld.etas must be finite and >= 0, t_rabi >= 0");
        }
        if v.rwa.ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) || !(v.rwa.t_rabi > 0.0) {
            return bad("validate.rwa.ratios and t_rabi must be positive");
        }
        if v.strong_drive.ratios.iter().any(|r| !(r.is_finite() && *r >= 10.0)) || !(v.strong_drive.t_rabi > 0.0) {
            return bad("validate.strong_drive.ratios must be >= 10 and t_rabi positive");
        }
        if self.sweep.values.iter().any(|x| !x.is_finite()) {
            return bad("sweep.values must be finite");
        }
        self.swept_params(self.params_field()?).map(|_| ())
    }

    fn params_field(&self) -> CliResult<f64> {
        let value = serde_json::to_value(&self.params).map_err(|e| CliError::Config(e.to_string()))?;
        value
            .get(&self.sweep.parameter)
            .and_then(|v| v.as_f64())
            .ok_or_else(|| CliError::Config(format!("sweep.parameter `{}` is not a [params] field", self.sweep.parameter)))
    }

    /// `params` with the swept field set to `x`.
    pub fn swept_params(&self, x: f64) -> CliResult<PhysicalParams> {
        let mut value = serde_json::to_value(&self.params).map_err(|e| CliError::Config(e.to_string()))?;
        match value.get_mut(&self.sweep.parameter) {
            Some(slot) => *slot = serde_json::json!(x),
            None => {
                return Err(CliError::Config(format!(
                    "sweep.parameter `{}` is not a [params] field",
                    self.sweep.parameter
                )))
            }
        }
        serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))
    }
}
