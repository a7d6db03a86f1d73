//! Run configuration: one TOML document with a section per stage. Every
//! section has defaults, unknown keys are rejected, and `--set` overrides are
//! merged into the parsed document before it is typed.

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use sbm_core::membrane::{Boundary, FrequencyUnit, MembraneSpec};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub membrane: MembraneConfig,
    pub spectrum: SpectrumConfig,
    pub exponent_scan: ExponentScanConfig,
    pub dephasing: DephasingConfig,
    pub blp_scan: BlpScanConfig,
    pub dynamics: DynamicsConfig,
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    Clamped,
    Strained,
    Intermediate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitKind {
    Fundamental,
    Cutoff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MembraneConfig {
    pub boundary: BoundaryKind,
    /// Dimensionless tension, read only for `intermediate`.
    pub tau: f64,
    pub n_modes: usize,
    pub g0: f64,
    pub quality_factor: f64,
    /// Unset means per command: `fundamental` for the spectral and dephasing
    /// stages, `cutoff` for dynamics and sweeps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency_unit: Option<UnitKind>,
}

impl Default for MembraneConfig {
    fn default() -> Self {
        Self {
            boundary: BoundaryKind::Clamped,
            tau: 0.0,
            n_modes: 1000,
            g0: 0.2,
            quality_factor: 1000.0,
            frequency_unit: None,
        }
    }
}

impl MembraneConfig {
    pub fn spec(&self) -> Result<MembraneSpec, CliError> {
        let boundary = match self.boundary {
            BoundaryKind::Clamped => Boundary::Clamped,
            BoundaryKind::Strained => Boundary::Strained,
            BoundaryKind::Intermediate => Boundary::Intermediate { tau: self.tau },
        };
        if self.boundary != BoundaryKind::Intermediate && self.tau != 0.0 {
            return Err(CliError::config("membrane.tau", "only used with boundary = \"intermediate\""));
        }
        let spec = MembraneSpec {
            boundary,
            n_modes: self.n_modes,
            g0: self.g0,
            quality_factor: self.quality_factor,
            frequency_unit: match self.frequency_unit.unwrap_or(UnitKind::Fundamental) {
                UnitKind::Fundamental => FrequencyUnit::Fundamental,
                UnitKind::Cutoff => FrequencyUnit::Cutoff,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    /// Defaults to a tenth of the fundamental.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_lo: Option<f64>,
    /// Defaults to twice the cutoff.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_hi: Option<f64>,
    pub n_points: usize,
    pub grid: GridKind,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { nu_lo: None, nu_hi: None, n_points: 4000, grid: GridKind::Log }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingKind {
    CellAverage,
    Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExponentScanConfig {
    pub tau_values: Vec<f64>,
    /// Fit window `[lo_factor omega_0, hi_factor nu_c]`.
    pub lo_factor: f64,
    pub hi_factor: f64,
    pub n_points: usize,
    pub sampling: SamplingKind,
}

impl Default for ExponentScanConfig {
    fn default() -> Self {
        Self {
            tau_values: vec![0.0, 1.0, 10.0, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9],
            lo_factor: 10.0,
            hi_factor: 0.1,
            n_points: 64,
            sampling: SamplingKind::CellAverage,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    ModeSum,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DephasingConfig {
    pub temperature: f64,
    pub method: MethodKind,
    /// Trace length in fundamental periods.
    pub periods: f64,
    pub n_points: usize,
    /// Bisect intervals where `G` jumps by this much or more (mode sum only).
    pub max_jump: f64,
}

impl Default for DephasingConfig {
    fn default() -> Self {
        Self { temperature: 0.0, method: MethodKind::ModeSum, periods: 3.0, n_points: 2000, max_jump: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlpScanConfig {
    pub g0_values: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub periods: f64,
    pub n_points: usize,
    pub max_jump: f64,
}

impl Default for BlpScanConfig {
    fn default() -> Self {
        Self {
            g0_values: vec![0.01, 0.05, 0.1, 0.2],
            temperatures: vec![1e-3, 1e-2, 1e-1, 1.0],
            periods: 10.0,
            n_points: 2000,
            max_jump: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Fft,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    pub rabi: f64,
    pub t_max: f64,
    pub n_traj: usize,
    pub temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub memory_cutoff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_star: Option<f64>,
    pub solver: SolverKind,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            rabi: 0.1,
            t_max: 1600.0,
            n_traj: 2000,
            temperature: 0.0,
            dt: None,
            memory_cutoff: None,
            omega_star: None,
            solver: SolverKind::Fft,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub g0_values: Vec<f64>,
    pub window_fraction: f64,
    pub threshold: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { g0_values: (1..=10).map(|i| i as f64 * 1e-3).collect(), window_fraction: 0.25, threshold: 0.05 }
    }
}

/// Parse `text`, apply `key.path=value` overrides, and type the result.
pub fn load(text: &str, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut table: Table = text.parse().map_err(|e: toml::de::Error| CliError::Parse(e.to_string()))?;
    for item in overrides {
        apply_override(&mut table, item)?;
    }
    RunConfig::deserialize(Value::Table(table)).map_err(|e| CliError::Parse(e.to_string()))
}

fn apply_override(table: &mut Table, item: &str) -> Result<(), CliError> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Parse(format!("override `{item}` is not of the form key=value")))?;
    let value = parse_value(raw.trim());
    let keys: Vec<&str> = path.trim().split('.').collect();
    let (last, parents) = keys.split_last().expect("split yields at least one key");
    let mut cursor = table;
    for key in parents {
        let entry = cursor.entry(key.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Parse(format!("override `{path}`: `{key}` is not a section")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

/// A TOML value literal, or a bare string when it does not parse as one.
fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}
