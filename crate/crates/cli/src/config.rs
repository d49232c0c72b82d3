//! Run configuration: a TOML file plus `DIABOLO__SECTION__KEY` environment
//! overrides, e.g. `DIABOLO__MODEL__MU_ACC=180` or `DIABOLO__SEED=3`.

use std::path::Path;

use diabolo::calibration::ParamBound;
use diabolo::env::default_sticks;
use diabolo::player::OptimizerConfig;
use diabolo::{ModelParams, Param, StickPair, Vec3};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const ENV_PREFIX: &str = "DIABOLO__";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    pub model: ModelParams,
    pub simulation: SimulationConfig,
    pub optimizer: OptimizerSection,
    pub evaluation: EvaluationConfig,
    pub calibration: CalibrationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub template: String,
    /// Seconds of motion for simulate and generate.
    pub duration: f64,
    pub left: Vec3,
    pub right: Vec3,
    /// Knot spacing of template stick splines (s).
    pub knot_spacing: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        let s = default_sticks();
        Self {
            template: "static_hang".into(),
            duration: 2.0,
            left: s.left,
            right: s.right,
            knot_spacing: diabolo::data::SYNTHETIC_KNOT_SPACING,
        }
    }
}

impl SimulationConfig {
    pub fn sticks(&self) -> StickPair {
        StickPair::new(self.left, self.right)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    pub template: String,
    pub duration: f64,
    pub knot_spacing: f64,
    pub iterations: usize,
    pub step_scale_pos: f64,
    pub step_scale_time: f64,
    pub samples_per_rollout: usize,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let o = OptimizerConfig::default();
        Self {
            template: "circular_acceleration".into(),
            duration: 1.5,
            knot_spacing: 0.1,
            iterations: o.iterations,
            step_scale_pos: o.step_scale_pos,
            step_scale_time: o.step_scale_time,
            samples_per_rollout: o.samples_per_rollout,
        }
    }
}

impl OptimizerSection {
    pub fn optimizer(&self, seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            iterations: self.iterations,
            step_scale_pos: self.step_scale_pos,
            step_scale_time: self.step_scale_time,
            seed,
            samples_per_rollout: self.samples_per_rollout,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    pub horizon: f64,
    pub stride: f64,
    /// Moving-average window (samples) applied to loaded traces; 0 or 1 is off.
    pub smoothing_window: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            horizon: diabolo::data::DEFAULT_HORIZON,
            stride: diabolo::data::DEFAULT_STRIDE,
            smoothing_window: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConfig {
    pub free: Vec<Param>,
    /// Optional `[lo, hi]` per free parameter; defaults otherwise.
    pub bounds: std::collections::BTreeMap<Param, [f64; 2]>,
    pub iterations: usize,
    pub step_scale: f64,
    pub omega_weight: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            free: vec![Param::MuAcc, Param::MuDec, Param::DampPullPre, Param::DampPullPost, Param::DampOnString],
            bounds: Default::default(),
            iterations: 500,
            step_scale: 0.05,
            omega_weight: 0.01,
        }
    }
}

impl CalibrationConfig {
    pub fn bounds(&self) -> Vec<ParamBound> {
        self.free
            .iter()
            .map(|&p| match self.bounds.get(&p) {
                Some([lo, hi]) => ParamBound::new(p, *lo, *hi),
                None => ParamBound::default_for(p),
            })
            .collect()
    }
}

/// Value of an override: any TOML literal, otherwise a bare string.
fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_override(table: &mut toml::Table, var: &str, raw: &str) -> Result<(), CliError> {
    let path: Vec<String> = var[ENV_PREFIX.len()..]
        .split("__")
        .map(str::to_ascii_lowercase)
        .collect();
    if path.iter().any(String::is_empty) {
        return Err(CliError::Config(format!("malformed override variable `{var}`")));
    }
    let (last, sections) = path.split_last().expect("split yields at least one part");
    let mut cursor = table;
    for section in sections {
        let entry = cursor
            .entry(section.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("`{var}` addresses inside a non-table key")))?;
    }
    cursor.insert(last.clone(), parse_value(raw));
    Ok(())
}

/// Reads `path` (defaults when `None`), applies overrides from `vars` and
/// checks the model constants.
pub fn load<I>(path: Option<&Path>, vars: I) -> Result<Config, CliError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
            text.parse::<toml::Table>()
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    let mut overrides: Vec<(String, String)> = vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
    overrides.sort();
    for (k, v) in &overrides {
        apply_override(&mut table, k, v)?;
    }
    let config: Config = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    config.model.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(config)
}
