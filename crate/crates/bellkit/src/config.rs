//! Declarative TOML configuration for simulations and for the two-step
//! averaging model, compiled into runtime specs.
//!
//! Angles appear in degrees in files (fields carry a `_deg` suffix) and are
//! converted to radians on compilation. Unknown keys are rejected so typos
//! fail loudly.

use serde::Deserialize;

use crate::inequality::{JointWeights, ModelError, StationFn};
use crate::sim::{
    ContextSpec, Density, DetectionRule, DriftRule, NoiseLaw, OutcomeRule, RunDriftSpec,
    SimError, ThresholdDetectionSpec, WindowRule,
};
use crate::types::{PairwiseTable, Sign};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityConfig {
    Uniform { lo: f64, hi: f64 },
    /// Uniform analyzer angle on `[0, pi)`.
    UniformAngle,
    Grid { points: Vec<f64>, weights: Vec<f64> },
    Point { value: f64 },
}

impl DensityConfig {
    fn compile(&self) -> Density {
        match self {
            DensityConfig::Uniform { lo, hi } => Density::Uniform { lo: *lo, hi: *hi },
            DensityConfig::UniformAngle => {
                Density::Uniform { lo: 0.0, hi: std::f64::consts::PI }
            }
            DensityConfig::Grid { points, weights } => {
                Density::Grid { points: points.clone(), weights: weights.clone() }
            }
            DensityConfig::Point { value } => Density::PointMass { value: *value },
        }
    }
}

fn default_point() -> DensityConfig {
    DensityConfig::Point { value: 0.0 }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleConfig {
    SignCos,
    SharedSign,
    InstrumentSignProduct,
    AtomBit { angles_deg: Vec<f64> },
}

impl RuleConfig {
    fn compile(&self) -> OutcomeRule {
        match self {
            RuleConfig::SignCos => OutcomeRule::SignCos,
            RuleConfig::SharedSign => OutcomeRule::SharedSign,
            RuleConfig::InstrumentSignProduct => OutcomeRule::InstrumentSignProduct,
            RuleConfig::AtomBit { angles_deg } => OutcomeRule::AtomBit {
                angles: angles_deg.iter().map(|d| d.to_radians()).collect(),
            },
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DetectionConfig {
    Always,
    Constant { efficiency: f64 },
    CosineBias { base: f64, amplitude: f64 },
}

impl DetectionConfig {
    fn compile(&self) -> DetectionRule {
        match self {
            DetectionConfig::Always => DetectionRule::Always,
            DetectionConfig::Constant { efficiency } => {
                DetectionRule::Constant { efficiency: *efficiency }
            }
            DetectionConfig::CosineBias { base, amplitude } => {
                DetectionRule::CosineBias { base: *base, amplitude: *amplitude }
            }
        }
    }
}

fn default_detection() -> DetectionConfig {
    DetectionConfig::Always
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextConfig {
    pub label: String,
    pub theta1_deg: f64,
    pub theta2_deg: f64,
    pub system: DensityConfig,
    #[serde(default = "default_point")]
    pub instrument_a: DensityConfig,
    #[serde(default = "default_point")]
    pub instrument_b: DensityConfig,
    pub rule: RuleConfig,
    #[serde(default = "default_detection")]
    pub detection: DetectionConfig,
}

impl ContextConfig {
    pub fn compile(&self) -> Result<ContextSpec, SimError> {
        let spec = ContextSpec {
            label: self.label.clone(),
            theta_a: self.theta1_deg.to_radians(),
            theta_b: self.theta2_deg.to_radians(),
            system: self.system.compile(),
            instrument_a: self.instrument_a.compile(),
            instrument_b: self.instrument_b.compile(),
            rule: self.rule.compile(),
            detection: self.detection.compile(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSection {
    pub theta1_deg: f64,
    pub theta2_deg: f64,
    /// `(p_pp, p_pm, p_mp, p_mm)`.
    pub cells: [f64; 4],
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseConfig {
    Uniform { half_width: f64 },
    TruncatedNormal { sigma: f64 },
}

impl NoiseConfig {
    fn compile(&self) -> NoiseLaw {
        match self {
            NoiseConfig::Uniform { half_width } => NoiseLaw::Uniform { half_width: *half_width },
            NoiseConfig::TruncatedNormal { sigma } => NoiseLaw::TruncatedNormal { sigma: *sigma },
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSection {
    pub theta1_deg: f64,
    pub theta2_deg: f64,
    pub pulse_energy: f64,
    pub threshold: f64,
    pub noise: NoiseConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftConfig {
    None,
    Alternate { other: DensityConfig },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSection {
    pub runs: usize,
    pub context: ContextConfig,
    pub drift: DriftConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Contexts,
    Table,
    Threshold,
    Drift,
}

/// Top-level simulation config.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub model: ModelKind,
    pub trials: u64,
    #[serde(default)]
    pub contexts: Vec<ContextConfig>,
    pub table: Option<TableSection>,
    pub threshold: Option<ThresholdSection>,
    pub drift: Option<DriftSection>,
}

/// A compiled, runnable simulation.
#[derive(Debug)]
pub enum SimJob {
    Contexts(Vec<ContextSpec>),
    Table { table: PairwiseTable<f64>, settings: (f64, f64) },
    Threshold { spec: ThresholdDetectionSpec, settings: (f64, f64) },
    Drift { spec: RunDriftSpec },
}

impl SimConfig {
    pub fn compile(&self) -> Result<SimJob, ConfigError> {
        if self.trials == 0 {
            return Err(ConfigError::Invalid("trials must be positive".into()));
        }
        match self.model {
            ModelKind::Contexts => {
                if self.contexts.is_empty() {
                    return Err(ConfigError::Invalid(
                        "model = \"contexts\" needs at least one [[contexts]] entry".into(),
                    ));
                }
                let specs =
                    self.contexts.iter().map(ContextConfig::compile).collect::<Result<_, _>>()?;
                Ok(SimJob::Contexts(specs))
            }
            ModelKind::Table => {
                let section = self
                    .table
                    .as_ref()
                    .ok_or_else(|| ConfigError::Invalid("missing [table] section".into()))?;
                let table = PairwiseTable::from_indices(0, 1, section.cells);
                table.validate().map_err(SimError::from)?;
                Ok(SimJob::Table {
                    table,
                    settings: (section.theta1_deg.to_radians(), section.theta2_deg.to_radians()),
                })
            }
            ModelKind::Threshold => {
                let section = self
                    .threshold
                    .as_ref()
                    .ok_or_else(|| ConfigError::Invalid("missing [threshold] section".into()))?;
                let spec = ThresholdDetectionSpec {
                    pulse_energy: section.pulse_energy,
                    noise: section.noise.compile(),
                    threshold: section.threshold,
                    window: WindowRule::SameTrial,
                };
                spec.validate()?;
                Ok(SimJob::Threshold {
                    spec,
                    settings: (section.theta1_deg.to_radians(), section.theta2_deg.to_radians()),
                })
            }
            ModelKind::Drift => {
                let section = self
                    .drift
                    .as_ref()
                    .ok_or_else(|| ConfigError::Invalid("missing [drift] section".into()))?;
                let base = section.context.compile()?;
                let drift = match &section.drift {
                    DriftConfig::None => DriftRule::None,
                    DriftConfig::Alternate { other } => {
                        let density = other.compile();
                        density.validate()?;
                        DriftRule::Alternate { other: density }
                    }
                };
                Ok(SimJob::Drift {
                    spec: RunDriftSpec { base, runs: section.runs, drift },
                })
            }
        }
    }
}

pub fn parse_sim_config(text: &str) -> Result<SimConfig, ConfigError> {
    Ok(toml::from_str(text)?)
}

// ---------------------------------------------------------------------------
// Two-step model config
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StationRuleConfig {
    ConstPlus,
    ConstMinus,
    /// `sign(cos 2(a - u))`: own setting against the pair's `u` polarization.
    SignCosU,
    /// `sign(cos 2(b - v))`.
    SignCosV,
    /// `+1` iff `lambda >= cut`.
    SignLambda { cut: f64 },
}

impl StationRuleConfig {
    pub fn compile(&self) -> Box<StationFn> {
        match self {
            StationRuleConfig::ConstPlus => Box::new(|_, _, _, _, _| Sign::Plus),
            StationRuleConfig::ConstMinus => Box::new(|_, _, _, _, _| Sign::Minus),
            StationRuleConfig::SignCosU => Box::new(|a, _, u, _, _| {
                if (2.0 * (a - u)).cos() >= 0.0 {
                    Sign::Plus
                } else {
                    Sign::Minus
                }
            }),
            StationRuleConfig::SignCosV => Box::new(|_, b, _, v, _| {
                if (2.0 * (b - v)).cos() >= 0.0 {
                    Sign::Plus
                } else {
                    Sign::Minus
                }
            }),
            StationRuleConfig::SignLambda { cut } => {
                let cut = *cut;
                Box::new(move |_, _, _, _, l| if l >= cut { Sign::Plus } else { Sign::Minus })
            }
        }
    }
}

/// Config for the two-step averaging consistency check: a joint weight table
/// over `(u, v, lambda)` plus the two station rules and the settings.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeggetConfig {
    pub a_setting_deg: f64,
    pub b_setting_deg: f64,
    pub u_grid_deg: Vec<f64>,
    pub v_grid_deg: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    /// Row-major `(u, v, lambda)` weights.
    pub weights: Vec<f64>,
    pub a_rule: StationRuleConfig,
    pub b_rule: StationRuleConfig,
}

pub struct CompiledLegget {
    pub joint: JointWeights,
    pub station_a: Box<StationFn>,
    pub station_b: Box<StationFn>,
    pub a: f64,
    pub b: f64,
}

impl LeggetConfig {
    pub fn compile(&self) -> Result<CompiledLegget, ConfigError> {
        let joint = JointWeights::new(
            self.u_grid_deg.iter().map(|d| d.to_radians()).collect(),
            self.v_grid_deg.iter().map(|d| d.to_radians()).collect(),
            self.lambda_grid.clone(),
            self.weights.clone(),
        )?;
        Ok(CompiledLegget {
            joint,
            station_a: self.a_rule.compile(),
            station_b: self.b_rule.compile(),
            a: self.a_setting_deg.to_radians(),
            b: self.b_setting_deg.to_radians(),
        })
    }
}

pub fn parse_legget_config(text: &str) -> Result<LeggetConfig, ConfigError> {
    Ok(toml::from_str(text)?)
}
