//! JSON run-configuration schema. Unknown keys are rejected everywhere.

use serde::{Deserialize, Serialize};

use syndyn::bath::SpectralDensity;
use syndyn::code::{CodeSpec, ElementaryError, ErrorModel, StabilizerCode};
use syndyn::pauli::Pauli;
use syndyn::stability::{ConcatenatedCodeParams, RateConvention, ScalingClass};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum RunConfig {
    Codes {},
    Graph(GraphConfig),
    Rates(RatesConfig),
    Suppress(SuppressConfig),
    Correct(CorrectConfig),
    Stability(StabilityConfig),
}

impl RunConfig {
    pub fn mode_name(&self) -> &'static str {
        match self {
            RunConfig::Codes {} => "codes",
            RunConfig::Graph(_) => "graph",
            RunConfig::Rates(_) => "rates",
            RunConfig::Suppress(_) => "suppress",
            RunConfig::Correct(_) => "correct",
            RunConfig::Stability(_) => "stability",
        }
    }
}

/// A registry name or an inline code definition.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CodeRef {
    Name(String),
    Inline(CodeSpec),
}

impl CodeRef {
    pub fn build(&self) -> Result<StabilizerCode, syndyn::code::CodeError> {
        match self {
            CodeRef::Name(name) => syndyn::code::registry_code(name),
            CodeRef::Inline(spec) => spec.build(),
        }
    }
}

/// Error model shorthand ("x", "z", "xz", "xyz") or an explicit channel list
/// like ["X1", "Z3"] (1-based qubits).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ErrorModelSpec {
    Shorthand(String),
    Explicit(Vec<String>),
}

#[derive(Debug, thiserror::Error)]
pub enum ModelSpecError {
    #[error("unknown error-model shorthand {0:?} (expected x, z, xz, or xyz)")]
    UnknownShorthand(String),
    #[error("bad error label {0:?} (expected e.g. \"X1\", \"Z3\")")]
    BadLabel(String),
    #[error(transparent)]
    Code(#[from] syndyn::code::CodeError),
}

impl ErrorModelSpec {
    pub fn build(&self, code: &StabilizerCode) -> Result<ErrorModel, ModelSpecError> {
        match self {
            ErrorModelSpec::Shorthand(s) => {
                let letters: &[Pauli] = match s.to_ascii_lowercase().as_str() {
                    "x" => &[Pauli::X],
                    "z" => &[Pauli::Z],
                    "xz" => &[Pauli::X, Pauli::Z],
                    "xyz" => &[Pauli::X, Pauli::Y, Pauli::Z],
                    _ => return Err(ModelSpecError::UnknownShorthand(s.clone())),
                };
                Ok(ErrorModel::per_qubit(code, letters)?)
            }
            ErrorModelSpec::Explicit(labels) => {
                let mut errors = Vec::with_capacity(labels.len());
                for label in labels {
                    let mut chars = label.chars();
                    let letter = match chars.next() {
                        Some('X') | Some('x') => Pauli::X,
                        Some('Y') | Some('y') => Pauli::Y,
                        Some('Z') | Some('z') => Pauli::Z,
                        _ => return Err(ModelSpecError::BadLabel(label.clone())),
                    };
                    let qubit: usize = chars
                        .as_str()
                        .parse::<usize>()
                        .ok()
                        .filter(|q| *q >= 1)
                        .ok_or_else(|| ModelSpecError::BadLabel(label.clone()))?;
                    errors.push(ElementaryError {
                        qubit: qubit - 1,
                        pauli: letter,
                    });
                }
                Ok(ErrorModel::new(code, errors)?)
            }
        }
    }
}

/// Ohmic Lorentz-Drude bath parameters with temperature.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub e_r_mhz: f64,
    pub gamma_mhz: f64,
    pub temperature_mhz: f64,
}

impl BathConfig {
    pub fn density(&self) -> SpectralDensity {
        SpectralDensity::ohmic(self.e_r_mhz, self.gamma_mhz)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub code: CodeRef,
    pub error_model: ErrorModelSpec,
    #[serde(default = "default_max_weight")]
    pub max_weight: usize,
    /// "dot", "json", or both when omitted.
    #[serde(default)]
    pub format: Option<String>,
}

fn default_max_weight() -> usize {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub stop_us: f64,
    pub points: usize,
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        let n = self.points.max(2);
        (1..=n).map(|i| self.stop_us * i as f64 / n as f64).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub bath: BathConfig,
    pub alphas_mhz: Vec<f64>,
    #[serde(default = "default_w_j")]
    pub w_j: u32,
    pub time: TimeGrid,
    /// Explicit Matsubara truncation; omitted means the converged evaluator.
    #[serde(default)]
    pub matsubara_terms: Option<usize>,
}

fn default_w_j() -> u32 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CorrelationConfig {
    Classical { amplitude: f64, gamma_mhz: f64 },
    OhmicQuantum(BathConfig),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModulationConfig {
    None {},
    Egp {
        alpha_mhz: f64,
        w_j: u32,
    },
    Dd {
        period_us: f64,
    },
    DdExplicit {
        flip_times_us: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuppressConfig {
    pub correlation: CorrelationConfig,
    /// One entry per tracked error channel j.
    pub errors: Vec<ModulationConfig>,
    pub horizon_us: f64,
    pub dt_us: f64,
    #[serde(default = "default_p0")]
    pub p0_init: f64,
    #[serde(default)]
    pub p1_init: f64,
}

fn default_p0() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectConfig {
    pub code: CodeRef,
    pub error_model: ErrorModelSpec,
    #[serde(default = "default_max_weight")]
    pub max_weight: usize,
    pub bath: BathConfig,
    #[serde(default)]
    pub reservoir: Option<BathConfig>,
    pub alpha_mhz: OneOrMany,
    #[serde(default)]
    pub epsilon_bar_mhz: f64,
    #[serde(default = "default_rate_mode")]
    pub rate_mode: String,
    #[serde(default)]
    pub clamp_negative_rates: bool,
    pub horizon_us: f64,
    #[serde(default)]
    pub dt_us: Option<f64>,
    #[serde(default = "default_integrator")]
    pub integrator: String,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// "correctable" (physics run) or "all" (closed conservation harness).
    #[serde(default = "default_track")]
    pub track: String,
    #[serde(default)]
    pub per_syndrome: bool,
}

fn default_rate_mode() -> String {
    "second_markov".into()
}

fn default_integrator() -> String {
    "rk4".into()
}

fn default_samples() -> usize {
    200
}

fn default_track() -> String {
    "correctable".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LogicalQubitGrid {
    List(Vec<u64>),
    Range { start: u64, stop: u64, points: usize },
}

impl LogicalQubitGrid {
    pub fn values(&self) -> Vec<u64> {
        match self {
            LogicalQubitGrid::List(v) => v.clone(),
            LogicalQubitGrid::Range { start, stop, points } => {
                let n = (*points).max(2);
                let (a, b) = (*start as f64, *stop as f64);
                let mut out: Vec<u64> = (0..n)
                    .map(|i| {
                        let f = i as f64 / (n - 1) as f64;
                        (a * (b / a).powf(f)).round() as u64
                    })
                    .collect();
                out.dedup();
                out
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityBathConfig {
    pub e_r_mhz: f64,
    pub gamma_mhz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    pub concatenated: ConcatenatedCodeParams,
    pub scaling: ScalingClass,
    pub alphas_mhz: OneOrMany,
    pub temperatures_mhz: OneOrMany,
    pub logical_qubits: LogicalQubitGrid,
    pub bath: StabilityBathConfig,
    #[serde(default)]
    pub convention: RateConvention,
}

pub fn parse(text: &str) -> Result<RunConfig, serde_json::Error> {
    serde_json::from_str(text)
}
