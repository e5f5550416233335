//! JSON run configurations, one document per invocation.

use qsim_core::error_analysis::{log_grid, DephasingForm, Variant};
use qsim_core::protocols::{LatticeSchedule, LinkMode, PulseMode};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use std::path::Path;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ConfigError(format!("invalid config {}: {e}", path.display())))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Switch3,
    Echo,
    Chain5,
    Cross,
    Gen1d,
    Gen2d,
    Gen3d,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    #[default]
    Dense,
    Tableau,
    Both,
}

impl BackendChoice {
    pub fn dense(self) -> bool {
        self != BackendChoice::Tableau
    }

    pub fn tableau(self) -> bool {
        self != BackendChoice::Dense
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub protocol: Protocol,
    /// Main qubits per side (`gen1d`: chain length, `gen2d`: lattice side).
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub tiles: Option<usize>,
    /// Uniform coupling strength, or one value per edge.
    #[serde(default = "default_g")]
    pub g: Vec<f64>,
    /// Draw every coupling uniformly from `[min, max]`.
    #[serde(default)]
    pub randomize_couplings: Option<[f64; 2]>,
    pub seed: u64,
    #[serde(default)]
    pub backend: BackendChoice,
    #[serde(default = "default_mode")]
    pub mode: PulseMode,
    #[serde(default)]
    pub link: LinkMode,
    #[serde(default = "default_lattice")]
    pub lattice: LatticeSchedule,
    /// Random input states for the two-qubit gate protocols.
    #[serde(default = "default_inputs")]
    pub inputs: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_g() -> Vec<f64> {
    vec![1.0]
}

fn default_mode() -> PulseMode {
    PulseMode::Ideal
}

fn default_lattice() -> LatticeSchedule {
    LatticeSchedule::FourStep
}

fn default_inputs() -> usize {
    10
}

fn default_tolerance() -> f64 {
    1e-10
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.g.is_empty() || self.g.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
            return Err(ConfigError("couplings must be positive and finite".into()));
        }
        if let Some([lo, hi]) = self.randomize_couplings {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(ConfigError(format!("bad coupling range [{lo}, {hi}]")));
            }
        }
        if let PulseMode::Physical { lambda } = self.mode {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(ConfigError(format!("Rabi frequency must be positive, got {lambda}")));
            }
            if self.backend.tableau() {
                return Err(ConfigError("physical pulses need the dense backend".into()));
            }
        }
        if !(self.tolerance >= 0.0) {
            return Err(ConfigError("tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

/// Either explicit values or a log-spaced range.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Log { min: f64, max: f64, points: usize },
}

impl Grid {
    pub fn values(&self, name: &str) -> Result<Vec<f64>, ConfigError> {
        let v = match self {
            Grid::Values(v) => v.clone(),
            Grid::Log { min, max, points } => {
                log_grid(*min, *max, *points).map_err(|e| ConfigError(format!("{name}: {e}")))?
            }
        };
        if v.is_empty() {
            return Err(ConfigError(format!("{name} is empty")));
        }
        if v.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(ConfigError(format!("{name} values must be positive and finite")));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_variant")]
    pub variant: Variant,
    pub lambda_t2: Grid,
    pub g_t2: Grid,
    #[serde(default)]
    pub eps_d: DephasingForm,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimalConfig {
    #[serde(default = "default_variant")]
    pub variant: Variant,
    pub lambda_t2: Grid,
    #[serde(default)]
    pub eps_d: DephasingForm,
    /// Fidelity the report checks for at the largest λ.
    #[serde(default)]
    pub target_fidelity: Option<f64>,
}

fn default_variant() -> Variant {
    Variant::Switch3
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureConfig {
    pub epsilon_m: Vec<f64>,
    pub residual_times: Vec<f64>,
    #[serde(default = "default_coupling")]
    pub g: f64,
    /// Random input pair; `|+⟩|+⟩` when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_coupling() -> f64 {
    1.0
}

impl FailureConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.epsilon_m.is_empty() || self.residual_times.is_empty() {
            return Err(ConfigError("epsilon_m and residual_times must be nonempty".into()));
        }
        if let Some(e) = self.epsilon_m.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(ConfigError(format!("ε_m must lie in [0, 1], got {e}")));
        }
        if self.residual_times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || !(self.g > 0.0) {
            return Err(ConfigError("residual times must be non-negative and g positive".into()));
        }
        Ok(())
    }
}
