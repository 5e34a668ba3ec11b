//! Scenario configuration: a TOML file with one section per concern.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    BlowupExterior,
    BlowupInterior,
    GlobalDecay,
    EllipticConvergence,
    OracleSweep,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::BlowupExterior => "blowup-exterior",
            Scenario::BlowupInterior => "blowup-interior",
            Scenario::GlobalDecay => "global-decay",
            Scenario::EllipticConvergence => "elliptic-convergence",
            Scenario::OracleSweep => "oracle-sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub step: StepConfig,
    #[serde(default)]
    pub monitor: MonitorConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub nr: usize,
    pub nz: usize,
    /// Outer radius of the truncated exterior domain.
    pub r_max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nr: 257,
            nz: 65,
            r_max: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Test-function exponent.
    pub alpha: f64,
    /// Robin coefficient; defaults to `2·alpha` (exterior) and
    /// `(λ₁/alpha)·tanh(alpha)` (interior), the only values allowed.
    pub beta: Option<f64>,
    pub nu: f64,
    /// Boundary shift `M` of the decay system.
    pub m: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            alpha: 3.0,
            beta: None,
            nu: 0.0,
            m: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// `u₀² = s·sin²(πz)·exp(c·φ)`.
    pub s: f64,
    pub c: f64,
    /// Amplitude of the initial stream function.
    pub b: f64,
    /// Decay runs: `ũ₀ = a·(1 − r²)²·sin²(πz)`.
    pub decay_amplitude: f64,
    /// Decay runs: `v₀ = a_v·(1 − r²)·sin(πz)`.
    pub decay_v_amplitude: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            s: 2.0,
            c: 1.0,
            b: 8.0,
            decay_amplitude: 1e-3,
            decay_v_amplitude: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepConfig {
    pub cfl: f64,
    pub dt: f64,
    pub dt_min: f64,
    /// Terminate once `sup|u| > blowup_factor·sup|u₀|`.
    pub blowup_factor: f64,
    pub max_steps: usize,
    /// Blow-up runs stop here if given; decay runs default to `5/M`.
    pub t_end: Option<f64>,
    /// Largest neighbor jump of `log u² − log u₀²` counted as resolved.
    pub resolution_cap: f64,
    /// Decay runs: largest negative undershoot of `ũ` clipped to zero.
    pub clip_tol: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            cfl: 0.25,
            dt: 1e-3,
            dt_min: 1e-10,
            blowup_factor: 1e6,
            max_steps: 200_000,
            t_end: None,
            resolution_cap: 0.25,
            clip_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorConfig {
    /// Identity residuals: `max|R| ≤ identity_tol·max(1, |P|)`.
    pub identity_tol: f64,
    /// Inequalities: `lhs − rhs ≥ −inequality_tol·scale`.
    pub inequality_tol: f64,
    /// Lower-bound curve: `Y ≥ curve·(1 − curve_tol)`.
    pub curve_tol: f64,
    /// Cauchy–Schwarz chain: relative violation allowed.
    pub chain_tol: f64,
    /// Decay runs: relative slack of the pointwise bound.
    pub pointwise_tol: f64,
    /// Interior blow-up constant; default mirrors the exterior construction.
    pub c1: Option<f64>,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            identity_tol: 1e-2,
            inequality_tol: 1e-2,
            curve_tol: 1e-3,
            chain_tol: 1e-6,
            pointwise_tol: 1e-6,
            c1: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub y0: Vec<f64>,
    /// Comparison constant; computed from `model.alpha` when absent.
    pub c0: Option<f64>,
    pub dt: f64,
    /// Compare with the closed form up to this fraction of the pole time.
    pub horizon: f64,
    pub match_tol: f64,
    pub drift_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            y0: vec![0.01, 0.1, 1.0],
            c0: None,
            dt: 1e-3,
            horizon: 0.9,
            match_tol: 1e-6,
            drift_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Relative paths resolve against the config file's directory.
    pub csv: PathBuf,
    pub summary: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            csv: PathBuf::from("series.csv"),
            summary: PathBuf::from("summary.json"),
        }
    }
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            grid: GridConfig::default(),
            model: ModelConfig::default(),
            data: DataConfig::default(),
            step: StepConfig::default(),
            monitor: MonitorConfig::default(),
            oracle: OracleConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn exterior_beta(&self) -> f64 {
        self.model.beta.unwrap_or(2.0 * self.model.alpha)
    }

    /// `(λ₁/α) tanh α`, or the configured value.
    pub fn interior_beta(&self) -> f64 {
        self.model.beta.unwrap_or_else(|| {
            let lambda1 = axisym::specfun::radial_eigenvalue::<f64>(1).expect("first radial eigenvalue");
            lambda1 / self.model.alpha * self.model.alpha.tanh()
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("malformed config")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let mut cfg = Self::from_toml(&text).with_context(|| format!("in {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.output.csv = base.join(&cfg.output.csv);
        cfg.output.summary = base.join(&cfg.output.summary);
        Ok(cfg)
    }
}

/// Commented reference config: the canonical exterior blow-up run with
/// every default spelled out.
pub const REFERENCE_CONFIG: &str = r#"# Scenario: blowup-exterior | blowup-interior | global-decay |
#           elliptic-convergence | oracle-sweep
scenario = "blowup-exterior"

[grid]
nr = 257          # radial nodes
nz = 65           # axial nodes on [0, 1]
r_max = 4.0       # exterior domain is 1 <= r <= r_max

[model]
alpha = 3.0       # test function exp(-alpha r^2) sin(pi z); interior: cosh(alpha(z-1)) theta_1(r)
# beta = 6.0      # Robin coefficient; default 2 alpha (exterior), (lambda_1/alpha) tanh(alpha) (interior)
nu = 0.0          # viscosity
m = 1.0           # boundary shift M of the decay system

[data]
s = 2.0           # u0^2 = s sin^2(pi z) exp(c phi)
c = 1.0
b = 8.0           # exterior psi0 = -(b/pi) exp(-alpha r^2) cos(pi z)
decay_amplitude = 0.001   # decay: u~0 = a (1 - r^2)^2 sin^2(pi z)
decay_v_amplitude = 0.0   # decay: v0 = a_v (1 - r^2) sin(pi z)

[step]
cfl = 0.25        # dt = cfl / (1 + 4 max|psi_z|), at most doubling per step
dt = 0.001        # first step
dt_min = 1e-10    # smaller steps end the run as a step collapse
blowup_factor = 1e6       # stop once sup|u| > blowup_factor sup|u0|
max_steps = 200000
# t_end = 1.0     # optional stop time; decay runs default to 5/M
resolution_cap = 0.25     # resolved while neighbor jumps of log u^2 - log u0^2 stay below this
clip_tol = 1e-12  # decay: negative undershoot of u~ clipped up to this size

[monitor]
identity_tol = 0.01       # max|R1|, max|R2| <= identity_tol max(1, |P|)
inequality_tol = 0.01     # R3, R4 >= -inequality_tol scale
curve_tol = 0.001         # Y >= (1 - curve_tol) lower-bound curve
chain_tol = 1e-6          # relative slack of Y^2 <= (8 c0 pi^2 / 3) int u^2 phi
pointwise_tol = 1e-6      # decay: u~ <= u~0 exp(-2Mt) (1 + pointwise_tol)
# c1 = 1.0        # interior constant; default mirrors the exterior construction

[oracle]
y0 = [0.01, 0.1, 1.0]
# c0 = 0.5357     # default: computed from model.alpha
dt = 0.001
horizon = 0.9     # compare with the closed form up to horizon * T*
match_tol = 1e-6
drift_tol = 1e-8

[output]
csv = "series.csv"        # relative to this file
summary = "summary.json"
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_config_is_the_default() {
        let cfg = ScenarioConfig::from_toml(REFERENCE_CONFIG).unwrap();
        assert_eq!(cfg, ScenarioConfig::new(Scenario::BlowupExterior));
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ScenarioConfig::from_toml("scenario = \"oracle-sweep\"\n").unwrap();
        assert_eq!(cfg.scenario, Scenario::OracleSweep);
        assert_eq!(cfg.oracle, OracleConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ScenarioConfig::from_toml("scenario = \"oracle-sweep\"\n[grid]\nnx = 3\n").is_err());
        assert!(ScenarioConfig::from_toml("scenario = \"other\"\n").is_err());
    }
}
