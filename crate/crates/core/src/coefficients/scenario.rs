use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CoefficientReport, CoefficientSet, ResolvedStrategy, Strategy, StrategyKind, TimeFunction};
use crate::error::{KyleError, Result};

pub const DEFAULT_ODE_STEPS: usize = 20_000;
pub const DEFAULT_SDE_STEPS: usize = 2_000;
pub const DEFAULT_PATHS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Numerics {
    pub n_ode_steps: usize,
    pub n_sde_steps: usize,
    pub n_paths: usize,
    pub master_seed: u64,
    /// Terminal truncation; computations stop at `T - delta`.
    pub delta: f64,
}

impl Numerics {
    pub fn defaults_for(horizon: f64) -> Self {
        Numerics {
            n_ode_steps: DEFAULT_ODE_STEPS,
            n_sde_steps: DEFAULT_SDE_STEPS,
            n_paths: DEFAULT_PATHS,
            master_seed: 0,
            delta: 1e-3 * horizon,
        }
    }

    pub fn validate(&self, horizon: f64) -> Result<()> {
        if self.n_ode_steps < 100 {
            return Err(KyleError::validation("n_ode_steps", "must be >= 100"));
        }
        if self.n_sde_steps < 100 {
            return Err(KyleError::validation("n_sde_steps", "must be >= 100"));
        }
        if self.n_paths < 1 {
            return Err(KyleError::validation("n_paths", "n_paths must be ≥ 1"));
        }
        if !(self.delta > 0.0 && self.delta < 0.5 * horizon) {
            return Err(KyleError::validation("delta", "must satisfy 0 < delta < T/2"));
        }
        Ok(())
    }
}

/// A validated scenario: model data, strategy and numerical settings.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub name: String,
    pub coefficients: CoefficientSet,
    pub strategy: Strategy,
    pub numerics: Numerics,
    /// Filled in by the front end; never read from the scenario file.
    pub output_dir: Option<PathBuf>,
    pub report: CoefficientReport,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NumericsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_ode_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_sde_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    master_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(rename = "T")]
    horizon: f64,
    v0: f64,
    /// Initial variance of the fundamental value.
    s0: f64,
    f: TimeFunction,
    g: TimeFunction,
    h: TimeFunction,
    sigma_v: TimeFunction,
    sigma_z: TimeFunction,
    strategy: StrategyKind,
    #[serde(default)]
    numerics: NumericsFile,
}

/// Parses and validates a scenario from JSON text.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    let coefficients = CoefficientSet {
        horizon: file.horizon,
        v0: file.v0,
        s0: file.s0,
        f: file.f,
        g: file.g,
        h: file.h,
        sigma_v: file.sigma_v,
        sigma_z: file.sigma_z,
    };
    let report = coefficients.validate()?;
    let defaults = Numerics::defaults_for(coefficients.horizon);
    let n = file.numerics;
    let numerics = Numerics {
        n_ode_steps: n.n_ode_steps.unwrap_or(defaults.n_ode_steps),
        n_sde_steps: n.n_sde_steps.unwrap_or(defaults.n_sde_steps),
        n_paths: n.n_paths.unwrap_or(defaults.n_paths),
        master_seed: n.master_seed.unwrap_or(defaults.master_seed),
        delta: n.delta.unwrap_or(defaults.delta),
    };
    numerics.validate(coefficients.horizon)?;
    let strategy = Strategy::new(file.strategy, numerics.delta);
    if let StrategyKind::Grid { .. } = strategy.kind {
        // closed forms are checked when resolved, so that a scenario with an
        // inapplicable closed form still loads and reports NotApplicable later
        strategy.resolve(&coefficients)?;
    }
    Ok(ScenarioConfig {
        name: file.name.unwrap_or_else(|| "scenario".to_string()),
        coefficients,
        strategy,
        numerics,
        output_dir: None,
        report,
    })
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| KyleError::Parse(format!("{}: {e}", path.display())))?;
    let mut config = parse_scenario(&text)?;
    if config.name == "scenario" {
        if let Some(stem) = path.file_stem() {
            config.name = stem.to_string_lossy().into_owned();
        }
    }
    Ok(config)
}

impl ScenarioConfig {
    pub fn t_eff(&self) -> f64 {
        self.coefficients.horizon - self.numerics.delta
    }

    pub fn resolve_strategy(&self) -> Result<ResolvedStrategy> {
        self.strategy.resolve(&self.coefficients)
    }

    /// Same scenario with a different terminal truncation.
    pub fn with_delta(&self, delta: f64) -> Result<ScenarioConfig> {
        let mut out = self.clone();
        out.numerics.delta = delta;
        out.numerics.validate(out.coefficients.horizon)?;
        out.strategy.delta = delta;
        Ok(out)
    }

    /// Serializes the scenario back to the file format.
    pub fn to_json(&self) -> String {
        let c = &self.coefficients;
        let file = ScenarioFile {
            name: Some(self.name.clone()),
            horizon: c.horizon,
            v0: c.v0,
            s0: c.s0,
            f: c.f.clone(),
            g: c.g.clone(),
            h: c.h.clone(),
            sigma_v: c.sigma_v.clone(),
            sigma_z: c.sigma_z.clone(),
            strategy: self.strategy.kind.clone(),
            numerics: NumericsFile {
                n_ode_steps: Some(self.numerics.n_ode_steps),
                n_sde_steps: Some(self.numerics.n_sde_steps),
                n_paths: Some(self.numerics.n_paths),
                master_seed: Some(self.numerics.master_seed),
                delta: Some(self.numerics.delta),
            },
        };
        serde_json::to_string_pretty(&file).expect("scenario serialization cannot fail")
    }
}
