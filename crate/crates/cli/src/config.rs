use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use xfpt_core::extreme::{decade_ladder, ModelIntegral};
use xfpt_core::{GridControl, ScenarioSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McEngine {
    /// Inversion sampling from the tabulated distribution.
    Inversion,
    /// Direct Euler–Maruyama paths; only practical for small N.
    Paths,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSettings {
    pub trials: u64,
    pub engine: McEngine,
    /// Path time step; `None` picks 1e-4 of the characteristic time.
    pub dt: Option<f64>,
    /// Paths still running at this time count as escapes.
    pub t_max: f64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            trials: 100_000,
            engine: McEngine::Inversion,
            dt: None,
            t_max: 100.0,
        }
    }
}

fn default_model() -> ModelIntegral {
    ModelIntegral {
        amplitude: 1.0,
        power: 0.5,
        outer_power: 0.5,
        scale: 1.0,
        outer_scale: 1.4938,
        delta: 1.0,
    }
}

fn default_ladder() -> Vec<u64> {
    decade_ladder(0, 8)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub scenario: Option<ScenarioSpec>,
    #[serde(default = "default_ladder")]
    pub n_ladder: Vec<u64>,
    #[serde(default)]
    pub grid: GridControl,
    #[serde(default)]
    pub mc: McSettings,
    #[serde(default = "default_model")]
    pub model: ModelIntegral,
    #[serde(default)]
    pub seed: u64,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Config = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(s) = &self.scenario {
            s.validate().context("scenario")?;
        }
        if self.n_ladder.is_empty() {
            bail!("n_ladder: must list at least one searcher count");
        }
        if let Some(n) = self.n_ladder.iter().find(|&&n| n == 0) {
            bail!("n_ladder: searcher counts must be >= 1, got {n}");
        }
        if self.grid.points < 16 {
            bail!("grid.points: need at least 16, got {}", self.grid.points);
        }
        if self.mc.trials < 100 {
            bail!("mc.trials: need at least 100, got {}", self.mc.trials);
        }
        self.model.validate().context("model")?;
        Ok(())
    }

    pub fn scenario(&self) -> Result<&ScenarioSpec> {
        self.scenario
            .as_ref()
            .context("this subcommand needs a `scenario` entry in the config")
    }

    /// Canonical JSON of the effective configuration (defaults filled in).
    pub fn canonical(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
