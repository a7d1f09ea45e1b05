//! Scenario configuration documents.

use std::path::{Path, PathBuf};

use pshlab_core::scenario::{MuSource, ScenarioSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Directory for records and CSV tables.
    pub dir: PathBuf,
    /// Write the energy grid of the finest stencil.
    pub grid_csv: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: PathBuf::from("pshlab-out"), grid_csv: true }
    }
}

/// Directions of a sweep: `count` random fields with seeds `seed, seed+1, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub count: usize,
    pub amplitude: f64,
    pub include_zero: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec { count: 5, amplitude: 0.3, include_zero: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            scenario: ScenarioSpec::default(),
            sweep: SweepSpec::default(),
            output: OutputSpec::default(),
        }
    }
}

#[derive(Serialize)]
struct HashedInputs<'a> {
    seed: u64,
    scenario: &'a ScenarioSpec,
    sweep: &'a SweepSpec,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    /// Light checks that do not need a mesh; the rest surfaces in the build
    /// stage.
    pub fn check(&self) -> Result<(), CliError> {
        let s = &self.scenario;
        if let MuSource::Generator(g) = &s.mu {
            pshlab_core::conformal::BeltramiSpec::parse(g).map_err(|e| CliError::Config(e.to_string()))?;
        }
        if !(s.margin > 0.0 && s.margin < 1.0) {
            return Err(CliError::Config(format!("margin must lie in (0, 1), got {}", s.margin)));
        }
        if let Some(h) = s.h {
            if !(h > 0.0 && h.is_finite()) {
                return Err(CliError::Config(format!("stencil spacing must be positive, got {h}")));
            }
        }
        if !(s.solver.tol > 0.0) {
            return Err(CliError::Config("solver tolerance must be positive".into()));
        }
        if !(self.sweep.amplitude > 0.0 && self.sweep.amplitude < 1.0) {
            return Err(CliError::Config(format!("sweep amplitude must lie in (0, 1), got {}", self.sweep.amplitude)));
        }
        Ok(())
    }

    /// SHA-256 of the inputs that determine the certified numbers (output
    /// locations excluded).
    pub fn hash(&self) -> String {
        let inputs = HashedInputs { seed: self.seed, scenario: &self.scenario, sweep: &self.sweep };
        let json = serde_json::to_vec(&inputs).expect("configuration serializes");
        hex::encode(Sha256::digest(json))
    }

    /// Directions of a sweep as generator strings.
    pub fn sweep_directions(&self) -> Vec<String> {
        let mut dirs = Vec::new();
        if self.sweep.include_zero {
            dirs.push("zero".to_string());
        }
        for k in 0..self.sweep.count as u64 {
            dirs.push(format!("random:{}:{}", self.seed.wrapping_add(k), self.sweep.amplitude));
        }
        dirs
    }
}

/// Reads a `--mu` argument: an existing file holding a generator string or a
/// JSON array of per-face `[re, im]` pairs, or a generator string itself.
pub fn read_mu(arg: &str) -> Result<MuSource, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let text = text.trim();
        if text.starts_with('[') {
            let values: Vec<[f64; 2]> =
                serde_json::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            return Ok(MuSource::PerFace(values));
        }
        return Ok(MuSource::Generator(text.to_string()));
    }
    pshlab_core::conformal::BeltramiSpec::parse(arg).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(MuSource::Generator(arg.to_string()))
}
