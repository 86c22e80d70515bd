//! Experiment configuration: a versioned TOML document.

use std::path::Path;

use omnistat_core::calibrate::EceConfig;
use omnistat_core::stats::ActionSpace;
use serde::{Deserialize, Serialize};

use crate::families::{FamilySpec, LossSpec};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Glm,
    Moments,
    Cvx,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Glm => "glm",
            Preset::Moments => "moments",
            Preset::Cvx => "cvx",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "glm" => Ok(Preset::Glm),
            "moments" => Ok(Preset::Moments),
            "cvx" => Ok(Preset::Cvx),
            _ => Err(Error::Config(format!("unknown preset {s:?}; expected glm, moments or cvx"))),
        }
    }
}

/// How expectations are computed during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Exact expectations on the finite domain.
    #[default]
    Exact,
    /// i.i.d. samples, with exact diagnostics alongside.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainConfig {
    pub side: usize,
    pub y_points: usize,
    pub seed: u64,
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig { side: 8, y_points: 11, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActionConfig {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Default for ActionConfig {
    fn default() -> Self {
        ActionConfig { lo: 0.0, hi: 1.0, count: 11 }
    }
}

impl ActionConfig {
    pub fn build(&self) -> Result<ActionSpace> {
        Ok(ActionSpace::scalar_grid(self.lo, self.hi, self.count)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    pub seed: u64,
    pub c_est: f64,
    pub repeats: usize,
    pub n_override: Option<usize>,
    pub sample_budget: f64,
    pub wl_sample_constant: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        let e = EceConfig::default();
        SamplingConfig {
            seed: 0,
            c_est: e.c_est,
            repeats: e.repeats,
            n_override: e.n_override,
            sample_budget: e.sample_budget,
            wl_sample_constant: 2.0,
        }
    }
}

impl SamplingConfig {
    pub fn ece(&self) -> EceConfig {
        EceConfig { c_est: self.c_est, n_override: self.n_override, repeats: self.repeats, sample_budget: self.sample_budget }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub preset: Preset,
    pub epsilon: f64,
    pub family: FamilySpec,
    pub losses: Vec<LossSpec>,
    #[serde(default)]
    pub domain: DomainConfig,
    #[serde(default)]
    pub actions: ActionConfig,
    #[serde(default = "default_hypotheses")]
    pub hypotheses: usize,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub sampling: SamplingConfig,
}

fn default_hypotheses() -> usize {
    16
}

impl ExperimentConfig {
    /// The built-in settings of each preset.
    pub fn preset(preset: Preset) -> Self {
        let (epsilon, family, losses) = match preset {
            Preset::Glm => (
                0.2,
                FamilySpec::Moments { degree: 1 },
                vec![LossSpec::Glm(omnistat_core::losses::GlmLink::Quadratic), LossSpec::Glm(omnistat_core::losses::GlmLink::Softplus), LossSpec::Glm(omnistat_core::losses::GlmLink::Quartic)],
            ),
            Preset::Moments => (0.2, FamilySpec::Moments { degree: 4 }, vec![LossSpec::Lp(2), LossSpec::Lp(4)]),
            Preset::Cvx => (
                0.2,
                FamilySpec::Cvx { delta: 0.125, seed: 0 },
                vec![LossSpec::Newsvendor(0.2), LossSpec::Newsvendor(0.5), LossSpec::Newsvendor(0.8), LossSpec::Absolute],
            ),
        };
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            preset,
            epsilon,
            family,
            losses,
            domain: DomainConfig::default(),
            actions: ActionConfig::default(),
            hypotheses: default_hypotheses(),
            mode: Mode::Exact,
            sampling: SamplingConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon = {} must be positive", self.epsilon)));
        }
        if self.losses.is_empty() {
            return Err(Error::Config("at least one loss is required".into()));
        }
        match (self.preset, &self.family) {
            (Preset::Glm, FamilySpec::Moments { degree: 1 }) | (Preset::Moments, FamilySpec::Moments { .. }) | (Preset::Cvx, FamilySpec::Cvx { .. }) => {}
            (p, f) => return Err(Error::Config(format!("preset {} does not take family {f:?}", p.name()))),
        }
        let family_seed = match self.family {
            FamilySpec::Cvx { seed, .. } => seed,
            FamilySpec::Moments { .. } => 0,
        };
        for (name, seed) in [("domain.seed", self.domain.seed), ("sampling.seed", self.sampling.seed), ("family.seed", family_seed)] {
            if seed > i64::MAX as u64 {
                return Err(Error::Config(format!("{name} = {seed} exceeds the largest TOML integer")));
            }
        }
        if self.actions.count == 0 || !(self.actions.lo < self.actions.hi) {
            return Err(Error::Config("actions need count >= 1 and lo < hi".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip_through_toml() {
        for p in [Preset::Glm, Preset::Moments, Preset::Cvx] {
            let cfg = ExperimentConfig::preset(p);
            assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
        }
    }

    #[test]
    fn bad_configs_are_rejected() {
        let mut cfg = ExperimentConfig::preset(Preset::Glm);
        cfg.schema_version = 2;
        assert!(matches!(ExperimentConfig::from_toml(&cfg.to_toml().unwrap()), Err(Error::Config(_))));
        let text = ExperimentConfig::preset(Preset::Glm).to_toml().unwrap() + "\nsurprise = 1\n";
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Config(_))));
        let mut cfg = ExperimentConfig::preset(Preset::Glm);
        cfg.family = FamilySpec::Moments { degree: 2 };
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::preset(Preset::Glm);
        cfg.domain.seed = u64::MAX;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
