use std::path::{Path, PathBuf};

use lfa_core::analysis::{EquivalenceConfig, NflConfig};
use lfa_core::dataio::SynthKind;
use lfa_core::engine::{Method, MethodParams, Solver};
use lfa_core::models::{Architecture, TrainConfig};
use lfa_core::FitConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub dataset: DatasetSource,
    #[serde(default = "default_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub model: ModelSource,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodEntry>,
    #[serde(default)]
    pub points: PointSelection,
    #[serde(default)]
    pub explain: ExplainSection,
    #[serde(default)]
    pub equivalence: EquivalenceSection,
    #[serde(default)]
    pub recover: RecoverSection,
    #[serde(default)]
    pub nfl: NflSection,
    #[serde(default)]
    pub perturb_test: PerturbSection,
}

fn default_out() -> PathBuf {
    PathBuf::from("lfa-out")
}

fn default_fraction() -> f64 {
    0.8
}

fn default_methods() -> Vec<MethodEntry> {
    Method::ALL
        .iter()
        .map(|m| MethodEntry {
            method: *m,
            params: MethodParams::default(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Synth {
        generator: SynthKind,
        n: usize,
        d: usize,
        #[serde(default)]
        noise: f64,
    },
    Csv {
        path: PathBuf,
        target: String,
        #[serde(default)]
        missing: String,
        #[serde(default = "default_k")]
        knn_k: usize,
        /// Compute normalization statistics on the training split only.
        #[serde(default)]
        train_only_normalization: bool,
    },
}

fn default_k() -> usize {
    5
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Synth {
            generator: SynthKind::FriedmanLike,
            n: 1000,
            d: 5,
            noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSource {
    Train {
        architecture: Architecture,
        #[serde(default)]
        train: TrainConfig,
    },
    File {
        path: PathBuf,
    },
}

impl Default for ModelSource {
    fn default() -> Self {
        ModelSource::Train {
            architecture: Architecture::default_regression_mlp(),
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodEntry {
    pub method: Method,
    #[serde(default)]
    pub params: MethodParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum PointSelection {
    /// The first `count` rows of the test split.
    Test {
        count: usize,
    },
    Explicit {
        points: Vec<Vec<f64>>,
    },
}

impl Default for PointSelection {
    fn default() -> Self {
        PointSelection::Test { count: 20 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSection {
    pub solver: Solver,
    pub fit: FitConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquivalenceSection {
    pub reference: lfa_core::reference::ReferenceConfig,
    pub params: MethodParams,
}

impl EquivalenceSection {
    pub fn to_config(&self, methods: &[MethodEntry]) -> EquivalenceConfig {
        EquivalenceConfig {
            methods: methods.iter().map(|m| m.method).collect(),
            params: self.params.clone(),
            reference: self.reference.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum RecoveryCase {
    Linear {
        weights: Vec<f64>,
        intercept: f64,
        x0: Vec<f64>,
    },
    Logistic {
        weights: Vec<f64>,
        intercept: f64,
        x0: Vec<f64>,
    },
    /// Frequencies `n·π / x0_i`, which vanish on every binary mask.
    VanishingSinusoid { x0: Vec<f64>, n: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoverSection {
    pub cases: Vec<RecoveryCase>,
    /// Also refit multiplicative methods with the surrogate applied to the perturbed input.
    pub reparameterize: bool,
}

impl Default for RecoverSection {
    fn default() -> Self {
        RecoverSection {
            cases: vec![
                RecoveryCase::Linear {
                    weights: vec![2.0, -1.0, 0.5],
                    intercept: 0.0,
                    x0: vec![3.0, 2.0, 1.0],
                },
                RecoveryCase::Logistic {
                    weights: vec![1.0, -2.0, 0.5],
                    intercept: 0.1,
                    x0: vec![0.5, 0.3, 0.8],
                },
                RecoveryCase::VanishingSinusoid {
                    x0: vec![1.0, 0.5, 2.0],
                    n: 1,
                },
            ],
            reparameterize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NflFunction {
    Sine,
    Square,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NflSection {
    pub function: NflFunction,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
    pub x0: Vec<f64>,
    pub benign_sigma: f64,
    pub benign_samples: usize,
    pub search: NflConfig,
}

impl Default for NflSection {
    fn default() -> Self {
        NflSection {
            function: NflFunction::Sine,
            low: vec![-std::f64::consts::PI],
            high: vec![std::f64::consts::PI],
            x0: vec![0.0],
            benign_sigma: 0.01,
            benign_samples: 1000,
            search: NflConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbSection {
    pub k_values: Vec<usize>,
    pub gaussian_sigma: f64,
    pub trials: usize,
}

impl Default for PerturbSection {
    fn default() -> Self {
        PerturbSection {
            k_values: vec![1, 2, 3],
            gaussian_sigma: 0.1,
            trials: 100,
        }
    }
}

impl RunConfig {
    pub fn minimal() -> Self {
        serde_json::from_str(&format!("{{\"schema_version\": {SCHEMA_VERSION}}}"))
            .expect("defaults parse")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!(
                "train_fraction must lie in (0,1), got {}",
                self.train_fraction
            ));
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty".into());
        }
        if let DatasetSource::Synth { n, d, noise, .. } = &self.dataset {
            if *n < 2 || *d == 0 || !(*noise >= 0.0) {
                return bad("synthetic datasets need n >= 2, d >= 1 and noise >= 0".into());
            }
        }
        if let PointSelection::Test { count } = &self.points {
            if *count == 0 {
                return bad("points.count must be positive".into());
            }
        }
        if let PointSelection::Explicit { points } = &self.points {
            if points.is_empty() {
                return bad("points.points must not be empty".into());
            }
        }
        let p = &self.perturb_test;
        if p.k_values.is_empty() || p.k_values.windows(2).any(|w| w[0] >= w[1]) {
            return bad("perturb_test.k_values must be non-empty and strictly increasing".into());
        }
        if !(p.gaussian_sigma > 0.0) || p.trials == 0 {
            return bad("perturb_test needs gaussian_sigma > 0 and trials >= 1".into());
        }
        let n = &self.nfl;
        if n.low.len() != n.high.len() || n.low.len() != n.x0.len() || n.x0.is_empty() {
            return bad("nfl.low, nfl.high and nfl.x0 must have the same non-zero length".into());
        }
        if matches!(n.function, NflFunction::Square | NflFunction::Sine) && !(n.benign_sigma > 0.0)
        {
            return bad("nfl.benign_sigma must be positive".into());
        }
        self.explain
            .fit
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.equivalence
            .reference
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        for m in &self.methods {
            lfa_core::registry(m.method, &m.params, 1)
                .map_err(|e| CliError::Config(format!("{}: {e}", m.method)))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::minimal();
        assert_eq!(c.methods.len(), 8);
        assert_eq!(c.points, PointSelection::Test { count: 20 });
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"schema_version": 1, "sed": 3}"#;
        assert!(serde_json::from_str::<RunConfig>(text).is_err());
        let nested = r#"{"schema_version": 1, "perturb_test": {"trails": 3}}"#;
        assert!(serde_json::from_str::<RunConfig>(nested).is_err());
    }

    #[test]
    fn schema_version_is_checked() {
        let c: RunConfig = serde_json::from_str(r#"{"schema_version": 7}"#).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn full_round_trip() {
        let c = RunConfig::minimal();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), c);
    }
}
