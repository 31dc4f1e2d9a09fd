//! Experiment configuration files (TOML).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use memristor_eqprop::data::{load_dataset, normalize, Dataset, DatasetKind};
use memristor_eqprop::device::defaults::{self, R_ON_OHM};
use memristor_eqprop::device::DeviceKind;
use memristor_eqprop::network::Nonlinearity;
use memristor_eqprop::trainer::{AdamConfig, Estimator, Modulation, TrainingConfig};
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::units::{Frequency, Resistance, Voltage};
use crate::WorkbenchError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Pwm,
    Pam,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Pwm => "pwm",
            Scheme::Pam => "pam",
        })
    }
}

fn one_volt() -> Voltage {
    Voltage(1.0)
}

fn default_r_on() -> Resistance {
    Resistance(R_ON_OHM)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub epochs: usize,
    pub beta: f64,
    #[serde(default)]
    pub estimator: Estimator,
    /// Amplitude of PWM programming pulses.
    #[serde(default = "one_volt")]
    pub pwm_voltage: Voltage,
    /// Output voltage encoding the active class.
    pub target_voltage: Voltage,
    #[serde(default)]
    pub adam: AdamConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacterizeSection {
    #[serde(default = "memristor_models")]
    pub models: Vec<DeviceKind>,
    #[serde(default = "one_volt")]
    pub amplitude: Voltage,
    #[serde(default = "characterization_r_off")]
    pub r_off: Resistance,
    /// Overrides of the (low, high) drive frequencies per model.
    #[serde(default)]
    pub frequencies: BTreeMap<DeviceKind, [Frequency; 2]>,
    #[serde(default = "steps_per_period")]
    pub steps_per_period: usize,
}

fn memristor_models() -> Vec<DeviceKind> {
    DeviceKind::MEMRISTORS.to_vec()
}

fn characterization_r_off() -> Resistance {
    Resistance(defaults::CALIBRATION_R_OFF)
}

fn steps_per_period() -> usize {
    4000
}

impl Default for CharacterizeSection {
    fn default() -> Self {
        CharacterizeSection {
            models: memristor_models(),
            amplitude: one_volt(),
            r_off: characterization_r_off(),
            frequencies: BTreeMap::new(),
            steps_per_period: steps_per_period(),
        }
    }
}

impl CharacterizeSection {
    pub fn frequencies(&self, kind: DeviceKind) -> (f64, f64) {
        self.frequencies
            .get(&kind)
            .map_or_else(|| defaults::characterization_frequencies(kind), |[lo, hi]| (lo.value(), hi.value()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetKind,
    /// Reads the dataset from this file instead of the bundled copy.
    /// Relative paths are resolved against the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_path: Option<PathBuf>,
    pub hidden: Vec<usize>,
    pub models: Vec<DeviceKind>,
    #[serde(default = "default_r_on")]
    pub r_on: Resistance,
    pub r_off: Vec<Resistance>,
    pub modulations: Vec<Scheme>,
    pub seed: u64,
    /// Worker threads for the sweep; all cores when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub nonlinearity: Nonlinearity,
    pub training: TrainingSection,
    /// Learning rate per model.
    pub eta: BTreeMap<DeviceKind, f64>,
    /// PAM pulse frequency per model; library defaults when absent.
    #[serde(default)]
    pub pam_frequency: BTreeMap<DeviceKind, Frequency>,
    #[serde(default)]
    pub characterize: CharacterizeSection,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, WorkbenchError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut config = Self::from_toml(&text)?;
        if let Some(p) = &config.dataset_path {
            if p.is_relative() {
                config.dataset_path = Some(path.parent().unwrap_or(Path::new(".")).join(p));
            }
        }
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self, WorkbenchError> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| WorkbenchError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), WorkbenchError> {
        let bad = |msg: String| Err(WorkbenchError::Config(msg));
        if self.hidden.is_empty() || self.models.is_empty() || self.r_off.is_empty() || self.modulations.is_empty() {
            return bad("hidden, models, r_off and modulations must be non-empty".into());
        }
        if self.hidden.contains(&0) {
            return bad("hidden sizes must be at least 1".into());
        }
        if self.r_on.value() != R_ON_OHM {
            return bad(format!("r_on is fixed at {R_ON_OHM} ohm, got {}", self.r_on));
        }
        for r in &self.r_off {
            if !(r.value() > self.r_on.value()) {
                return bad(format!("r_off {r} must exceed r_on"));
            }
        }
        for model in &self.models {
            if !self.eta.contains_key(model) {
                return bad(format!("no learning rate for model {model}"));
            }
            for scheme in &self.modulations {
                self.training_config(*model, *scheme).validate()?;
            }
        }
        let c = &self.characterize;
        if c.steps_per_period < 1001 {
            return bad("characterize.steps_per_period must exceed 1000".into());
        }
        for kind in &c.models {
            let (lo, hi) = c.frequencies(*kind);
            if !(lo > 0.0 && hi > lo) {
                return bad(format!("characterization frequencies for {kind} must satisfy 0 < low < high"));
            }
        }
        if let Some(0) = self.threads {
            return bad("threads must be at least 1".into());
        }
        Ok(())
    }

    pub fn pam_frequency(&self, model: DeviceKind) -> f64 {
        self.pam_frequency.get(&model).map_or_else(|| defaults::pam_frequency(model), |f| f.value())
    }

    pub fn modulation(&self, model: DeviceKind, scheme: Scheme) -> Modulation {
        match scheme {
            Scheme::Pwm => Modulation::Pwm { const_voltage: self.training.pwm_voltage.value() },
            Scheme::Pam => Modulation::Pam { const_frequency: self.pam_frequency(model) },
        }
    }

    pub fn training_config(&self, model: DeviceKind, scheme: Scheme) -> TrainingConfig {
        let t = &self.training;
        TrainingConfig {
            beta: t.beta,
            epochs: t.epochs,
            estimator: t.estimator,
            adam: t.adam,
            target_voltage: t.target_voltage.value(),
            ..TrainingConfig::new(self.eta.get(&model).copied().unwrap_or(f64::NAN), self.modulation(model, scheme))
        }
    }

    /// The normalized training set.
    pub fn load_dataset(&self) -> Result<Dataset, WorkbenchError> {
        let raw = match &self.dataset_path {
            Some(p) => load_dataset(p, self.dataset)?,
            None => self.dataset.load_bundled()?,
        };
        Ok(normalize(&raw))
    }

    /// Short digest of everything except the seed.
    pub fn hash(&self) -> String {
        let mut unseeded = self.clone();
        unseeded.seed = 0;
        let bytes = serde_json::to_vec(&unseeded).expect("config serializes");
        hex(&Sha256::digest(&bytes))[..12].to_string()
    }

    /// Directory for all outputs of this config under `base`.
    pub fn run_dir(&self, base: impl AsRef<Path>) -> PathBuf {
        base.as_ref().join(format!("{}-seed{}", self.hash(), self.seed))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Initial-weight seed for one (dataset, hidden size, R_OFF) combination.
///
/// The master seed keys a ChaCha stream selected by the combination, so every
/// model trained on that combination starts from the same memristances.
pub fn cell_seed(master: u64, dataset: DatasetKind, hidden: usize, r_off: f64) -> u64 {
    let dataset_id: u64 = match dataset {
        DatasetKind::Iris => 1,
        DatasetKind::BreastCancer => 2,
    };
    let stream = (dataset_id << 60) | ((hidden as u64 & 0xf_ffff) << 40) | (r_off.round() as u64 & 0xff_ffff_ffff);
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng.next_u64()
}
