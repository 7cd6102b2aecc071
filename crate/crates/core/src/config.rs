//! Campaign configuration: a single human-editable TOML file holding the
//! plant constants, safety bounds, functional and acquisition choices,
//! hyperparameter handling, and experiment settings. The configuration is the
//! explicit record of every assumption a tuning run makes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acquisition::{AcquisitionConfig, AcquisitionKind, FantasyMode};
use crate::bo::{HyperMode, MeanMode};
use crate::cost::{ChirpSpec, StepSeriesSpec};
use crate::gp::{GpHyper, HyperBox, KernelFamily, KernelSpec};
use crate::paramspace::Bounds;
use crate::plant::PlantParams;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("failed to parse config: {0}")]
    Parse(String),
    #[error("unknown hyperparameter profile `{0}` (available: heur-ardSE, norm-ardRQ)")]
    UnknownProfile(String),
    #[error("io error reading `{path}`: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn field_err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Which cost functional drives the campaign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Functional {
    Heur,
    Norm,
}

/// Hyperparameter handling, as written in the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum HyperConfig {
    /// A named fixed profile (Table-style presets shipped with the tool).
    Profile { name: String },
    /// Explicit fixed hyperparameters. Lengthscales are given in engineering
    /// units (like the named profiles) and converted by the bounds spans.
    Fixed {
        family: KernelFamily,
        lengthscales: Vec<f64>,
        signal_std: f64,
        noise_std: f64,
        #[serde(default)]
        prior_mean: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
    /// One maximum-likelihood fit on the initial design, then frozen.
    FitOnce {
        #[serde(default = "default_es_family")]
        family: KernelFamily,
        #[serde(default = "default_restarts")]
        restarts: usize,
    },
    /// Refit after every evaluation.
    Refit {
        #[serde(default = "default_ei_family")]
        family: KernelFamily,
        #[serde(default = "default_restarts")]
        restarts: usize,
    },
}

fn default_es_family() -> KernelFamily {
    KernelFamily::SquaredExponentialArd
}

fn default_ei_family() -> KernelFamily {
    KernelFamily::Matern52Ard
}

fn default_restarts() -> usize {
    8
}

/// Acquisition sizing knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcqSettings {
    pub n_representers: usize,
    pub n_function_samples: usize,
    pub n_starts: usize,
    pub n_fantasies: usize,
}

impl Default for AcqSettings {
    fn default() -> Self {
        Self {
            n_representers: 200,
            n_function_samples: 400,
            n_starts: 20,
            n_fantasies: 9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeurSettings {
    pub steps: StepSeriesSpec,
    pub filter_cutoff_hz: f64,
}

impl Default for HeurSettings {
    fn default() -> Self {
        Self {
            steps: StepSeriesSpec::default(),
            filter_cutoff_hz: 50.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormSettings {
    pub chirp: ChirpSpec,
    pub filter_cutoff_hz: f64,
}

impl Default for NormSettings {
    fn default() -> Self {
        Self {
            chirp: ChirpSpec::default(),
            filter_cutoff_hz: 50.0,
        }
    }
}

/// Settings for the secondary-objective experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SecondarySettings {
    pub setpoints: Vec<f64>,
    pub hold_s: f64,
    /// Disturbance step height in input units; applied as d = height * b.
    pub disturbance_height: f64,
    pub disturbance_setpoint: f64,
    pub disturbance_onset_s: f64,
    pub disturbance_duration_s: f64,
}

impl Default for SecondarySettings {
    fn default() -> Self {
        Self {
            setpoints: vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0],
            hold_s: 2.0,
            disturbance_height: 0.05,
            disturbance_setpoint: 30.0,
            disturbance_onset_s: 2.0,
            disturbance_duration_s: 4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub functional: Functional,
    pub acquisition: AcquisitionKind,
    pub budget: usize,
    pub init_design: usize,
    pub output_dir: Option<PathBuf>,
    pub bounds: Bounds,
    pub plant: PlantParams,
    /// Sensor noise standard deviation [deg].
    pub sensor_noise_std: f64,
    /// Nominal input gain the controller assumes; the plant's b when absent.
    pub controller_b: Option<f64>,
    pub hyper: Option<HyperConfig>,
    pub acq: AcqSettings,
    pub heur: HeurSettings,
    pub norm: NormSettings,
    pub secondary: SecondarySettings,
    pub mean_mode: MeanMode,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            functional: Functional::Heur,
            acquisition: AcquisitionKind::Es,
            budget: 10,
            init_design: 10,
            output_dir: None,
            bounds: Bounds::valve_default(),
            plant: PlantParams::default(),
            sensor_noise_std: 0.05,
            controller_b: None,
            hyper: None,
            acq: AcqSettings::default(),
            heur: HeurSettings::default(),
            norm: NormSettings::default(),
            secondary: SecondarySettings::default(),
            mean_mode: MeanMode::Zero,
        }
    }
}

impl CampaignConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.budget < 1 {
            return Err(field_err("budget", "must be at least 1"));
        }
        if self.init_design < 1 {
            return Err(field_err("init_design", "must be at least 1"));
        }
        for (i, d) in self.bounds.dims.iter().enumerate() {
            d.validate().map_err(|e| {
                field_err(&format!("bounds.dims[{i}] ({})", d.name), e.to_string())
            })?;
        }
        self.plant
            .validate()
            .map_err(|e| field_err("plant", e.to_string()))?;
        if !(self.sensor_noise_std >= 0.0) {
            return Err(field_err("sensor_noise_std", "must be nonnegative"));
        }
        self.heur
            .steps
            .validate()
            .map_err(|e| field_err("heur.steps", e.to_string()))?;
        self.norm
            .chirp
            .validate()
            .map_err(|e| field_err("norm.chirp", e.to_string()))?;
        let max_ref = self.norm.chirp.center + self.norm.chirp.amplitude;
        let min_ref = self.norm.chirp.center - self.norm.chirp.amplitude;
        if min_ref < self.plant.stops.0 || max_ref > self.plant.stops.1 {
            return Err(field_err(
                "norm.chirp",
                format!(
                    "excursion [{min_ref}, {max_ref}] exceeds the plant stops [{}, {}]",
                    self.plant.stops.0, self.plant.stops.1
                ),
            ));
        }
        self.hyper_mode().map(|_| ())?;
        if let Some(b) = self.controller_b {
            if b == 0.0 {
                return Err(field_err("controller_b", "must be nonzero"));
            }
        }
        Ok(())
    }

    /// Input gain the controller is synthesized with.
    pub fn nominal_b(&self) -> f64 {
        self.controller_b.unwrap_or(self.plant.b)
    }

    /// The default hyperparameter handling when the config leaves it open:
    /// entropy search fits once on the initial design, expected improvement
    /// refits online.
    pub fn resolved_hyper(&self) -> HyperConfig {
        self.hyper.clone().unwrap_or(match self.acquisition {
            AcquisitionKind::Es => HyperConfig::FitOnce {
                family: default_es_family(),
                restarts: default_restarts(),
            },
            AcquisitionKind::Ei => HyperConfig::Refit {
                family: default_ei_family(),
                restarts: default_restarts(),
            },
        })
    }

    pub fn hyper_mode(&self) -> Result<HyperMode, ConfigError> {
        Ok(match self.resolved_hyper() {
            HyperConfig::Profile { name } => HyperMode::Fixed(
                hyper_profile(&name, &self.bounds)
                    .ok_or_else(|| ConfigError::UnknownProfile(name.clone()))?,
            ),
            HyperConfig::Fixed {
                family,
                lengthscales,
                signal_std,
                noise_std,
                prior_mean,
                alpha,
                gamma,
            } => {
                if lengthscales.len() != self.bounds.dim() {
                    return Err(field_err(
                        "hyper.lengthscales",
                        format!(
                            "expected {} lengthscales, got {}",
                            self.bounds.dim(),
                            lengthscales.len()
                        ),
                    ));
                }
                let spans = self.bounds.spans();
                let converted: Vec<f64> = lengthscales
                    .iter()
                    .zip(&spans)
                    .map(|(l, s)| l / s)
                    .collect();
                let kernel = KernelSpec {
                    family,
                    lengthscales: converted,
                    signal_std,
                    alpha,
                    gamma,
                };
                let hyper = GpHyper::new(kernel, noise_std, prior_mean);
                hyper
                    .validate()
                    .map_err(|e| field_err("hyper", e.to_string()))?;
                HyperMode::Fixed(hyper)
            }
            HyperConfig::FitOnce { family, restarts } => HyperMode::FitOnce {
                family,
                bounds: HyperBox::default(),
                restarts,
            },
            HyperConfig::Refit { family, restarts } => HyperMode::Refit {
                family,
                bounds: HyperBox::default(),
                restarts,
            },
        })
    }

    pub fn acquisition_config(&self) -> AcquisitionConfig {
        AcquisitionConfig {
            kind: self.acquisition,
            n_representers: self.acq.n_representers,
            n_function_samples: self.acq.n_function_samples,
            n_starts: self.acq.n_starts,
            seed: self.seed,
            n_fantasies: self.acq.n_fantasies,
            fantasy_mode: FantasyMode::Quadrature,
        }
    }
}

/// Named hyperparameter presets. Lengthscales are stated in engineering
/// units (seconds for the settling specifiers, raw pole magnitude for the
/// poles) and converted to encoded-cube units by dividing by each
/// dimension's span.
pub fn hyper_profile(name: &str, bounds: &Bounds) -> Option<GpHyper> {
    if bounds.dim() != 4 {
        return None;
    }
    let spans = bounds.spans();
    let convert = |eng: [f64; 4]| -> Vec<f64> {
        eng.iter().zip(&spans).map(|(l, s)| l / s).collect()
    };
    match name {
        "heur-ardSE" => Some(GpHyper::new(
            KernelSpec::squared_exponential(convert([0.077, 0.013, 12.3, 56.7]), 0.084),
            1.00e-3,
            0.0,
        )),
        "norm-ardRQ" => Some(GpHyper::new(
            KernelSpec::rational_quadratic(convert([0.173, 0.051, 1.07e5, 134.0]), 0.244, 0.315),
            3.94e-3,
            0.0,
        )),
        _ => None,
    }
}

pub fn profile_names() -> [&'static str; 2] {
    ["heur-ardSE", "norm-ardRQ"]
}
