//! Experiment configuration.
//!
//! A config is a JSON or TOML document (chosen by file extension). Every
//! table rejects unknown keys, and [`ExperimentConfig::validate`] runs before
//! any computation. Omitted sections take their defaults, and the fully
//! resolved config is what gets hashed into the manifest.

use std::path::{Path, PathBuf};

use ising_qaoa::ionphysics::{TrapConfig, REFERENCE_CONFIGS};
use ising_qaoa::model::{
    build_compound, build_power_law, CouplingMatrix, IsingModel, MixerConvention,
};
use ising_qaoa::noise::{DriveDrift, NoiseModel, ShotPlan};
use ising_qaoa::optimize::{BootstrapOptions, DescentOptions, GridSpec};
use serde::{Deserialize, Serialize};

use crate::error::{schema, CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    /// Master seed; `--seed` takes precedence.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub landscape: LandscapeSpec,
    #[serde(default)]
    pub spectrum: SpectrumSpec,
    #[serde(default)]
    pub descend: DescendSpec,
    #[serde(default)]
    pub bootstrap: BootstrapSpec,
    #[serde(default)]
    pub scaling: ScalingSpec,
    #[serde(default)]
    pub sample: SampleSpec,
    #[serde(default)]
    pub noisy_scan: NoisyScanSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub couplings: CouplingSource,
    #[serde(default = "default_field")]
    pub b_over_j0: f64,
    #[serde(default)]
    pub mixer: MixerConvention,
}

fn default_field() -> f64 {
    -0.3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingSource {
    PowerLaw {
        n: usize,
        alpha: f64,
    },
    Compound {
        n: usize,
        alpha_prime: f64,
        beta_prime: f64,
    },
    /// Mode-mediated couplings of a trapped chain.
    Modes {
        trap: TrapSource,
    },
    /// Coupling matrix stored as JSON (`.json`) or CSV (anything else).
    /// Relative paths are resolved against the config file.
    File {
        path: PathBuf,
    },
}

/// A named reference trap or a full trap description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrapSource {
    Reference(String),
    Explicit(TrapConfig),
}

impl TrapSource {
    pub fn resolve(&self) -> Result<TrapConfig> {
        let trap = match self {
            TrapSource::Reference(name) => TrapConfig::reference(name).ok_or_else(|| {
                schema(format!(
                    "unknown reference trap {name:?}; expected one of {REFERENCE_CONFIGS:?}"
                ))
            })?,
            TrapSource::Explicit(t) => t.clone(),
        };
        trap.validate().map_err(|e| schema(e.to_string()))?;
        Ok(trap)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    pub model: NoiseModel,
    /// Replace `model.p_flip` by phonon-assisted flips of this trap.
    pub phonon_trap: Option<TrapSource>,
    /// Average the phonon flips over drive drift.
    pub drive_drift: Option<DriveDrift>,
}

/// Which energy the optimizers query.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EvaluatorSpec {
    /// Closed form; depth 1 only.
    Analytic,
    #[default]
    StateVector,
    /// Finite-shot estimates under the `noise` section.
    Noisy { shots_x: usize, shots_y: usize },
}

/// `points` evenly spaced values from `start` to `stop` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl RangeSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points)
            .map(|k| self.start + step * k as f64)
            .collect()
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.points == 0 || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(schema(format!(
                "{what}: range needs finite ends and at least one point"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandscapeSpec {
    pub grid: GridSpec,
    pub evaluator: EvaluatorSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSpec {
    pub fields: RangeSpec,
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        Self {
            fields: RangeSpec {
                start: -1.0,
                stop: -0.05,
                points: 20,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DescendSpec {
    /// Starting `[γ.., β..]`; defaults to the centre of `landscape.grid`.
    pub start: Option<Vec<f64>>,
    pub options: DescentOptions,
    pub evaluator: EvaluatorSpec,
}

impl Default for DescendSpec {
    fn default() -> Self {
        Self {
            start: None,
            options: DescentOptions::default(),
            evaluator: EvaluatorSpec::Analytic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapSpec {
    pub p: usize,
    pub options: BootstrapOptions,
    /// Samples of each interpolated angle curve on `s ∈ [0, 1]`.
    pub curve_points: usize,
}

impl Default for BootstrapSpec {
    fn default() -> Self {
        Self {
            p: 3,
            options: BootstrapOptions::default(),
            curve_points: 101,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingSpec {
    /// Power-law exponent; the scaling study ignores `model.couplings`.
    pub alpha: f64,
    pub sizes: Vec<usize>,
    pub p_max: usize,
    /// Fixed field; when absent each size uses its entropy peak over `fields`.
    pub b_over_j0: Option<f64>,
    pub fields: RangeSpec,
    pub options: BootstrapOptions,
}

impl Default for ScalingSpec {
    fn default() -> Self {
        Self {
            alpha: 1.1,
            sizes: vec![8, 10, 12],
            p_max: 3,
            b_over_j0: None,
            fields: RangeSpec {
                start: -1.0,
                stop: -0.05,
                points: 20,
            },
            options: BootstrapOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleSpec {
    /// Mixing angle of the γ scan; defaults to the grid optimum.
    pub beta: Option<f64>,
    /// Cost angle of the stored sample set; defaults to the grid optimum.
    pub gamma: Option<f64>,
    pub gammas: RangeSpec,
    pub shots: usize,
    pub target_per_bubble: usize,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self {
            beta: None,
            gamma: None,
            gammas: RangeSpec {
                start: 0.0,
                stop: 0.6,
                points: 13,
            },
            shots: 2000,
            target_per_bubble: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoisyScanSpec {
    /// Defaults to the grid optimum.
    pub beta: Option<f64>,
    pub gammas: RangeSpec,
    pub shots_x: usize,
    pub shots_y: usize,
}

impl Default for NoisyScanSpec {
    fn default() -> Self {
        let plan = ShotPlan::default();
        Self {
            beta: None,
            gammas: RangeSpec {
                start: 0.0,
                stop: 0.6,
                points: 13,
            },
            shots_x: plan.shots_x,
            shots_y: plan.shots_y,
        }
    }
}

impl ExperimentConfig {
    /// Read a JSON or TOML config. A run manifest is also accepted, in which
    /// case its embedded config and seed are returned.
    pub fn load(path: &Path) -> Result<(Self, Option<u64>)> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let is_toml = path.extension().is_some_and(|e| e == "toml");
        let (mut config, seed) = if is_toml {
            let c: Self = toml::from_str(&text).map_err(|e| schema(e.to_string()))?;
            (c, None)
        } else {
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| schema(e.to_string()))?;
            if value.get("config_sha256").is_some() {
                let m: crate::manifest::Manifest =
                    serde_json::from_value(value).map_err(|e| schema(format!("manifest: {e}")))?;
                (m.config, Some(m.seed))
            } else {
                (
                    serde_json::from_value(value).map_err(|e| schema(e.to_string()))?,
                    None,
                )
            }
        };
        if let CouplingSource::File { path: p } = &mut config.model.couplings {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        config.validate()?;
        Ok((config, seed))
    }

    pub fn validate(&self) -> Result<()> {
        let b = self.model.b_over_j0;
        if !b.is_finite() {
            return Err(schema("model.b_over_j0 must be finite"));
        }
        match &self.model.couplings {
            CouplingSource::PowerLaw { n, alpha } if *n < 2 || !alpha.is_finite() => {
                return Err(schema("power_law couplings need n >= 2 and a finite alpha"));
            }
            CouplingSource::Compound {
                n,
                alpha_prime,
                beta_prime,
            } if *n < 2 || !alpha_prime.is_finite() || !beta_prime.is_finite() => {
                return Err(schema(
                    "compound couplings need n >= 2 and finite exponents",
                ));
            }
            CouplingSource::Modes { trap } => {
                trap.resolve()?;
            }
            _ => {}
        }
        self.noise
            .model
            .validate()
            .map_err(|e| schema(format!("noise.model: {e}")))?;
        if let Some(t) = &self.noise.phonon_trap {
            t.resolve()?;
        }
        self.landscape
            .grid
            .validate()
            .map_err(|e| schema(format!("landscape.grid: {e}")))?;
        self.descend
            .options
            .validate()
            .map_err(|e| schema(format!("descend.options: {e}")))?;
        if let Some(start) = &self.descend.start {
            if start.is_empty() || start.len() % 2 != 0 {
                return Err(schema(
                    "descend.start must hold p gammas followed by p betas",
                ));
            }
        }
        self.bootstrap
            .options
            .grid
            .validate()
            .map_err(|e| schema(format!("bootstrap.options.grid: {e}")))?;
        if self.bootstrap.p == 0 || self.bootstrap.curve_points < 2 {
            return Err(schema("bootstrap needs p >= 1 and curve_points >= 2"));
        }
        self.spectrum.fields.validate("spectrum.fields")?;
        self.scaling.fields.validate("scaling.fields")?;
        self.scaling
            .options
            .grid
            .validate()
            .map_err(|e| schema(format!("scaling.options.grid: {e}")))?;
        if self.scaling.sizes.iter().any(|&n| n < 2) || self.scaling.p_max == 0 {
            return Err(schema("scaling needs sizes >= 2 and p_max >= 1"));
        }
        self.sample.gammas.validate("sample.gammas")?;
        if self.sample.shots == 0 || self.sample.target_per_bubble == 0 {
            return Err(schema("sample needs shots and target_per_bubble >= 1"));
        }
        self.noisy_scan.gammas.validate("noisy_scan.gammas")?;
        if self.noisy_scan.shots_x == 0 || (self.noisy_scan.shots_y == 0 && b != 0.0) {
            return Err(schema(
                "noisy_scan needs x shots, and y shots whenever the field is non-zero",
            ));
        }
        Ok(())
    }

    /// Coupling matrix in physical units, before normalization.
    pub fn couplings(&self) -> Result<CouplingMatrix> {
        Ok(match &self.model.couplings {
            CouplingSource::PowerLaw { n, alpha } => build_power_law(*n, 1.0, *alpha)?,
            CouplingSource::Compound {
                n,
                alpha_prime,
                beta_prime,
            } => build_compound(*n, 1.0, *alpha_prime, *beta_prime)?,
            CouplingSource::Modes { trap } => trap.resolve()?.couplings()?,
            CouplingSource::File { path } => {
                let io = |source| CliError::Io {
                    path: path.clone(),
                    source,
                };
                if path.extension().is_some_and(|e| e == "json") {
                    CouplingMatrix::from_json(&std::fs::read_to_string(path).map_err(io)?)?
                } else {
                    CouplingMatrix::from_csv(std::fs::File::open(path).map_err(io)?)?
                }
            }
        })
    }

    /// Number of sites without building the couplings.
    pub fn sites(&self) -> Result<usize> {
        Ok(match &self.model.couplings {
            CouplingSource::PowerLaw { n, .. } | CouplingSource::Compound { n, .. } => *n,
            CouplingSource::Modes { trap } => trap.resolve()?.n,
            CouplingSource::File { .. } => self.couplings()?.n(),
        })
    }

    /// Couplings normalized by their average nearest-neighbour value.
    pub fn model(&self) -> Result<IsingModel> {
        Ok(
            IsingModel::from_physical(&self.couplings()?, self.model.b_over_j0)?
                .with_mixer(self.model.mixer),
        )
    }
}
