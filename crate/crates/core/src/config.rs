//! The TOML experiment file: nested sections mirroring the mission config
//! field names, with defaults applied during deserialization so the resolved
//! file can be re-serialized as a reference of every effective setting.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dense::OptimizerSettings;
use crate::error::{CoreError, Result};
use crate::experiment::{EnvironmentSpec, ExperimentSpec};
use crate::field::{Cell, SynthFieldParams};
use crate::kernel::{HyperParams, NaturalHyperParams};
use crate::mission::{MissionConfig, Strategy};
use crate::sogp::SogpConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub strategies: Vec<Strategy>,
    #[serde(default)]
    pub mse_thresholds: Vec<f64>,
    #[serde(default = "default_checkpoint_interval")]
    pub checkpoint_interval: usize,
    pub environment: EnvironmentSection,
    pub mission: MissionSection,
    #[serde(default)]
    pub sogp: SogpSection,
    pub hyperparams: NaturalHyperParams,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSection {
    #[serde(default = "default_cell_size")]
    pub cell_size: f64,
    /// Sampling operations per frame (multi-frame environments).
    #[serde(default = "default_frame_length")]
    pub frame_length: usize,
    /// Raster frame files; exclusive with `synth`.
    #[serde(default)]
    pub frames: Option<Vec<PathBuf>>,
    #[serde(default)]
    pub synth: Option<SynthSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub bumps: usize,
    /// Inclusive [low, high] bump amplitude range.
    pub amplitude: [f64; 2],
    /// Inclusive [low, high] bump length-scale range, in cells.
    pub length_scale: [f64; 2],
    /// Number of frames; frame k uses seed `seed + k`.
    #[serde(default = "default_one")]
    pub frames: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionSection {
    pub budget: usize,
    #[serde(default = "default_batch_n")]
    pub batch_n: usize,
    #[serde(default = "default_rho0")]
    pub rho0: f64,
    #[serde(default)]
    pub noise_sd: f64,
    /// Start cell as [x, y].
    pub start: [usize; 2],
    #[serde(default = "default_stride")]
    pub planning_stride: usize,
    #[serde(default = "default_spacing")]
    pub lawnmower_spacing: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SogpSection {
    #[serde(default = "default_capacity")]
    pub capacity: usize,
    /// Absolute novelty threshold; omitted means `1e-4 * signal_var`.
    #[serde(default)]
    pub omega: Option<f64>,
}

impl Default for SogpSection {
    fn default() -> Self {
        SogpSection {
            capacity: default_capacity(),
            omega: None,
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_checkpoint_interval() -> usize {
    25
}

fn default_cell_size() -> f64 {
    1.0
}

fn default_frame_length() -> usize {
    200
}

fn default_one() -> usize {
    1
}

fn default_batch_n() -> usize {
    4
}

fn default_rho0() -> f64 {
    0.6
}

fn default_stride() -> usize {
    4
}

fn default_spacing() -> usize {
    4
}

fn default_capacity() -> usize {
    100
}

impl ExperimentFile {
    /// Parse a TOML experiment file; `toml` errors carry the failing key.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CoreError::config("<config>", e.to_string()))
    }

    /// The fully-resolved file with every default filled in.
    pub fn to_resolved_toml(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| CoreError::config("<config>", format!("serialize: {e}")))
    }

    /// Turn the file into a runnable spec; raster paths resolve relative to
    /// `base_dir` (normally the config file's directory).
    pub fn into_spec(self, base_dir: &Path) -> Result<ExperimentSpec> {
        if self.seeds.is_empty() {
            return Err(CoreError::config("seeds", "need at least one seed"));
        }
        if self.strategies.is_empty() {
            return Err(CoreError::config("strategies", "need at least one strategy"));
        }
        let hp: HyperParams = self
            .hyperparams
            .clone()
            .try_into()
            .map_err(|e| CoreError::config("hyperparams", format!("{e}")))?;

        let env = match (&self.environment.frames, &self.environment.synth) {
            (Some(paths), None) => {
                if paths.is_empty() {
                    return Err(CoreError::config("environment.frames", "needs at least one raster path"));
                }
                EnvironmentSpec::Rasters {
                    paths: paths.iter().map(|p| base_dir.join(p)).collect(),
                    frame_length: self.environment.frame_length,
                    cell_size: self.environment.cell_size,
                }
            }
            (None, Some(synth)) => EnvironmentSpec::Synthetic {
                params: SynthFieldParams {
                    seed: synth.seed,
                    width: synth.width,
                    height: synth.height,
                    bump_count: synth.bumps,
                    amplitude_range: (synth.amplitude[0], synth.amplitude[1]),
                    length_scale_range: (synth.length_scale[0], synth.length_scale[1]),
                },
                frames: synth.frames,
                frame_length: self.environment.frame_length,
            },
            (Some(_), Some(_)) => {
                return Err(CoreError::config(
                    "environment",
                    "set either `frames` or `synth`, not both",
                ));
            }
            (None, None) => {
                return Err(CoreError::config(
                    "environment",
                    "one of `frames` or `synth` is required",
                ));
            }
        };

        let mut sogp = SogpConfig::new(self.sogp.capacity, hp);
        sogp.novelty_threshold = self.sogp.omega;
        let mission = MissionConfig {
            strategy: self.strategies[0],
            budget: self.mission.budget,
            batch_n: self.mission.batch_n,
            rho0: self.mission.rho0,
            sogp,
            optimizer: self.optimizer.clone(),
            noise_sd: self.mission.noise_sd,
            seed: self.seeds[0],
            start: Cell::new(self.mission.start[0], self.mission.start[1]),
            planning_stride: self.mission.planning_stride,
            lawnmower_spacing: self.mission.lawnmower_spacing,
            checkpoint_interval: self.checkpoint_interval,
        };
        Ok(ExperimentSpec {
            strategies: self.strategies,
            seeds: self.seeds,
            output_dir: self.output_dir,
            mse_thresholds: self.mse_thresholds,
            mission,
            env,
        })
    }
}

/// Parse and validate a config file from disk; returns the spec with
/// `output_dir` and raster paths resolved against the file's directory.
pub fn load_experiment(path: &Path) -> Result<ExperimentSpec> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
    let file = ExperimentFile::parse(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut spec = file.into_spec(base)?;
    if spec.output_dir.is_relative() {
        spec.output_dir = base.join(&spec.output_dir);
    }
    Ok(spec)
}
