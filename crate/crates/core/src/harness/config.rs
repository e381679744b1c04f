//! Experiment configuration: a TOML document with a fixed schema. Unknown
//! keys are rejected.
//!
//! ```toml
//! master_seed = 7
//! trials = 100
//! symbols_per_trial = 256
//! detection = "stochastic"
//!
//! [codec]
//! intensity_levels = [20.0, 60.0]
//!
//! [channel]
//! eta = 0.5
//!
//! [eve]
//! model = "intercept_resend"
//! stages = [1]
//!
//! [protocol]
//! kind = "three_stage"
//! iv_length = 64
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, EveConfig};
use crate::codec::CodecParams;
use crate::error::{Error, Result};
use crate::protocol::iv::{DETERMINISTIC_THRESHOLD, STOCHASTIC_THRESHOLD};
use crate::protocol::theta::DEFAULT_MODULUS;
use crate::protocol::{default_intensity_max, ProtocolConfig, ProtocolKind, SingleStageOptions, DEFAULT_MAX_INTENSITY};
use crate::pulse::{DetectionMode, IntensityBounds, TimeGrid};
use crate::transforms::TransformPolicy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub trials: usize,
    /// Data symbols per trial, not counting the IV.
    pub symbols_per_trial: usize,
    pub detection: DetectionMode,
    /// Run trials on the rayon pool. Output is identical either way.
    pub parallel: bool,
    pub codec: CodecSection,
    pub grid: GridSection,
    pub intensity: IntensitySection,
    pub transforms: TransformSection,
    pub channel: ChannelParams,
    pub eve: EveConfig,
    pub protocol: ProtocolSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            trials: 10,
            symbols_per_trial: 100,
            detection: DetectionMode::Deterministic,
            parallel: true,
            codec: CodecSection::default(),
            grid: GridSection::default(),
            intensity: IntensitySection::default(),
            transforms: TransformSection::default(),
            channel: ChannelParams::IDEAL,
            eve: EveConfig::none(),
            protocol: ProtocolSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodecSection {
    pub intensity_levels: Vec<f64>,
    pub time_levels: usize,
    pub phase_levels: usize,
    pub passive_splitter: bool,
}

impl Default for CodecSection {
    fn default() -> Self {
        Self { intensity_levels: vec![20.0, 60.0], time_levels: 2, phase_levels: 2, passive_splitter: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub bins_per_slot: usize,
    /// Window length Δ in slots.
    pub window_slots: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { bins_per_slot: 4, window_slots: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntensitySection {
    /// n_i.
    pub min: f64,
    /// n_f.
    pub max: f64,
    /// Source pair mean photons; the lowest level when absent.
    pub source: Option<f64>,
}

impl Default for IntensitySection {
    fn default() -> Self {
        Self { min: 0.0, max: DEFAULT_MAX_INTENSITY, source: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformSection {
    /// Largest intensity shift; the largest that fits the bounds when absent.
    pub intensity_max: Option<u32>,
    /// Delay set in bins; {0, T/4, T/2} when absent.
    pub delay_bins: Option<Vec<usize>>,
    /// Phases drawn from this many equally spaced levels; continuous when
    /// absent.
    pub phase_levels: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSection {
    pub kind: ProtocolKind,
    /// IV preamble length in symbols; 0 disables the check.
    pub iv_length: usize,
    /// Error fraction above which the IV check aborts; depends on the
    /// detection mode when absent.
    pub abort_threshold: Option<f64>,
    /// Skip the data symbols of an aborted trial.
    pub stop_on_abort: bool,
    pub theta0: u64,
    /// Bob's θ₀ when it should differ from Alice's.
    pub bob_theta0: Option<u64>,
    pub theta_modulus: u64,
    pub update_bits: u32,
    pub block_symbols: usize,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        let ss = SingleStageOptions::default();
        Self {
            kind: ProtocolKind::ThreeStage,
            iv_length: 0,
            abort_threshold: None,
            stop_on_abort: false,
            theta0: ss.theta0,
            bob_theta0: None,
            theta_modulus: DEFAULT_MODULUS,
            update_bits: ss.update_bits,
            block_symbols: ss.block_symbols,
        }
    }
}

/// A checked configuration with the protocol parts assembled.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub kind: ProtocolKind,
    pub protocol: ProtocolConfig,
    pub single_stage: SingleStageOptions,
    pub abort_threshold: f64,
}

fn field_err(field: &str, e: Error) -> Error {
    match e {
        Error::Config(msg) => Error::Config(format!("{field}: {msg}")),
        other => Error::Config(format!("{field}: {other}")),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// Checks every field and builds the protocol configuration.
    pub fn validate(&self) -> Result<Experiment> {
        if self.trials == 0 {
            return Err(Error::Config("trials: must be positive".into()));
        }
        let c = &self.codec;
        let codec = CodecParams::new(c.intensity_levels.clone(), c.time_levels, c.phase_levels)
            .map_err(|e| field_err("codec", e))?
            .with_passive_splitter(c.passive_splitter);
        let grid = TimeGrid::new(self.grid.bins_per_slot, self.grid.window_slots).map_err(|e| field_err("grid", e))?;
        let bounds =
            IntensityBounds::new(self.intensity.min, self.intensity.max).map_err(|e| field_err("intensity", e))?;
        let source = self.intensity.source.unwrap_or(codec.intensity_levels()[0]);
        let kind = self.protocol.kind;

        let intensity_max =
            self.transforms.intensity_max.unwrap_or_else(|| default_intensity_max(kind, &codec, source, &bounds));
        let mut policy = TransformPolicy::default_for(&grid, intensity_max);
        if let Some(d) = &self.transforms.delay_bins {
            policy.delay_bins = d.clone();
        }
        policy.phase_levels = self.transforms.phase_levels;

        let protocol = ProtocolConfig {
            codec,
            grid,
            bounds,
            source_intensity: source,
            policy,
            channel: self.channel,
            eve: self.eve.clone(),
            mode: self.detection,
        };
        protocol.validate(kind)?;

        let p = &self.protocol;
        let single_stage = SingleStageOptions {
            theta0: p.theta0,
            bob_theta0: p.bob_theta0,
            modulus: p.theta_modulus,
            update_bits: p.update_bits,
            block_symbols: p.block_symbols,
        };
        if kind == ProtocolKind::SingleStage {
            // Surfaces θ schedule errors now instead of in every trial.
            crate::protocol::Session::single_stage(&protocol, &single_stage).map_err(|e| field_err("protocol", e))?;
        }
        let abort_threshold = p.abort_threshold.unwrap_or(match self.detection {
            DetectionMode::Deterministic => DETERMINISTIC_THRESHOLD,
            DetectionMode::Stochastic => STOCHASTIC_THRESHOLD,
        });
        if !(0.0..=1.0).contains(&abort_threshold) {
            return Err(Error::Config(format!("protocol.abort_threshold: {abort_threshold} outside [0, 1]")));
        }
        Ok(Experiment { config: self.clone(), kind, protocol, single_stage, abort_threshold })
    }
}
