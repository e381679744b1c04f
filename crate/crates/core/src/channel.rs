//! Channel impairments and eavesdroppers applied to one traversal.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::codec::{self, CodecParams, CompactSymbol, DecodeContext};
use crate::error::{Error, Result};
use crate::pulse::{self, DetectionMode, PulseTrain, Window};

/// Per-traversal impairments. Dark counts are a detector property but live
/// here so one struct describes the link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    /// Transmittance per traversal.
    pub eta: f64,
    /// Standard deviation of the phase common to both windows (radians).
    pub phase_drift_sigma: f64,
    /// Standard deviation of the extra phase on the S window (radians).
    pub phase_drift_sigma_rel: f64,
    /// Probability of a ±1 bin shift of the late pulse.
    pub jitter_prob: f64,
    /// Mean dark counts per bin per detector.
    pub dark_rate: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self::IDEAL
    }
}

impl ChannelParams {
    pub const IDEAL: ChannelParams = ChannelParams {
        eta: 1.0,
        phase_drift_sigma: 0.0,
        phase_drift_sigma_rel: 0.0,
        jitter_prob: 0.0,
        dark_rate: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::Config(format!("channel.eta = {} outside [0, 1]", self.eta)));
        }
        for (name, v) in [
            ("channel.phase_drift_sigma", self.phase_drift_sigma),
            ("channel.phase_drift_sigma_rel", self.phase_drift_sigma_rel),
            ("channel.dark_rate", self.dark_rate),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} = {v} must be finite and ≥ 0")));
            }
        }
        if !(0.0..=1.0).contains(&self.jitter_prob) {
            return Err(Error::Config(format!("channel.jitter_prob = {} outside [0, 1]", self.jitter_prob)));
        }
        Ok(())
    }
}

/// One pass through the channel: loss, then phase drift, then jitter.
/// Random draws are only made for impairments that are switched on.
pub fn transmit<R: Rng + ?Sized>(train: &PulseTrain, params: &ChannelParams, rng: &mut R) -> Result<PulseTrain> {
    let mut out = pulse::attenuate(train, params.eta)?;
    if params.phase_drift_sigma > 0.0 {
        let common = Normal::new(0.0, params.phase_drift_sigma).expect("finite sigma").sample(rng);
        out = out.rotate(common);
    }
    if params.phase_drift_sigma_rel > 0.0 {
        let rel = Normal::new(0.0, params.phase_drift_sigma_rel).expect("finite sigma").sample(rng);
        out = pulse::phase_shift_window(&out, Window::Second, rel);
    }
    if params.jitter_prob > 0.0 && rng.random_bool(params.jitter_prob) {
        let step = if rng.random_bool(0.5) { 1 } else { -1 };
        out = jitter_second_window(&out, step);
    }
    Ok(out)
}

/// Moves the S window content by `step` bins; content that would leave the
/// window stays on its edge bin.
fn jitter_second_window(train: &PulseTrain, step: isize) -> PulseTrain {
    let range = train.grid().window_range(Window::Second);
    let mut amps = train.amplitudes().to_vec();
    for b in range.clone() {
        amps[b] = num_complex::Complex64::new(0.0, 0.0);
    }
    for b in range.clone() {
        let target = (b as isize + step).clamp(range.start as isize, range.end as isize - 1) as usize;
        amps[target] += train.amplitude(b);
    }
    PulseTrain::from_amplitudes(*train.grid(), amps).expect("same length")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EveModel {
    #[default]
    None,
    /// Measures with a nominal decoder and resends her guess.
    InterceptResend,
    /// Diverts a fraction of the light and lets the rest through.
    BeamTap,
}

impl EveModel {
    pub fn label(&self) -> &'static str {
        match self {
            EveModel::None => "none",
            EveModel::InterceptResend => "intercept_resend",
            EveModel::BeamTap => "beam_tap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EveConfig {
    pub model: EveModel,
    pub tap_ratio: f64,
    /// Traversals (1-based) Eve acts on.
    pub stages: Vec<u8>,
}

impl Default for EveConfig {
    fn default() -> Self {
        Self { model: EveModel::None, tap_ratio: 0.5, stages: vec![1] }
    }
}

impl EveConfig {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn intercept_resend(stages: Vec<u8>) -> Self {
        Self { model: EveModel::InterceptResend, stages, ..Self::default() }
    }

    pub fn beam_tap(tap_ratio: f64, stages: Vec<u8>) -> Self {
        Self { model: EveModel::BeamTap, tap_ratio, stages }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.tap_ratio) {
            return Err(Error::Config(format!("eve.tap_ratio = {} outside [0, 1)", self.tap_ratio)));
        }
        if let Some(s) = self.stages.iter().find(|s| !(1..=3).contains(*s)) {
            return Err(Error::Config(format!("eve.stages contains {s}; stages are 1, 2, 3")));
        }
        Ok(())
    }

    pub fn targets(&self, stage: u8) -> bool {
        self.model != EveModel::None && self.stages.contains(&stage)
    }
}

/// What Eve did on one traversal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EveEvent {
    pub stage: u8,
    pub model: EveModel,
    /// Intercept-resend: her decoded symbol, `None` after an erasure.
    pub guess: Option<CompactSymbol>,
    /// Mean photons she removed from the line.
    pub captured_photons: f64,
}

/// Intercept-resend: decode with nominal parameters (Eve knows no secret
/// transform), re-encode the guess, forward it. An erasure forwards vacuum.
pub fn eve_intercept_resend<R: Rng + ?Sized>(
    train: &PulseTrain,
    params: &CodecParams,
    mode: DetectionMode,
    rng: &mut R,
) -> Result<(PulseTrain, Option<CompactSymbol>)> {
    let grid = *train.grid();
    let decoded = codec::decode(train, params, &DecodeContext::default(), mode, rng)?;
    let resent = match decoded.symbol {
        Some(sym) => codec::encode_symbol(&sym, params, &grid)?,
        None => PulseTrain::vacuum(grid),
    };
    Ok((resent, decoded.symbol))
}

/// Beam splitter tap: `(√(1−r)·train, √r·train)`.
pub fn eve_beam_tap(train: &PulseTrain, tap_ratio: f64) -> Result<(PulseTrain, PulseTrain)> {
    if !(0.0..1.0).contains(&tap_ratio) {
        return Err(Error::InvalidInput(format!("tap ratio {tap_ratio} outside [0, 1)")));
    }
    Ok((pulse::attenuate(train, 1.0 - tap_ratio)?, pulse::attenuate(train, tap_ratio)?))
}

/// Applies Eve to traversal `stage` if she targets it; otherwise passes the
/// train through untouched.
pub fn eve_act<R: Rng + ?Sized>(
    eve: &EveConfig,
    stage: u8,
    train: PulseTrain,
    params: &CodecParams,
    mode: DetectionMode,
    rng: &mut R,
) -> Result<(PulseTrain, Option<EveEvent>)> {
    if !eve.targets(stage) {
        return Ok((train, None));
    }
    match eve.model {
        EveModel::None => Ok((train, None)),
        EveModel::InterceptResend => {
            let captured = train.total_mean_photons();
            let (resent, guess) = eve_intercept_resend(&train, params, mode, rng)?;
            Ok((resent, Some(EveEvent { stage, model: eve.model, guess, captured_photons: captured })))
        }
        EveModel::BeamTap => {
            let (to_bob, to_eve) = eve_beam_tap(&train, eve.tap_ratio)?;
            let captured = to_eve.total_mean_photons();
            Ok((to_bob, Some(EveEvent { stage, model: eve.model, guess: None, captured_photons: captured })))
        }
    }
}
