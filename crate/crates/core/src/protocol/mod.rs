//! Protocol engines: the three-stage exchange, the single-stage variant
//! keyed by a shared θ, and the IV intrusion check.
//!
//! A [`Session`] holds one party pair's state and appends one
//! [`SymbolRecord`] per transmitted symbol. Everything random comes from the
//! generator handed to it, so a transcript is a pure function of the
//! configuration and the seed.
//!
//! Failures of an optical step (a pulse pushed out of its window, an
//! intensity outside the modulator range) do not abort the session. The
//! symbol is marked invalid, the party that hit the failure forwards
//! vacuum, and the remaining traversals still happen so the transcript
//! shape does not depend on the outcome.

pub mod iv;
pub mod single_stage;
pub mod theta;
pub mod three_stage;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelParams, EveConfig, EveEvent};
use crate::codec::{self, CodecParams, CompactSymbol, Decoded};
use crate::error::{Error, Result};
use crate::pulse::{self, DetectionMode, IntensityBounds, PulseTrain, TimeGrid, Window};
use crate::transforms::{validate_windows, Phase, SecretTransform, TransformPolicy};

pub use iv::{evaluate_iv, reuse_shared_data, run_iv_check, IvReport};
pub use single_stage::SingleStageOptions;
pub use theta::{next_theta, ThetaState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    ThreeStage,
    SingleStage,
}

impl ProtocolKind {
    pub fn traversals(&self) -> usize {
        match self {
            ProtocolKind::ThreeStage => 3,
            ProtocolKind::SingleStage => 1,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ProtocolKind::ThreeStage => "three_stage",
            ProtocolKind::SingleStage => "single_stage",
        }
    }
}

/// Everything a session needs besides the message and the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub codec: CodecParams,
    pub grid: TimeGrid,
    pub bounds: IntensityBounds,
    /// Mean photons of the source pair before any modulation.
    pub source_intensity: f64,
    pub policy: TransformPolicy,
    pub channel: ChannelParams,
    pub eve: EveConfig,
    pub mode: DetectionMode,
}

/// Upper end of the modulator range used when none is given.
pub const DEFAULT_MAX_INTENSITY: f64 = 200.0;

impl ProtocolConfig {
    /// Ideal link, no Eve, deterministic detection, default grid, source at
    /// the lowest level and the largest intensity transforms that fit.
    pub fn ideal(codec: CodecParams, kind: ProtocolKind) -> Result<Self> {
        let grid = TimeGrid::default();
        let bounds = IntensityBounds::new(0.0, DEFAULT_MAX_INTENSITY)?;
        let source_intensity = codec.intensity_levels()[0];
        let intensity_max = default_intensity_max(kind, &codec, source_intensity, &bounds);
        let cfg = Self {
            policy: TransformPolicy::default_for(&grid, intensity_max),
            codec,
            grid,
            bounds,
            source_intensity,
            channel: ChannelParams::IDEAL,
            eve: EveConfig::none(),
            mode: DetectionMode::Deterministic,
        };
        cfg.validate(kind)?;
        Ok(cfg)
    }

    /// Checks the parts against each other. A valid configuration cannot
    /// push an honest pulse out of its window or out of the modulator range.
    pub fn validate(&self, kind: ProtocolKind) -> Result<()> {
        self.codec.validate_against(&self.grid, &self.bounds)?;
        self.policy.validate()?;
        self.channel.validate()?;
        self.eve.validate()?;
        if self.source_intensity.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
            || self.source_intensity > self.bounds.max
        {
            return Err(Error::Config(format!(
                "source intensity {} must be positive and ≤ n_f = {}",
                self.source_intensity, self.bounds.max
            )));
        }
        if kind == ProtocolKind::SingleStage
            && self.eve.stages.iter().any(|&s| s != 1)
            && self.eve.model != channel::EveModel::None
        {
            return Err(Error::Config("the single-stage protocol has one traversal; eve.stages must be [1]".into()));
        }
        let parties = match kind {
            ProtocolKind::ThreeStage => 2,
            ProtocolKind::SingleStage => 1,
        };
        let last_time = self.codec.time_bins(self.codec.time_levels() - 1, &self.grid)?;
        let latest = self.grid.window_bins() + last_time + parties * self.policy.max_delay();
        if latest >= self.grid.n_bins() {
            return Err(Error::Config(format!(
                "late pulse can reach bin {latest} but the frame has {} bins; shrink the delay set or widen the window",
                self.grid.n_bins()
            )));
        }
        let peak =
            self.source_intensity.max(self.codec.max_intensity()) + parties as f64 * self.policy.intensity_max as f64;
        if peak > self.bounds.max {
            return Err(Error::Config(format!(
                "intensity transforms can reach {peak} mean photons, above n_f = {}",
                self.bounds.max
            )));
        }
        Ok(())
    }
}

/// Largest integer intensity transform that keeps every honest step inside
/// `bounds`.
pub fn default_intensity_max(kind: ProtocolKind, codec: &CodecParams, source: f64, bounds: &IntensityBounds) -> u32 {
    let headroom = bounds.max - source.max(codec.max_intensity());
    let per_party = match kind {
        ProtocolKind::ThreeStage => headroom / 2.0,
        ProtocolKind::SingleStage => headroom,
    };
    per_party.max(0.0).floor() as u32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum SymbolStatus {
    Decoded,
    Erasure,
    Invalid(String),
}

/// One channel pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Traversal {
    pub stage: u8,
    /// The train as the sending party launched it.
    pub launched: PulseTrain,
    pub eve: Option<EveEvent>,
    pub received_mean_photons: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolRecord {
    pub index: usize,
    pub message_bits: Vec<bool>,
    pub symbol: CompactSymbol,
    /// `(I_M, D_M, (0, α_M))` with `I_M = μ − n` relative to the source.
    pub message_transform: SecretTransform,
    pub alice_transform: SecretTransform,
    /// Three-stage: Bob's own transform. Single-stage: the one he derived
    /// from his θ and negates.
    pub bob_transform: SecretTransform,
    pub traversals: Vec<Traversal>,
    /// What reaches Bob's decoder after his last operation.
    pub residual: PulseTrain,
    pub decoded: Decoded,
    pub decoded_bits: Option<Vec<bool>>,
    pub status: SymbolStatus,
}

impl SymbolRecord {
    /// The decoded symbol, or `None` for erasures and invalid symbols.
    pub fn decoded_symbol(&self) -> Option<CompactSymbol> {
        match self.status {
            SymbolStatus::Decoded => self.decoded.symbol,
            _ => None,
        }
    }

    pub fn is_error(&self) -> bool {
        self.decoded_symbol() != Some(self.symbol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTranscript {
    pub protocol: ProtocolKind,
    pub symbols: Vec<SymbolRecord>,
    /// Number of leading symbols that carried the IV.
    pub iv_symbols: usize,
    pub iv: Option<IvReport>,
    /// θ after every update, starting with θ₀. Empty for three-stage.
    pub theta_alice: Vec<u64>,
    pub theta_bob: Vec<u64>,
}

impl ProtocolTranscript {
    fn new(protocol: ProtocolKind) -> Self {
        Self { protocol, symbols: Vec::new(), iv_symbols: 0, iv: None, theta_alice: Vec::new(), theta_bob: Vec::new() }
    }

    pub fn aborted(&self) -> bool {
        self.iv.as_ref().is_some_and(|r| r.aborted)
    }

    pub fn data_symbols(&self) -> &[SymbolRecord] {
        &self.symbols[self.iv_symbols.min(self.symbols.len())..]
    }

    pub fn message_bits(&self) -> Vec<bool> {
        self.symbols.iter().flat_map(|s| s.message_bits.iter().copied()).collect()
    }
}

/// One party pair exchanging symbols under a fixed configuration.
#[derive(Debug, Clone)]
pub struct Session<'a> {
    cfg: &'a ProtocolConfig,
    single: Option<single_stage::Keys>,
    transcript: ProtocolTranscript,
}

impl<'a> Session<'a> {
    pub fn three_stage(cfg: &'a ProtocolConfig) -> Result<Self> {
        cfg.validate(ProtocolKind::ThreeStage)?;
        Ok(Self { cfg, single: None, transcript: ProtocolTranscript::new(ProtocolKind::ThreeStage) })
    }

    pub fn single_stage(cfg: &'a ProtocolConfig, opts: &SingleStageOptions) -> Result<Self> {
        cfg.validate(ProtocolKind::SingleStage)?;
        let keys = single_stage::Keys::new(opts, cfg.codec.bits_per_symbol())?;
        let mut transcript = ProtocolTranscript::new(ProtocolKind::SingleStage);
        transcript.theta_alice.push(keys.alice.theta);
        transcript.theta_bob.push(keys.bob.theta);
        Ok(Self { cfg, single: Some(keys), transcript })
    }

    pub fn kind(&self) -> ProtocolKind {
        self.transcript.protocol
    }

    pub fn transcript(&self) -> &ProtocolTranscript {
        &self.transcript
    }

    pub fn finish(self) -> ProtocolTranscript {
        self.transcript
    }

    /// Sends `bits` symbol by symbol. The length must be a multiple of the
    /// symbol width.
    pub fn send<R: Rng + ?Sized>(&mut self, bits: &[bool], rng: &mut R) -> Result<()> {
        let symbols = codec::bits_to_symbols(bits, &self.cfg.codec)?;
        let width = self.cfg.codec.bits_per_symbol();
        for (sym, chunk) in symbols.into_iter().zip(bits.chunks(width)) {
            let index = self.transcript.symbols.len();
            let record = match &mut self.single {
                None => three_stage::send_symbol(self.cfg, index, sym, chunk, rng)?,
                Some(keys) => {
                    let record = single_stage::send_symbol(self.cfg, keys, index, sym, chunk, rng)?;
                    if let Some((a, b)) = keys.after_symbol(chunk, record.decoded_bits.as_deref())? {
                        self.transcript.theta_alice.push(a);
                        self.transcript.theta_bob.push(b);
                    }
                    record
                }
            };
            self.transcript.symbols.push(record);
        }
        Ok(())
    }

    /// Sends `iv_bits` as a preamble, checks it, then sends `data_bits`
    /// unless the check aborted and `stop_on_abort` is set.
    pub fn send_with_iv<R: Rng + ?Sized>(
        &mut self,
        iv_bits: &[bool],
        data_bits: &[bool],
        threshold: f64,
        stop_on_abort: bool,
        rng: &mut R,
    ) -> Result<&IvReport> {
        let start = self.transcript.symbols.len();
        self.send(iv_bits, rng)?;
        let report = evaluate_iv(&self.transcript.symbols[start..], threshold);
        self.transcript.iv_symbols = self.transcript.symbols.len();
        let aborted = report.aborted;
        self.transcript.iv = Some(report);
        if !(aborted && stop_on_abort) {
            self.send(data_bits, rng)?;
        }
        Ok(self.transcript.iv.as_ref().expect("just set"))
    }
}

pub fn run_three_stage<R: Rng + ?Sized>(
    bits: &[bool],
    cfg: &ProtocolConfig,
    rng: &mut R,
) -> Result<ProtocolTranscript> {
    let mut session = Session::three_stage(cfg)?;
    session.send(bits, rng)?;
    Ok(session.finish())
}

pub fn run_single_stage<R: Rng + ?Sized>(
    bits: &[bool],
    opts: &SingleStageOptions,
    cfg: &ProtocolConfig,
    rng: &mut R,
) -> Result<ProtocolTranscript> {
    let mut session = Session::single_stage(cfg, opts)?;
    session.send(bits, rng)?;
    Ok(session.finish())
}

/// Tracks the first optical failure of a symbol. After a failure every
/// later party operation yields vacuum.
struct Flow {
    failure: Option<String>,
}

impl Flow {
    fn new() -> Self {
        Self { failure: None }
    }

    fn step(&mut self, train: PulseTrain, op: impl FnOnce(&PulseTrain) -> Result<PulseTrain>) -> Result<PulseTrain> {
        if self.failure.is_some() {
            return Ok(PulseTrain::vacuum(*train.grid()));
        }
        match op(&train) {
            Ok(out) => Ok(out),
            Err(e @ (Error::WindowViolation { .. } | Error::IntensityRange { .. } | Error::UndefinedPhase)) => {
                self.failure = Some(e.to_string());
                Ok(PulseTrain::vacuum(*train.grid()))
            }
            Err(e) => Err(e),
        }
    }
}

/// Eve (if she targets `stage`) and then the channel.
fn traverse<R: Rng + ?Sized>(
    cfg: &ProtocolConfig,
    stage: u8,
    train: PulseTrain,
    rng: &mut R,
) -> Result<(PulseTrain, Traversal)> {
    let launched = train.clone();
    let (tapped, eve) = channel::eve_act(&cfg.eve, stage, train, &cfg.codec, cfg.mode, rng)?;
    let received = channel::transmit(&tapped, &cfg.channel, rng)?;
    let record = Traversal { stage, launched, eve, received_mean_photons: received.total_mean_photons() };
    Ok((received, record))
}

/// The source pair `√(n/2)(a₀ + a_Δ)` with the message delay D_M applied
/// to the late pulse.
fn source_pair(cfg: &ProtocolConfig, sym: &CompactSymbol) -> Result<PulseTrain> {
    let half = num_complex::Complex64::new((cfg.source_intensity / 2.0).sqrt(), 0.0);
    let pair = pulse::make_pulse_pair(cfg.grid, half, half, cfg.grid.boundary())?;
    let d_m = cfg.codec.time_bins(sym.time, &cfg.grid)? as isize;
    pulse::delay_window(&pair, Window::Second, d_m)
}

fn message_transform(cfg: &ProtocolConfig, sym: &CompactSymbol) -> Result<SecretTransform> {
    Ok(SecretTransform {
        intensity_shift: cfg.codec.intensity_levels()[sym.intensity] - cfg.source_intensity,
        delay_bins: cfg.codec.time_bins(sym.time, &cfg.grid)? as isize,
        phase_first: Phase::ZERO,
        phase_second: Phase::from_level(sym.phase, cfg.codec.phase_levels()),
    })
}

/// Undoes a late-pulse delay `d` by delaying the early pulse by `d` and
/// re-referencing the frame to the early pulse.
fn undo_delay(train: &PulseTrain, d: isize) -> Result<PulseTrain> {
    let early_delayed = pulse::delay_window(train, Window::First, d)?;
    let out = pulse::shift_frame(&early_delayed, -d)?;
    match validate_windows(&out, out.grid()).offenders.first() {
        Some(o) => Err(Error::WindowViolation { bin: o.bin as isize }),
        None => Ok(out),
    }
}

fn undo_phases(train: &PulseTrain, t: &SecretTransform) -> PulseTrain {
    let p = pulse::phase_shift_window(train, Window::First, (-t.phase_first).radians());
    pulse::phase_shift_window(&p, Window::Second, (-t.phase_second).radians())
}

#[allow(clippy::too_many_arguments)]
fn finish_record(
    cfg: &ProtocolConfig,
    index: usize,
    message_bits: &[bool],
    symbol: CompactSymbol,
    transforms: [SecretTransform; 3],
    traversals: Vec<Traversal>,
    residual: PulseTrain,
    decoded: Decoded,
    failure: Option<String>,
) -> Result<SymbolRecord> {
    let [message_transform, alice_transform, bob_transform] = transforms;
    let status = match (failure, decoded.symbol) {
        (Some(reason), _) => SymbolStatus::Invalid(reason),
        (None, None) => SymbolStatus::Erasure,
        (None, Some(_)) => SymbolStatus::Decoded,
    };
    let decoded_bits = match (&status, decoded.symbol) {
        (SymbolStatus::Decoded, Some(s)) => Some(codec::symbol_to_bits(&s, &cfg.codec)?),
        _ => None,
    };
    Ok(SymbolRecord {
        index,
        message_bits: message_bits.to_vec(),
        symbol,
        message_transform,
        alice_transform,
        bob_transform,
        traversals,
        residual,
        decoded,
        decoded_bits,
        status,
    })
}
