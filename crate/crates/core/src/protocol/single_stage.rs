//! One traversal per symbol. Alice and Bob derive the same transform from
//! a shared θ, Alice applies it on top of the message and Bob removes it:
//! delay and phases optically, the intensity shift by subtracting its
//! expected counts from his measurement.
//!
//! θ advances after every block of `block_symbols` symbols. Alice feeds
//! the bits she sent into the update, Bob the bits he decoded (erasures
//! and invalid symbols count as zeros), so a decoding error inside the
//! update window splits the two schedules.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::theta::{derive_transform, next_theta, ThetaState, DEFAULT_MODULUS};
use super::{finish_record, source_pair, traverse, undo_delay, undo_phases, Flow, ProtocolConfig, SymbolRecord};
use crate::codec::{self, CompactSymbol, DecodeContext};
use crate::error::{Error, Result};
use crate::pulse::{self, Window};
use crate::transforms::apply_transform;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SingleStageOptions {
    pub theta0: u64,
    /// Bob's starting θ when it should differ from Alice's.
    pub bob_theta0: Option<u64>,
    pub modulus: u64,
    pub update_bits: u32,
    pub block_symbols: usize,
}

impl Default for SingleStageOptions {
    fn default() -> Self {
        Self { theta0: 0, bob_theta0: None, modulus: DEFAULT_MODULUS, update_bits: 16, block_symbols: 8 }
    }
}

impl SingleStageOptions {
    pub fn with_theta(theta0: u64) -> Self {
        Self { theta0, ..Self::default() }
    }
}

/// Both parties' θ and the position inside the current block.
#[derive(Debug, Clone)]
pub(super) struct Keys {
    pub alice: ThetaState,
    pub bob: ThetaState,
    block_symbols: usize,
    counter: u64,
    sent: Vec<bool>,
    received: Vec<bool>,
}

impl Keys {
    pub fn new(opts: &SingleStageOptions, bits_per_symbol: usize) -> Result<Self> {
        if opts.block_symbols == 0 {
            return Err(Error::Config("single_stage.block_symbols must be positive".into()));
        }
        let block_bits = opts.block_symbols * bits_per_symbol;
        if block_bits < opts.update_bits as usize {
            return Err(Error::Config(format!(
                "a block carries {block_bits} bits but each θ update needs {}",
                opts.update_bits
            )));
        }
        let alice = ThetaState::new(opts.theta0, opts.modulus, opts.update_bits)?;
        let bob = ThetaState::new(opts.bob_theta0.unwrap_or(opts.theta0), opts.modulus, opts.update_bits)?;
        Ok(Self { alice, bob, block_symbols: opts.block_symbols, counter: 0, sent: Vec::new(), received: Vec::new() })
    }

    /// Books one symbol; returns the new θ pair when a block completes.
    pub fn after_symbol(&mut self, sent: &[bool], decoded: Option<&[bool]>) -> Result<Option<(u64, u64)>> {
        self.counter += 1;
        self.sent.extend_from_slice(sent);
        match decoded {
            Some(d) => self.received.extend_from_slice(d),
            None => self.received.extend(std::iter::repeat_n(false, sent.len())),
        }
        if self.counter < self.block_symbols as u64 {
            return Ok(None);
        }
        self.alice = next_theta(&self.alice, &self.sent)?;
        self.bob = next_theta(&self.bob, &self.received)?;
        self.counter = 0;
        self.sent.clear();
        self.received.clear();
        Ok(Some((self.alice.theta, self.bob.theta)))
    }
}

pub(super) fn send_symbol<R: Rng + ?Sized>(
    cfg: &ProtocolConfig,
    keys: &Keys,
    index: usize,
    sym: CompactSymbol,
    bits: &[bool],
    rng: &mut R,
) -> Result<SymbolRecord> {
    let eta = cfg.channel.eta;
    let message = super::message_transform(cfg, &sym)?;
    let alice = derive_transform(keys.alice.theta, keys.counter, &cfg.policy)?;
    let bob = derive_transform(keys.bob.theta, keys.counter, &cfg.policy)?;
    let mut flow = Flow::new();

    let train = flow.step(source_pair(cfg, &sym)?, |t| {
        let t = pulse::intensity_shift(t, message.intensity_shift, cfg.bounds)?;
        let t = apply_transform(&t, &alice, cfg.bounds)?;
        Ok(pulse::phase_shift_window(&t, Window::Second, message.phase_second.radians()))
    })?;
    let (train, record) = traverse(cfg, 1, train, rng)?;

    let residual = flow.step(train, |t| {
        let t = undo_delay(t, bob.delay_bins)?;
        Ok(undo_phases(&t, &bob))
    })?;
    let ctx = DecodeContext { gain: eta, count_offset: eta * bob.intensity_shift, dark_rate: cfg.channel.dark_rate };
    let decoded = codec::decode(&residual, &cfg.codec, &ctx, cfg.mode, rng)?;

    finish_record(cfg, index, bits, sym, [message, alice, bob], vec![record], residual, decoded, flow.failure)
}
