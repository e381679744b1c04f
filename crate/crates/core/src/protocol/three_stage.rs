//! Three traversals per symbol. Alice and Bob each lock the pulse pair with
//! a random transform and later unlock it; the message delay rides along
//! from the start and the message intensity and phase are added when Alice
//! unlocks.
//!
//! With per-traversal transmittance η, a party undoing its intensity shift
//! `I` two traversals later removes `η²·I`, and Alice sets the message
//! intensity to `η²·(μ − n)` so that Bob sees `η³·μ`.

use rand::Rng;

use super::{finish_record, source_pair, traverse, undo_delay, undo_phases, Flow, ProtocolConfig, SymbolRecord};
use crate::codec::{self, CompactSymbol, DecodeContext};
use crate::error::Result;
use crate::pulse::{self, Window};
use crate::transforms::{apply_transform, sample_transform};

pub(super) fn send_symbol<R: Rng + ?Sized>(
    cfg: &ProtocolConfig,
    index: usize,
    sym: CompactSymbol,
    bits: &[bool],
    rng: &mut R,
) -> Result<SymbolRecord> {
    let eta = cfg.channel.eta;
    let eta2 = eta * eta;
    let message = super::message_transform(cfg, &sym)?;
    let alice = sample_transform(rng, &cfg.policy)?;
    let bob = sample_transform(rng, &cfg.policy)?;
    let mut flow = Flow::new();
    let mut traversals = Vec::with_capacity(3);

    // Step 1: Alice locks.
    let train = flow.step(source_pair(cfg, &sym)?, |t| apply_transform(t, &alice, cfg.bounds))?;
    let (train, record) = traverse(cfg, 1, train, rng)?;
    traversals.push(record);

    // Step 2: Bob locks.
    let train = flow.step(train, |t| apply_transform(t, &bob, cfg.bounds))?;
    let (train, record) = traverse(cfg, 2, train, rng)?;
    traversals.push(record);

    // Step 3: Alice unlocks and adds the message intensity and phase.
    let train = flow.step(train, |t| {
        let t = pulse::intensity_shift(t, -eta2 * alice.intensity_shift, cfg.bounds)?;
        let t = pulse::intensity_shift(&t, eta2 * message.intensity_shift, cfg.bounds)?;
        let t = undo_delay(&t, alice.delay_bins)?;
        let t = undo_phases(&t, &alice);
        Ok(pulse::phase_shift_window(&t, Window::Second, message.phase_second.radians()))
    })?;
    let (train, record) = traverse(cfg, 3, train, rng)?;
    traversals.push(record);

    // Step 4: Bob unlocks and decodes.
    let residual = flow.step(train, |t| {
        let t = pulse::intensity_shift(t, -eta2 * bob.intensity_shift, cfg.bounds)?;
        let t = undo_delay(&t, bob.delay_bins)?;
        Ok(undo_phases(&t, &bob))
    })?;
    let ctx = DecodeContext { gain: eta2 * eta, count_offset: 0.0, dark_rate: cfg.channel.dark_rate };
    let decoded = codec::decode(&residual, &cfg.codec, &ctx, cfg.mode, rng)?;

    finish_record(cfg, index, bits, sym, [message, alice, bob], traversals, residual, decoded, flow.failure)
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use crate::codec::{encode_symbol, symbol_to_bits};
    use crate::rng;
    use crate::transforms::TransformPolicy;

    fn config() -> ProtocolConfig {
        ProtocolConfig::ideal(CodecParams::binary(20.0, 60.0).unwrap(), ProtocolKind::ThreeStage).unwrap()
    }

    fn all_codewords(cfg: &ProtocolConfig) -> Vec<bool> {
        cfg.codec.alphabet().flat_map(|s| symbol_to_bits(&s, &cfg.codec).unwrap()).collect()
    }

    #[test]
    fn noiseless_round_trip() {
        let cfg = config();
        let bits = all_codewords(&cfg).repeat(20);
        let mut r = rng::stream("test", &[1]);
        let tr = run_three_stage(&bits, &cfg, &mut r).unwrap();
        assert_eq!(tr.symbols.len(), 160);
        for s in &tr.symbols {
            assert_eq!(s.status, SymbolStatus::Decoded);
            assert_eq!(s.decoded_bits.as_deref(), Some(&s.message_bits[..]));
            assert_eq!(s.traversals.len(), 3);
        }
    }

    #[test]
    fn identity_transforms_leave_plain_encoding() {
        let mut cfg = config();
        cfg.policy = TransformPolicy::identity();
        let mut r = rng::stream("test", &[2]);
        let tr = run_three_stage(&all_codewords(&cfg), &cfg, &mut r).unwrap();
        for s in &tr.symbols {
            let plain = encode_symbol(&s.symbol, &cfg.codec, &cfg.grid).unwrap();
            assert!(s.residual.max_abs_diff(&plain) < 1e-12);
        }
    }

    #[test]
    fn lossy_link_compensated() {
        let mut cfg = config();
        cfg.channel.eta = 0.8;
        let mut r = rng::stream("test", &[3]);
        let tr = run_three_stage(&all_codewords(&cfg).repeat(10), &cfg, &mut r).unwrap();
        for s in &tr.symbols {
            assert!(!s.is_error(), "symbol {} status {:?}", s.index, s.status);
            let mu = cfg.codec.intensity_levels()[s.symbol.intensity];
            assert!((s.residual.total_mean_photons() - 0.512 * mu).abs() < 1e-9);
        }
    }

    #[test]
    fn mid_protocol_trains_are_disguised() {
        let cfg = config();
        let mut r = rng::stream("test", &[4]);
        let tr = run_three_stage(&all_codewords(&cfg).repeat(5), &cfg, &mut r).unwrap();
        for s in &tr.symbols {
            let plain = encode_symbol(&s.symbol, &cfg.codec, &cfg.grid).unwrap();
            if !s.alice_transform.is_identity() {
                assert!(s.traversals[0].launched.max_abs_diff(&plain) > 1e-9);
            }
        }
    }

    #[test]
    fn transcript_is_reproducible() {
        let cfg = config();
        let bits = all_codewords(&cfg);
        let a = run_three_stage(&bits, &cfg, &mut rng::stream("test", &[5])).unwrap();
        let b = run_three_stage(&bits, &cfg, &mut rng::stream("test", &[5])).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn bad_framing_is_rejected() {
        let cfg = config();
        assert!(matches!(
            run_three_stage(&[true, false], &cfg, &mut rng::stream("test", &[6])),
            Err(crate::Error::Framing { .. })
        ));
    }

    #[test]
    fn failure_marks_symbol_invalid() {
        let mut cfg = config();
        // Bob's delay cannot be undone if the channel moves the late pulse
        // back by one bin often enough.
        cfg.channel.jitter_prob = 1.0;
        let mut r = rng::stream("test", &[7]);
        let tr = run_three_stage(&all_codewords(&cfg).repeat(10), &cfg, &mut r).unwrap();
        assert!(tr.symbols.iter().all(|s| s.traversals.len() == 3));
        assert!(tr.symbols.iter().any(|s| matches!(s.status, SymbolStatus::Invalid(_))));
    }
}
