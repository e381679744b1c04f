//! The IV check: a symbol sequence both parties know in advance is sent
//! first, and the session is aborted when too many of its symbols come out
//! wrong.

use serde::{Deserialize, Serialize};

use super::{ProtocolTranscript, SymbolRecord};
use crate::error::{Error, Result};

/// Default abort threshold for deterministic detection: any error aborts.
pub const DETERMINISTIC_THRESHOLD: f64 = 0.0;
/// Default abort threshold for stochastic detection.
pub const STOCHASTIC_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvReport {
    pub symbols: usize,
    /// Wrong, erased or invalid IV symbols.
    pub errors: usize,
    /// Symbol indices (within the IV) of the errors.
    pub positions: Vec<usize>,
    pub threshold: f64,
    /// Error fraction above `threshold`.
    pub aborted: bool,
    pub warnings: Vec<String>,
}

impl IvReport {
    pub fn error_fraction(&self) -> f64 {
        if self.symbols == 0 {
            0.0
        } else {
            self.errors as f64 / self.symbols as f64
        }
    }

    /// Any IV error at all, whether or not it crossed the threshold.
    pub fn eve_detected(&self) -> bool {
        self.errors > 0
    }
}

/// Compares the decoded IV symbols with what was sent.
pub fn evaluate_iv(iv: &[SymbolRecord], threshold: f64) -> IvReport {
    let positions: Vec<usize> = iv.iter().enumerate().filter(|(_, s)| s.is_error()).map(|(i, _)| i).collect();
    let mut warnings = Vec::new();
    if threshold >= 1.0 {
        warnings.push(format!("abort threshold {threshold} can never be exceeded; the IV check always passes"));
    }
    if iv.is_empty() {
        warnings.push("empty IV; nothing was checked".into());
    }
    let errors = positions.len();
    let fraction = if iv.is_empty() { 0.0 } else { errors as f64 / iv.len() as f64 };
    IvReport { symbols: iv.len(), errors, positions, threshold, aborted: fraction > threshold, warnings }
}

/// Sends `iv_bits` through `runner` and evaluates every symbol of the
/// transcript it returns against them.
pub fn run_iv_check<F>(iv_bits: &[bool], runner: F, threshold: f64) -> Result<IvReport>
where
    F: FnOnce(&[bool]) -> Result<ProtocolTranscript>,
{
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Config(format!("IV threshold {threshold} outside [0, 1]")));
    }
    let transcript = runner(iv_bits)?;
    if transcript.message_bits() != iv_bits {
        return Err(Error::InvalidInput("runner did not transmit the IV as given".into()));
    }
    Ok(evaluate_iv(&transcript.symbols, threshold))
}

/// Bits for the next session's IV, taken from data symbols Bob decoded in
/// `transcript`, in order. Erased and invalid symbols are skipped since
/// both sides know which they were.
pub fn reuse_shared_data(transcript: &ProtocolTranscript, n_bits: usize) -> Result<Vec<bool>> {
    let pool: Vec<bool> = transcript
        .data_symbols()
        .iter()
        .filter_map(|s| s.decoded_bits.as_ref())
        .flatten()
        .copied()
        .take(n_bits)
        .collect();
    if pool.len() < n_bits {
        return Err(Error::InsufficientMaterial { needed: n_bits, available: pool.len() });
    }
    Ok(pool)
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;
    use crate::channel::EveConfig;
    use crate::codec::CodecParams;
    use crate::pulse::DetectionMode;
    use crate::rng;
    use rand::Rng;

    fn config(mode: DetectionMode) -> ProtocolConfig {
        let mut cfg =
            ProtocolConfig::ideal(CodecParams::binary(20.0, 60.0).unwrap(), ProtocolKind::ThreeStage).unwrap();
        cfg.mode = mode;
        cfg
    }

    fn random_bits(n: usize, seed: u64) -> Vec<bool> {
        let mut r = rng::stream("bits", &[seed]);
        (0..n).map(|_| r.random()).collect()
    }

    #[test]
    fn clean_link_passes() {
        let cfg = config(DetectionMode::Deterministic);
        let iv = random_bits(64 * 3, 1);
        let report =
            run_iv_check(&iv, |b| run_three_stage(b, &cfg, &mut rng::stream("s", &[1])), DETERMINISTIC_THRESHOLD)
                .unwrap();
        assert_eq!(report.errors, 0);
        assert!(!report.aborted);
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn intercept_resend_aborts() {
        let mut cfg = config(DetectionMode::Stochastic);
        cfg.eve = EveConfig::intercept_resend(vec![1]);
        let iv = random_bits(64 * 3, 2);
        let report =
            run_iv_check(&iv, |b| run_three_stage(b, &cfg, &mut rng::stream("s", &[2])), STOCHASTIC_THRESHOLD).unwrap();
        assert!(report.aborted, "{report:?}");
        assert_eq!(report.positions.len(), report.errors);
    }

    #[test]
    fn full_threshold_always_passes_with_warning() {
        let mut cfg = config(DetectionMode::Deterministic);
        cfg.eve = EveConfig::intercept_resend(vec![2]);
        let iv = random_bits(30, 3);
        let report = run_iv_check(&iv, |b| run_three_stage(b, &cfg, &mut rng::stream("s", &[3])), 1.0).unwrap();
        assert!(!report.aborted);
        assert_eq!(report.warnings.len(), 1);
        assert!(run_iv_check(&iv, |b| run_three_stage(b, &cfg, &mut rng::stream("s", &[3])), 1.5).is_err());
    }

    #[test]
    fn session_preamble_and_reuse() {
        let cfg = config(DetectionMode::Deterministic);
        let mut session = Session::three_stage(&cfg).unwrap();
        let data = random_bits(40 * 3, 5);
        let mut r = rng::stream("s", &[4]);
        let report = session.send_with_iv(&random_bits(16 * 3, 4), &data, 0.0, true, &mut r).unwrap();
        assert!(!report.aborted);
        let tr = session.finish();
        assert_eq!(tr.iv_symbols, 16);
        assert_eq!(tr.data_symbols().len(), 40);
        assert_eq!(reuse_shared_data(&tr, 48).unwrap(), data[..48]);
        assert!(matches!(reuse_shared_data(&tr, 1000), Err(Error::InsufficientMaterial { .. })));
    }

    #[test]
    fn abort_stops_data_when_asked() {
        let mut cfg = config(DetectionMode::Deterministic);
        cfg.eve = EveConfig::intercept_resend(vec![1]);
        let mut session = Session::three_stage(&cfg).unwrap();
        let mut r = rng::stream("s", &[6]);
        let report = session.send_with_iv(&random_bits(96, 6), &random_bits(30, 7), 0.0, true, &mut r).unwrap();
        assert!(report.aborted && report.eve_detected());
        assert!(session.transcript().data_symbols().is_empty());
    }
}
