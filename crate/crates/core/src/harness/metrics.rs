//! Per-trial summary rows.

use serde::{Deserialize, Serialize};

use crate::protocol::{ProtocolTranscript, SymbolStatus};

/// One row per trial. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub trial_id: usize,
    pub protocol: String,
    /// IV and data symbols.
    pub symbols_sent: usize,
    /// Fraction of decoded symbols with any property wrong.
    pub ber_total: f64,
    pub ber_intensity: f64,
    pub ber_time: f64,
    pub ber_phase: f64,
    /// Erased and invalid symbols over all symbols.
    pub erasure_rate: f64,
    pub bits_per_pulse: f64,
    pub eve_model: String,
    pub eve_detected: bool,
    pub aborted: bool,
    /// Mean total detector counts per symbol at Bob's decoder.
    pub mean_photons_at_bob: f64,
    pub seed: u64,
}

pub const COLUMNS: [&str; 14] = [
    "trial_id",
    "protocol",
    "symbols_sent",
    "ber_total",
    "ber_intensity",
    "ber_time",
    "ber_phase",
    "erasure_rate",
    "bits_per_pulse",
    "eve_model",
    "eve_detected",
    "aborted",
    "mean_photons_at_bob",
    "seed",
];

/// Error event counts behind a row.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorCounts {
    pub decoded: usize,
    pub erased: usize,
    pub any: usize,
    pub intensity: usize,
    pub time: usize,
    pub phase: usize,
}

pub fn count_errors(transcript: &ProtocolTranscript) -> ErrorCounts {
    let mut c = ErrorCounts::default();
    for s in &transcript.symbols {
        let Some(got) = s.decoded_symbol() else {
            c.erased += 1;
            continue;
        };
        debug_assert_eq!(s.status, SymbolStatus::Decoded);
        c.decoded += 1;
        let sent = s.symbol;
        let (i, t, p) = (got.intensity != sent.intensity, got.time != sent.time, got.phase != sent.phase);
        c.intensity += i as usize;
        c.time += t as usize;
        c.phase += p as usize;
        c.any += (i || t || p) as usize;
    }
    c
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Summarizes one trial. BERs are 0 when nothing was decoded; the erasure
/// rate shows that case.
pub fn metrics_row(
    trial_id: usize,
    seed: u64,
    transcript: &ProtocolTranscript,
    bits_per_symbol: usize,
    eve_model: &str,
) -> MetricsRow {
    let c = count_errors(transcript);
    let n = transcript.symbols.len();
    let erasure_rate = ratio(c.erased, n);
    let counts: f64 = transcript.symbols.iter().map(|s| s.decoded.record.total()).sum();
    let (eve_detected, aborted) = match &transcript.iv {
        Some(r) => (r.eve_detected(), r.aborted),
        None => (false, false),
    };
    MetricsRow {
        trial_id,
        protocol: transcript.protocol.label().to_string(),
        symbols_sent: n,
        ber_total: ratio(c.any, c.decoded),
        ber_intensity: ratio(c.intensity, c.decoded),
        ber_time: ratio(c.time, c.decoded),
        ber_phase: ratio(c.phase, c.decoded),
        erasure_rate,
        bits_per_pulse: if n == 0 { 0.0 } else { bits_per_symbol as f64 * (1.0 - erasure_rate) },
        eve_model: eve_model.to_string(),
        eve_detected,
        aborted,
        mean_photons_at_bob: if n == 0 { 0.0 } else { counts / n as f64 },
        seed,
    }
}
