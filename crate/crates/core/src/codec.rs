//! Compact-coding symbols: the bit mapping, the encoder pulse pair and the
//! interferometric decoder bank.
//!
//! A symbol carries one intensity level, one time level and one phase
//! level. In the binary case that is three bits per pulse:
//!
//! | bits | intensity | time | phase |
//! |------|-----------|------|-------|
//! | 000  | I₁        | 0    | 0     |
//! | 001  | I₁        | 0    | π     |
//! | 010  | I₁        | T/2  | 0     |
//! | 011  | I₁        | T/2  | π     |
//! | 100  | I₂        | 0    | 0     |
//! | 101  | I₂        | 0    | π     |
//! | 110  | I₂        | T/2  | 0     |
//! | 111  | I₂        | T/2  | π     |
//!
//! With more levels the group is split into intensity, time and phase
//! fields in that order, each most-significant bit first.
//!
//! The decoder runs one unbalanced interferometer per time level. In the
//! branch whose delay matches the encoded time the early pulse lands on the
//! late one and the combiner ports carry `(1 ± e^{iφ})`; in every other
//! branch the two pulses stay in separate bins. All detectors are summed
//! for the intensity decision.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulse::{
    self, Bank, DetectionMode, DetectionRecord, DetectorId, IntensityBounds, Port, PulseTrain, TimeGrid,
};

/// Level alphabets for the three encoded properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodecParams {
    intensity_levels: Vec<f64>,
    time_levels: usize,
    phase_levels: usize,
    passive_splitter: bool,
}

impl CodecParams {
    /// `intensity_levels` are the mean photon numbers μ₁ < … < μ_L.
    pub fn new(intensity_levels: Vec<f64>, time_levels: usize, phase_levels: usize) -> Result<Self> {
        for (name, n) in [("intensity", intensity_levels.len()), ("time", time_levels), ("phase", phase_levels)] {
            if n < 2 || !n.is_power_of_two() {
                return Err(Error::Config(format!("{name} level count must be a power of two ≥ 2, got {n}")));
            }
        }
        if intensity_levels.iter().any(|&m| !(m.is_finite() && m > 0.0)) {
            return Err(Error::Config("intensity levels must be positive and finite".into()));
        }
        ml_thresholds(&intensity_levels)?;
        Ok(Self { intensity_levels, time_levels, phase_levels, passive_splitter: false })
    }

    /// Two levels per property with intensities `(μ₁, μ₂)`.
    pub fn binary(mu1: f64, mu2: f64) -> Result<Self> {
        Self::new(vec![mu1, mu2], 2, 2)
    }

    /// Decode with a passive splitter in front of each interferometer
    /// instead of the time-gated switch. Only half of the light reaches the
    /// interfering bin; the rest forms satellite peaks.
    pub fn with_passive_splitter(mut self, passive: bool) -> Self {
        self.passive_splitter = passive;
        self
    }

    pub fn intensity_levels(&self) -> &[f64] {
        &self.intensity_levels
    }

    pub fn intensity_level_count(&self) -> usize {
        self.intensity_levels.len()
    }

    pub fn time_levels(&self) -> usize {
        self.time_levels
    }

    pub fn phase_levels(&self) -> usize {
        self.phase_levels
    }

    pub fn passive_splitter(&self) -> bool {
        self.passive_splitter
    }

    pub fn max_intensity(&self) -> f64 {
        *self.intensity_levels.last().expect("at least two levels")
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.intensity_bits() + self.time_bits() + self.phase_bits()
    }

    pub fn alphabet_size(&self) -> usize {
        self.intensity_level_count() * self.time_levels * self.phase_levels
    }

    fn intensity_bits(&self) -> usize {
        self.intensity_levels.len().trailing_zeros() as usize
    }

    fn time_bits(&self) -> usize {
        self.time_levels.trailing_zeros() as usize
    }

    fn phase_bits(&self) -> usize {
        self.phase_levels.trailing_zeros() as usize
    }

    /// `φ_k = 2πk / L_φ`.
    pub fn phase_value(&self, level: usize) -> f64 {
        TAU * level as f64 / self.phase_levels as f64
    }

    /// `t_k = k·T / L_t` in bins of `grid`.
    pub fn time_bins(&self, level: usize, grid: &TimeGrid) -> Result<usize> {
        grid.slot_fraction_bins(level, self.time_levels)
    }

    /// Checks that every time level lands on the grid, that the largest
    /// delay keeps the late pulse inside S, and that μ_max ≤ n_f.
    pub fn validate_against(&self, grid: &TimeGrid, bounds: &IntensityBounds) -> Result<()> {
        let last = self.time_bins(self.time_levels - 1, grid)?;
        if grid.window_bins() + last >= grid.n_bins() {
            return Err(Error::Config(format!(
                "largest time level ({last} bins) pushes the late pulse out of the frame"
            )));
        }
        if self.max_intensity() > bounds.max {
            return Err(Error::Config(format!(
                "top intensity level {} exceeds n_f = {}",
                self.max_intensity(),
                bounds.max
            )));
        }
        Ok(())
    }

    /// Every symbol of the alphabet in bit order.
    pub fn alphabet(&self) -> impl Iterator<Item = CompactSymbol> + '_ {
        (0..self.alphabet_size()).map(move |code| {
            let phase = code % self.phase_levels;
            let time = (code / self.phase_levels) % self.time_levels;
            let intensity = code / (self.phase_levels * self.time_levels);
            CompactSymbol { intensity, time, phase }
        })
    }
}

/// One codeword: a level index per property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompactSymbol {
    pub intensity: usize,
    pub time: usize,
    pub phase: usize,
}

impl CompactSymbol {
    pub fn new(intensity: usize, time: usize, phase: usize) -> Self {
        Self { intensity, time, phase }
    }

    fn check(&self, params: &CodecParams) -> Result<()> {
        for (value, count) in [
            (self.intensity, params.intensity_level_count()),
            (self.time, params.time_levels),
            (self.phase, params.phase_levels),
        ] {
            if value >= count {
                return Err(Error::OutOfRange { value, max: count - 1 });
            }
        }
        Ok(())
    }
}

fn read_field(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

fn write_field(value: usize, width: usize, out: &mut Vec<bool>) {
    for i in (0..width).rev() {
        out.push((value >> i) & 1 == 1);
    }
}

pub fn bits_to_symbol(bits: &[bool], params: &CodecParams) -> Result<CompactSymbol> {
    let expected = params.bits_per_symbol();
    if bits.len() != expected {
        return Err(Error::Framing { expected, got: bits.len() });
    }
    let (ib, tb) = (params.intensity_bits(), params.time_bits());
    Ok(CompactSymbol {
        intensity: read_field(&bits[..ib]),
        time: read_field(&bits[ib..ib + tb]),
        phase: read_field(&bits[ib + tb..]),
    })
}

pub fn symbol_to_bits(sym: &CompactSymbol, params: &CodecParams) -> Result<Vec<bool>> {
    sym.check(params)?;
    let mut out = Vec::with_capacity(params.bits_per_symbol());
    write_field(sym.intensity, params.intensity_bits(), &mut out);
    write_field(sym.time, params.time_bits(), &mut out);
    write_field(sym.phase, params.phase_bits(), &mut out);
    Ok(out)
}

/// Splits a bit string into symbols. The length must be a multiple of the
/// symbol width.
pub fn bits_to_symbols(bits: &[bool], params: &CodecParams) -> Result<Vec<CompactSymbol>> {
    let width = params.bits_per_symbol();
    if !bits.len().is_multiple_of(width) {
        return Err(Error::Framing { expected: bits.len().div_ceil(width) * width, got: bits.len() });
    }
    bits.chunks(width).map(|c| bits_to_symbol(c, params)).collect()
}

/// Encoder output `√(μ/2)·(a₀ + e^{iφ} a_{Δ+t})`.
pub fn encode_symbol(sym: &CompactSymbol, params: &CodecParams, grid: &TimeGrid) -> Result<PulseTrain> {
    sym.check(params)?;
    let half = (params.intensity_levels[sym.intensity] / 2.0).sqrt();
    let late_bin = grid.window_bins() + params.time_bins(sym.time, grid)?;
    if late_bin >= grid.n_bins() {
        return Err(Error::Config(format!("time level {} is off the frame", sym.time)));
    }
    pulse::make_pulse_pair(
        *grid,
        Complex64::new(half, 0.0),
        Complex64::from_polar(half, params.phase_value(sym.phase)),
        late_bin,
    )
}

/// Maximum-likelihood boundaries between Poisson(μ_a) and Poisson(μ_b) for
/// adjacent levels: `(μ_b − μ_a) / ln(μ_b / μ_a)`.
pub fn ml_thresholds(levels: &[f64]) -> Result<Vec<f64>> {
    levels
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            if b.partial_cmp(&a) != Some(std::cmp::Ordering::Greater) || a <= 0.0 {
                return Err(Error::Config(format!(
                    "intensity levels must be positive and strictly increasing, got {a} then {b}"
                )));
            }
            Ok((b - a) / (b / a).ln())
        })
        .collect()
}

/// Count thresholds for the codec's nominal levels with no loss and no
/// background. Counts at or above a threshold classify upward.
pub fn intensity_thresholds(params: &CodecParams) -> Result<Vec<f64>> {
    ml_thresholds(&params.intensity_levels)
}

/// What the receiver knows about the path its light took, used to map
/// total counts back to an intensity level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeContext {
    /// Known transmittance between encoder and detectors.
    pub gain: f64,
    /// Expected signal counts on top of the message, already scaled by
    /// `gain` (the single-stage protocol removes its intensity
    /// transform here instead of optically).
    pub count_offset: f64,
    /// Dark counts per bin per detector.
    pub dark_rate: f64,
}

impl Default for DecodeContext {
    fn default() -> Self {
        Self { gain: 1.0, count_offset: 0.0, dark_rate: 0.0 }
    }
}

impl DecodeContext {
    pub fn with_dark_rate(dark_rate: f64) -> Self {
        Self { dark_rate, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeDiagnostics {
    pub matched_branch: usize,
    /// Fraction of each branch's counts that sit in its modal bin.
    pub concentrations: Vec<f64>,
    pub modal_bins: Vec<usize>,
    /// Plus and minus port counts of the in-phase bank at the matched
    /// branch's modal bin.
    pub bright: f64,
    pub dark: f64,
    pub total_counts: f64,
    /// Total counts with background removed and loss undone, in units of
    /// mean photons at the encoder.
    pub corrected_intensity: f64,
    pub branch_tie: bool,
    pub erasure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoded {
    /// `None` on an erasure.
    pub symbol: Option<CompactSymbol>,
    pub diagnostics: DecodeDiagnostics,
    pub record: DetectionRecord,
}

const TIE_TOLERANCE: f64 = 1e-9;

/// Runs the decoder bank on `train` and applies the decision logic.
pub fn decode<R: Rng + ?Sized>(
    train: &PulseTrain,
    params: &CodecParams,
    ctx: &DecodeContext,
    mode: DetectionMode,
    rng: &mut R,
) -> Result<Decoded> {
    let record = detect_bank(train, params, ctx.dark_rate, mode, rng)?;
    let n_bins = record.detectors.first().map_or(0, |d| d.counts.len());
    let detectors_per_branch = if params.phase_levels == 2 { 2 } else { 4 };

    let mut concentrations = Vec::with_capacity(params.time_levels);
    let mut modal_bins = Vec::with_capacity(params.time_levels);
    for branch in record.detectors.chunks(detectors_per_branch) {
        let per_bin: Vec<f64> = (0..n_bins).map(|b| branch.iter().map(|d| d.counts[b]).sum()).collect();
        let total: f64 = per_bin.iter().sum();
        let (modal, peak) =
            per_bin
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (b, &v)| if v > best.1 { (b, v) } else { best });
        modal_bins.push(modal);
        concentrations.push(if total > 0.0 { peak / total } else { 0.0 });
    }

    let best = concentrations.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let candidates: Vec<usize> =
        concentrations.iter().enumerate().filter(|(_, &c)| best - c <= TIE_TOLERANCE).map(|(k, _)| k).collect();
    let matched = candidates[0];
    let modal = modal_bins[matched];

    let at = |bank: Bank, port: Port| record.get(DetectorId::new(matched, bank, port)).map_or(0.0, |d| d.counts[modal]);
    let bright = at(Bank::InPhase, Port::Plus);
    let dark = at(Bank::InPhase, Port::Minus);
    let phase = if params.phase_levels == 2 {
        usize::from(dark > bright)
    } else {
        let in_phase = bright - dark;
        let quadrature = at(Bank::Quadrature, Port::Plus) - at(Bank::Quadrature, Port::Minus);
        let angle = quadrature.atan2(in_phase).rem_euclid(TAU);
        let step = TAU / params.phase_levels as f64;
        (angle / step).round() as usize % params.phase_levels
    };

    let total_counts = record.total();
    let background = ctx.dark_rate * (n_bins * record.detectors.len()) as f64;
    let corrected_intensity = (total_counts - background - ctx.count_offset) / ctx.gain;
    let expected: Vec<f64> =
        params.intensity_levels.iter().map(|mu| ctx.gain * mu + ctx.count_offset + background).collect();
    let intensity = classify_counts(total_counts, &expected)?;

    let erasure = total_counts <= 0.0;
    let diagnostics = DecodeDiagnostics {
        matched_branch: matched,
        concentrations,
        modal_bins,
        bright,
        dark,
        total_counts,
        corrected_intensity,
        branch_tie: candidates.len() > 1,
        erasure,
    };
    let symbol = (!erasure).then_some(CompactSymbol { intensity, time: matched, phase });
    Ok(Decoded { symbol, diagnostics, record })
}

/// Level index for `counts` given the expected counts of each level.
/// Levels whose expectation is not positive are merged into the lowest.
fn classify_counts(counts: f64, expected: &[f64]) -> Result<usize> {
    let mut level = 0;
    for (k, w) in expected.windows(2).enumerate() {
        let threshold = if w[0] <= 0.0 {
            // Poisson(0) never yields a count, so any count favours w[1].
            f64::MIN_POSITIVE
        } else {
            ml_thresholds(w)?[0]
        };
        if counts >= threshold {
            level = k + 1;
        }
    }
    Ok(level)
}

/// Splits `train` across the branch bank and detects every port.
/// Detectors are ordered by branch, then bank, then port.
fn detect_bank<R: Rng + ?Sized>(
    train: &PulseTrain,
    params: &CodecParams,
    dark_rate: f64,
    mode: DetectionMode,
    rng: &mut R,
) -> Result<DetectionRecord> {
    let grid = *train.grid();
    // Room for the delayed late pulse of the passive variant.
    let padded = train.padded(2 * grid.n_bins());
    let branch_share = 1.0 / params.time_levels as f64;
    let mut record = DetectionRecord::new(mode);

    for k in 0..params.time_levels {
        let branch = pulse::attenuate(&padded, branch_share)?;
        let delay = (grid.window_bins() + params.time_bins(k, &grid)?) as isize;
        let (delayed_arm, direct_arm) = if params.passive_splitter {
            let (a, b) = pulse::combine_50_50(&branch, &PulseTrain::vacuum(*branch.grid()))?;
            (pulse::shift_frame(&a, delay)?, b)
        } else {
            let (early, late) = pulse::gated_route(&branch, grid.boundary());
            (pulse::shift_frame(&early, delay)?, late)
        };

        if params.phase_levels == 2 {
            let (plus, minus) = pulse::combine_50_50(&delayed_arm, &direct_arm)?;
            for (port, out) in [(Port::Plus, &plus), (Port::Minus, &minus)] {
                record.merge(pulse::detect(out, DetectorId::new(k, Bank::InPhase, port), mode, dark_rate, rng));
            }
        } else {
            // Each arm feeds both banks through a 50/50 split.
            let (d, s) = (delayed_arm.scaled(FRAC_1_SQRT_2), direct_arm.scaled(FRAC_1_SQRT_2));
            let (ip, im) = pulse::combine_50_50(&d, &s)?;
            let (qp, qm) = pulse::combine_50_50(&d.rotate(PI / 2.0), &s)?;
            for (bank, port, out) in [
                (Bank::InPhase, Port::Plus, &ip),
                (Bank::InPhase, Port::Minus, &im),
                (Bank::Quadrature, Port::Plus, &qp),
                (Bank::Quadrature, Port::Minus, &qm),
            ] {
                record.merge(pulse::detect(out, DetectorId::new(k, bank, port), mode, dark_rate, rng));
            }
        }
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().filter(|c| *c != '_').map(|c| c == '1').collect()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(1)
    }

    fn run(train: &PulseTrain, params: &CodecParams) -> Decoded {
        decode(train, params, &DecodeContext::default(), DetectionMode::Deterministic, &mut rng()).unwrap()
    }

    #[test]
    fn table_rows() {
        let p = CodecParams::binary(4.0, 16.0).unwrap();
        assert_eq!(bits_to_symbol(&bits("000"), &p).unwrap(), CompactSymbol::new(0, 0, 0));
        assert_eq!(bits_to_symbol(&bits("011"), &p).unwrap(), CompactSymbol::new(0, 1, 1));
        assert_eq!(bits_to_symbol(&bits("111"), &p).unwrap(), CompactSymbol::new(1, 1, 1));
        assert_eq!(symbol_to_bits(&CompactSymbol::new(1, 0, 0), &p).unwrap(), bits("100"));
        for (code, sym) in p.alphabet().enumerate() {
            let b = symbol_to_bits(&sym, &p).unwrap();
            assert_eq!(read_field(&b), code);
            assert_eq!(bits_to_symbol(&b, &p).unwrap(), sym);
        }
    }

    #[test]
    fn framing_and_range_errors() {
        let p = CodecParams::binary(4.0, 16.0).unwrap();
        assert!(matches!(bits_to_symbol(&bits("01"), &p), Err(Error::Framing { expected: 3, got: 2 })));
        assert!(matches!(
            symbol_to_bits(&CompactSymbol::new(2, 0, 0), &p),
            Err(Error::OutOfRange { value: 2, max: 1 })
        ));
        assert!(bits_to_symbols(&bits("0101"), &p).is_err());
        assert_eq!(bits_to_symbols(&bits("010111"), &p).unwrap().len(), 2);
    }

    #[test]
    fn four_level_field_split() {
        let p = CodecParams::new(vec![1.0, 2.0, 4.0, 8.0], 4, 4).unwrap();
        assert_eq!(p.bits_per_symbol(), 6);
        assert_eq!(symbol_to_bits(&CompactSymbol::new(3, 2, 1), &p).unwrap(), bits("11_10_01"));
        // Exhaustive: every 6-bit group is hit exactly once.
        let mut seen = std::collections::HashSet::new();
        for i in 0..4 {
            for t in 0..4 {
                for ph in 0..4 {
                    let b = symbol_to_bits(&CompactSymbol::new(i, t, ph), &p).unwrap();
                    assert_eq!(read_field(&b), (i << 4) | (t << 2) | ph);
                    assert!(seen.insert(b));
                }
            }
        }
        assert_eq!(seen.len(), 64);
    }

    #[test]
    fn bijection_up_to_eight_levels() {
        for li in [2usize, 4, 8] {
            for lt in [2usize, 4, 8] {
                for lp in [2usize, 4, 8] {
                    let levels = (1..=li).map(|k| k as f64 * 3.0).collect();
                    let p = CodecParams::new(levels, lt, lp).unwrap();
                    assert_eq!(p.bits_per_symbol(), (li * lt * lp).trailing_zeros() as usize);
                    for sym in p.alphabet() {
                        let b = symbol_to_bits(&sym, &p).unwrap();
                        assert_eq!(bits_to_symbol(&b, &p).unwrap(), sym);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_level_counts() {
        assert!(CodecParams::new(vec![1.0, 2.0, 3.0], 2, 2).is_err());
        assert!(CodecParams::new(vec![1.0, 2.0], 1, 2).is_err());
        assert!(CodecParams::new(vec![1.0, 2.0], 2, 6).is_err());
        assert!(CodecParams::new(vec![0.0, 2.0], 2, 2).is_err());
    }

    #[test]
    fn encoder_examples() {
        let g = TimeGrid::default();
        let p = CodecParams::binary(4.0, 16.0).unwrap();
        let s2 = 2f64.sqrt();

        let t = encode_symbol(&CompactSymbol::new(0, 0, 0), &p, &g).unwrap();
        assert_eq!(t.occupied_bins().collect::<Vec<_>>(), vec![0, 8]);
        assert!((t.amplitude(0) - Complex64::new(s2, 0.0)).norm() < 1e-15);
        assert!((t.amplitude(8) - Complex64::new(s2, 0.0)).norm() < 1e-15);

        let t = encode_symbol(&CompactSymbol::new(0, 0, 1), &p, &g).unwrap();
        assert!((t.amplitude(8) - Complex64::new(-s2, 0.0)).norm() < 1e-15);

        let t = encode_symbol(&CompactSymbol::new(1, 1, 0), &p, &g).unwrap();
        assert_eq!(t.occupied_bins().collect::<Vec<_>>(), vec![0, 10]);
        assert!((t.amplitude(10).norm() - 8f64.sqrt()).abs() < 1e-15);
        assert!((t.total_mean_photons() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn off_grid_time_levels_are_rejected() {
        let g = TimeGrid::new(2, 2).unwrap();
        let p = CodecParams::new(vec![4.0, 16.0], 4, 2).unwrap();
        assert!(matches!(encode_symbol(&CompactSymbol::new(0, 1, 0), &p, &g), Err(Error::Config(_))));
        assert!(p.validate_against(&g, &IntensityBounds::unbounded()).is_err());
    }

    #[test]
    fn noiseless_round_trip_binary_and_quaternary() {
        let g = TimeGrid::default();
        let binary = CodecParams::binary(4.0, 16.0).unwrap();
        let quaternary = CodecParams::new(vec![4.0, 12.0, 30.0, 60.0], 4, 4).unwrap();
        for p in [&binary, &quaternary, &binary.clone().with_passive_splitter(true)] {
            for sym in p.alphabet() {
                let d = run(&encode_symbol(&sym, p, &g).unwrap(), p);
                assert_eq!(d.symbol, Some(sym), "{p:?}");
                assert!(!d.diagnostics.branch_tie);
            }
        }
    }

    #[test]
    fn matched_branch_dark_port_is_empty() {
        let g = TimeGrid::default();
        let p = CodecParams::binary(4.0, 16.0).unwrap();
        let d = run(&encode_symbol(&CompactSymbol::new(1, 0, 0), &p, &g).unwrap(), &p);
        assert_eq!(d.diagnostics.dark, 0.0);
        assert!((d.diagnostics.bright - 8.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_branch_splits_across_two_bins() {
        let g = TimeGrid::default();
        let p = CodecParams::binary(4.0, 16.0).unwrap();
        let d = run(&encode_symbol(&CompactSymbol::new(0, 1, 0), &p, &g).unwrap(), &p);
        assert!((d.diagnostics.concentrations[0] - 0.5).abs() < 1e-12);
        assert!((d.diagnostics.concentrations[1] - 1.0).abs() < 1e-12);
        assert_eq!(d.diagnostics.matched_branch, 1);
    }

    #[test]
    fn interference_identity() {
        let g = TimeGrid::default();
        let p = CodecParams::binary(4.0, 16.0).unwrap();
        let a = Complex64::new(3.0, 0.0);
        for k in 0..16 {
            let phi = TAU * k as f64 / 16.0;
            let train = pulse::make_pulse_pair(g, a, a * Complex64::from_polar(1.0, phi), 8).unwrap();
            let d = run(&train, &p);
            let sum = d.diagnostics.bright + d.diagnostics.dark;
            assert!((d.diagnostics.bright - sum * (1.0 + phi.cos()) / 2.0).abs() < 1e-12);
            assert!((d.diagnostics.dark - sum * (1.0 - phi.cos()) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_accounting() {
        let g = TimeGrid::default();
        for p in [CodecParams::binary(4.0, 16.0).unwrap(), CodecParams::new(vec![4.0, 12.0, 30.0, 60.0], 4, 4).unwrap()]
        {
            for sym in p.alphabet() {
                let d = run(&encode_symbol(&sym, &p, &g).unwrap(), &p);
                let mu = p.intensity_levels()[sym.intensity];
                assert!((d.record.total() - mu).abs() < 1e-12 * mu);
            }
        }
    }

    #[test]
    fn thresholds_match_brute_force_likelihood() {
        let p = CodecParams::binary(4.0, 16.0).unwrap();
        let t = intensity_thresholds(&p).unwrap();
        assert!((t[0] - 12.0 / 4f64.ln()).abs() < 1e-12);
        assert!((t[0] - 8.656).abs() < 1e-3);
        // log Poisson pmf without the common n! term.
        let loglik = |mu: f64, n: f64| n * mu.ln() - mu;
        assert!(loglik(4.0, 8.0) > loglik(16.0, 8.0));
        assert!(loglik(16.0, 9.0) > loglik(4.0, 9.0));
        assert!(ml_thresholds(&[5.0, 5.0]).is_err());
        assert!(CodecParams::binary(5.0, 5.0).is_err());
    }

    #[test]
    fn expectations_classify_to_their_own_level() {
        let levels = vec![2.0, 5.0, 11.0, 40.0];
        for (i, &mu) in levels.iter().enumerate() {
            assert_eq!(classify_counts(mu, &levels).unwrap(), i);
        }
    }

    #[test]
    fn vacuum_is_an_erasure() {
        let g = TimeGrid::default();
        let p = CodecParams::binary(4.0, 16.0).unwrap();
        let d = decode(&PulseTrain::vacuum(g), &p, &DecodeContext::default(), DetectionMode::Stochastic, &mut rng())
            .unwrap();
        assert!(d.diagnostics.erasure);
        assert_eq!(d.symbol, None);
    }

    #[test]
    fn gain_and_offset_correction() {
        let g = TimeGrid::default();
        let p = CodecParams::binary(4.0, 16.0).unwrap();
        let sym = CompactSymbol::new(1, 1, 1);
        // 16 photons plus a 20-photon transform, through a 25% channel.
        let sent =
            pulse::intensity_shift(&encode_symbol(&sym, &p, &g).unwrap(), 20.0, IntensityBounds::unbounded()).unwrap();
        let received = pulse::attenuate(&sent, 0.25).unwrap();
        let ctx = DecodeContext { gain: 0.25, count_offset: 0.25 * 20.0, dark_rate: 0.01 };
        let d = decode(&received, &p, &ctx, DetectionMode::Deterministic, &mut rng()).unwrap();
        assert_eq!(d.symbol, Some(sym));
        assert!((d.diagnostics.corrected_intensity - 16.0).abs() < 1e-9);
    }
}
