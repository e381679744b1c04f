//! Coherent pulse trains on a quantized time grid.
//!
//! A train holds one complex coherent amplitude per bin (units of
//! √photons). Every optical element in scope is linear, so coherent inputs
//! stay coherent and the amplitude picture is exact; photon statistics only
//! appear at [`detect`].
//!
//! The frame is split into two equal windows. `First` (F) holds the early
//! pulse P1 and `Second` (S) holds the late pulse P2. Modulators act on one
//! window at a time, which is how the time delayer and phase modulator
//! address P1 and P2 separately.

use std::ops::Range;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Which half of the frame an operation addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Window {
    /// F: the early pulse window, `[0, Δ)`.
    First,
    /// S: the late pulse window, `[Δ, 2Δ)`.
    Second,
}

/// Quantized time axis. Bin 0 is the frame start; one slot `T` spans
/// `bins_per_slot` bins and each window spans `window_bins`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    bins_per_slot: usize,
    window_bins: usize,
    n_bins: usize,
}

impl Default for TimeGrid {
    /// `bin = T/4`, `Δ = 2T`.
    fn default() -> Self {
        Self::new(4, 2).expect("default grid is valid")
    }
}

impl TimeGrid {
    /// A frame of two windows of `window_slots · T` each.
    pub fn new(bins_per_slot: usize, window_slots: usize) -> Result<Self> {
        if bins_per_slot == 0 || !bins_per_slot.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "bins_per_slot must be a positive even number so T/2 lands on the grid, got {bins_per_slot}"
            )));
        }
        if window_slots == 0 {
            return Err(Error::Config("window_slots must be positive".into()));
        }
        let window_bins = bins_per_slot * window_slots;
        Ok(Self { bins_per_slot, window_bins, n_bins: 2 * window_bins })
    }

    pub fn bins_per_slot(&self) -> usize {
        self.bins_per_slot
    }

    /// Δ in bins; also the width of F and of S.
    pub fn window_bins(&self) -> usize {
        self.window_bins
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// First bin of the S window.
    pub fn boundary(&self) -> usize {
        self.window_bins
    }

    pub fn window_range(&self, window: Window) -> Range<usize> {
        match window {
            Window::First => 0..self.window_bins,
            Window::Second => self.window_bins..2 * self.window_bins,
        }
    }

    /// Converts `numerator/denominator · T` to bins, rejecting values that
    /// fall between bins.
    pub fn slot_fraction_bins(&self, numerator: usize, denominator: usize) -> Result<usize> {
        let scaled = numerator * self.bins_per_slot;
        if denominator == 0 || !scaled.is_multiple_of(denominator) {
            return Err(Error::Config(format!(
                "{numerator}/{denominator}·T is not on a grid of {} bins per slot",
                self.bins_per_slot
            )));
        }
        Ok(scaled / denominator)
    }

    /// Same bin width, longer axis. Used for receiver-internal delay lines
    /// whose outputs extend past the transmitted frame.
    pub fn extended(&self, n_bins: usize) -> Self {
        Self { n_bins: n_bins.max(self.n_bins), ..*self }
    }
}

/// Per-bin coherent amplitudes over one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseTrain {
    grid: TimeGrid,
    amplitudes: Vec<Complex64>,
}

/// Allowed mean-photon range `[n_i, n_f]` for intensity modulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityBounds {
    pub min: f64,
    pub max: f64,
}

impl IntensityBounds {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || min < 0.0 || min > max {
            return Err(Error::Config(format!("invalid intensity bounds [{min}, {max}]")));
        }
        Ok(Self { min, max })
    }

    pub fn unbounded() -> Self {
        Self { min: 0.0, max: f64::INFINITY }
    }

    fn contains(&self, n: f64) -> bool {
        // Rounding slack: shifts are summed from sampled integers and scaled
        // amplitudes, so exact endpoints can come back a few ulps off.
        let eps = 1e-9 * self.max.abs().clamp(1.0, 1e12);
        n >= self.min - eps && n <= self.max + eps
    }
}

impl PulseTrain {
    pub fn vacuum(grid: TimeGrid) -> Self {
        Self { grid, amplitudes: vec![ZERO; grid.n_bins()] }
    }

    /// Wraps raw amplitudes; length must equal the grid's bin count.
    pub fn from_amplitudes(grid: TimeGrid, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.n_bins() {
            return Err(Error::Shape(format!("{} amplitudes for a grid of {} bins", amplitudes.len(), grid.n_bins())));
        }
        Ok(Self { grid, amplitudes })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, bin: usize) -> Complex64 {
        self.amplitudes[bin]
    }

    /// `Σ |amp_b|²`.
    pub fn total_mean_photons(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn window_mean_photons(&self, window: Window) -> f64 {
        self.amplitudes[self.grid.window_range(window)].iter().map(|a| a.norm_sqr()).sum()
    }

    /// Indices of bins holding any amplitude.
    pub fn occupied_bins(&self) -> impl Iterator<Item = usize> + '_ {
        self.amplitudes.iter().enumerate().filter(|(_, a)| a.re != 0.0 || a.im != 0.0).map(|(b, _)| b)
    }

    pub fn max_abs_diff(&self, other: &PulseTrain) -> f64 {
        let n = self.amplitudes.len().max(other.amplitudes.len());
        (0..n)
            .map(|b| {
                let a = self.amplitudes.get(b).copied().unwrap_or(ZERO);
                let o = other.amplitudes.get(b).copied().unwrap_or(ZERO);
                (a - o).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Bin-wise sum of two trains on the same grid.
    pub fn superpose(&self, other: &PulseTrain) -> Result<PulseTrain> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            amplitudes: self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a + b).collect(),
        })
    }

    /// Multiplies every bin by a common phase.
    pub fn rotate(&self, phi: f64) -> PulseTrain {
        let factor = Complex64::from_polar(1.0, phi);
        self.map(|_, a| a * factor)
    }

    /// Multiplies every amplitude by a real factor.
    pub fn scaled(&self, factor: f64) -> PulseTrain {
        self.map(|_, a| a * factor)
    }

    /// Copies the train onto a longer axis with the same bin width.
    pub fn padded(&self, n_bins: usize) -> PulseTrain {
        let grid = self.grid.extended(n_bins);
        let mut amplitudes = self.amplitudes.clone();
        amplitudes.resize(grid.n_bins(), ZERO);
        Self { grid, amplitudes }
    }

    fn map(&self, f: impl Fn(usize, Complex64) -> Complex64) -> PulseTrain {
        Self { grid: self.grid, amplitudes: self.amplitudes.iter().enumerate().map(|(b, &a)| f(b, a)).collect() }
    }

    fn check_same_grid(&self, other: &PulseTrain) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Shape(format!("grid {:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }
}

/// Two pulses: `amp_early` at bin 0 and `amp_late` at `late_bin`.
pub fn make_pulse_pair(
    grid: TimeGrid,
    amp_early: Complex64,
    amp_late: Complex64,
    late_bin: usize,
) -> Result<PulseTrain> {
    if !grid.window_range(Window::Second).contains(&late_bin) {
        return Err(Error::WindowViolation { bin: late_bin as isize });
    }
    let mut train = PulseTrain::vacuum(grid);
    train.amplitudes[0] = amp_early;
    train.amplitudes[late_bin] = amp_late;
    Ok(train)
}

/// Multiplies every bin of `window` by `e^{iφ}`.
pub fn phase_shift_window(train: &PulseTrain, window: Window, phi: f64) -> PulseTrain {
    let range = train.grid.window_range(window);
    let factor = Complex64::from_polar(1.0, phi);
    train.map(|b, a| if range.contains(&b) { a * factor } else { a })
}

/// Shifts the content of `window` by `delta_bins`. Content must stay in
/// its window.
pub fn delay_window(train: &PulseTrain, window: Window, delta_bins: isize) -> Result<PulseTrain> {
    if delta_bins == 0 {
        return Ok(train.clone());
    }
    let range = train.grid.window_range(window);
    let mut out = train.clone();
    for b in range.clone() {
        out.amplitudes[b] = ZERO;
    }
    for b in range.clone() {
        let a = train.amplitudes[b];
        if a == ZERO {
            continue;
        }
        let target = b as isize + delta_bins;
        if target < range.start as isize || target >= range.end as isize {
            return Err(Error::WindowViolation { bin: target });
        }
        out.amplitudes[target as usize] = a;
    }
    Ok(out)
}

/// Shifts the whole train by `delta_bins` along the frame. This is the
/// clock re-reference after a delay on P1, and the receiver's fixed delay
/// lines; it ignores window boundaries but not the frame edges.
pub fn shift_frame(train: &PulseTrain, delta_bins: isize) -> Result<PulseTrain> {
    let n = train.amplitudes.len() as isize;
    let mut out = PulseTrain::vacuum(train.grid);
    for (b, &a) in train.amplitudes.iter().enumerate() {
        if a == ZERO {
            continue;
        }
        let target = b as isize + delta_bins;
        if target < 0 || target >= n {
            return Err(Error::WindowViolation { bin: target });
        }
        out.amplitudes[target as usize] = a;
    }
    Ok(out)
}

/// Changes the total mean photon number by `delta_n`, keeping every
/// per-bin phase.
pub fn intensity_shift(train: &PulseTrain, delta_n: f64, bounds: IntensityBounds) -> Result<PulseTrain> {
    if !delta_n.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite intensity shift {delta_n}")));
    }
    if delta_n == 0.0 {
        return Ok(train.clone());
    }
    let n = train.total_mean_photons();
    let target = n + delta_n;
    if !bounds.contains(target) || target < 0.0 {
        return Err(Error::IntensityRange { value: target, min: bounds.min, max: bounds.max });
    }
    if n == 0.0 {
        return Err(Error::UndefinedPhase);
    }
    let scale = (target / n).sqrt();
    Ok(train.map(|_, a| a * scale))
}

/// Loss: every amplitude times `√η`.
pub fn attenuate(train: &PulseTrain, eta: f64) -> Result<PulseTrain> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidInput(format!("transmittance {eta} outside [0, 1]")));
    }
    let scale = eta.sqrt();
    Ok(train.map(|_, a| a * scale))
}

/// Lossless 50/50 beam splitter: `((a + b)/√2, (a − b)/√2)`.
pub fn combine_50_50(a: &PulseTrain, b: &PulseTrain) -> Result<(PulseTrain, PulseTrain)> {
    a.check_same_grid(b)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = a.map(|i, x| (x + b.amplitudes[i]) * s);
    let minus = a.map(|i, x| (x - b.amplitudes[i]) * s);
    Ok((plus, minus))
}

/// Time-gated switch: bins before `boundary_bin` go to the first output,
/// the rest to the second.
pub fn gated_route(train: &PulseTrain, boundary_bin: usize) -> (PulseTrain, PulseTrain) {
    let early = train.map(|b, a| if b < boundary_bin { a } else { ZERO });
    let late = train.map(|b, a| if b >= boundary_bin { a } else { ZERO });
    (early, late)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionMode {
    /// Records expected counts `|amp|² + dark_rate`.
    Deterministic,
    /// Records Poisson samples with those means.
    Stochastic,
}

/// Which combiner in a decoder branch a detector sits behind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bank {
    /// Reference phase 0.
    InPhase,
    /// Reference phase π/2.
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Port {
    /// `(a + b)/√2`, the bright port for zero relative phase.
    Plus,
    /// `(a − b)/√2`.
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DetectorId {
    pub branch: usize,
    pub bank: Bank,
    pub port: Port,
}

impl DetectorId {
    pub fn new(branch: usize, bank: Bank, port: Port) -> Self {
        Self { branch, bank, port }
    }
}

/// Time-resolved counts for one detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorCounts {
    pub id: DetectorId,
    pub counts: Vec<f64>,
}

impl DetectorCounts {
    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

/// Counts per (detector, bin) from one decoding event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub mode: DetectionMode,
    pub detectors: Vec<DetectorCounts>,
}

impl DetectionRecord {
    pub fn new(mode: DetectionMode) -> Self {
        Self { mode, detectors: Vec::new() }
    }

    pub fn total(&self) -> f64 {
        self.detectors.iter().map(DetectorCounts::total).sum()
    }

    pub fn get(&self, id: DetectorId) -> Option<&DetectorCounts> {
        self.detectors.iter().find(|d| d.id == id)
    }

    /// Appends the detectors of `other`. Modes must agree.
    pub fn merge(&mut self, other: DetectionRecord) {
        debug_assert_eq!(self.mode, other.mode);
        self.detectors.extend(other.detectors);
    }
}

/// Photon counting on every bin of `train`. Dark counts enter here, per
/// bin, with mean `dark_rate`.
pub fn detect<R: Rng + ?Sized>(
    train: &PulseTrain,
    id: DetectorId,
    mode: DetectionMode,
    dark_rate: f64,
    rng: &mut R,
) -> DetectionRecord {
    let counts = train
        .amplitudes
        .iter()
        .map(|a| {
            let mean = a.norm_sqr() + dark_rate;
            match mode {
                DetectionMode::Deterministic => mean,
                DetectionMode::Stochastic => sample_poisson(mean, rng),
            }
        })
        .collect();
    DetectionRecord { mode, detectors: vec![DetectorCounts { id, counts }] }
}

/// Poisson sample; a zero mean yields zero without touching the stream.
pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng)
}
