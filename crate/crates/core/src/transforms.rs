//! Secret transforms: an intensity shift, a delay of the late pulse and a
//! phase pair on (P1, P2).
//!
//! All three act on disjoint degrees of freedom, so the transforms form an
//! abelian group under [`compose`]. Phases are kept as fixed-point fractions
//! of a turn so that composition and inversion are exact, not just exact up
//! to rounding.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulse::{self, IntensityBounds, PulseTrain, TimeGrid, Window};

/// A phase as a fraction of a full turn, in units of 2π / 2⁶⁴.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Phase(pub u64);

impl Phase {
    pub const ZERO: Phase = Phase(0);

    /// Wraps any finite angle into the turn.
    pub fn from_radians(radians: f64) -> Self {
        let turns = (radians / TAU).rem_euclid(1.0);
        // 2⁶⁴ · turns, rounded; a value that rounds up to a full turn wraps to 0.
        let scaled = (turns * 18_446_744_073_709_551_616.0).round();
        if scaled >= 18_446_744_073_709_551_616.0 {
            Phase(0)
        } else {
            Phase(scaled as u64)
        }
    }

    /// `k / levels` of a turn; exact for power-of-two `levels`.
    pub fn from_level(k: usize, levels: usize) -> Self {
        debug_assert!(levels.is_power_of_two());
        let shift = 64 - levels.trailing_zeros();
        if shift == 64 {
            return Phase(0);
        }
        Phase(((k % levels) as u64) << shift)
    }

    /// Angle in `[0, 2π)`.
    pub fn radians(self) -> f64 {
        self.0 as f64 / 18_446_744_073_709_551_616.0 * TAU
    }
}

impl std::ops::Add for Phase {
    type Output = Phase;

    fn add(self, other: Phase) -> Phase {
        Phase(self.0.wrapping_add(other.0))
    }
}

impl std::ops::Neg for Phase {
    type Output = Phase;

    fn neg(self) -> Phase {
        Phase(self.0.wrapping_neg())
    }
}

/// `(ΔN, D, (α, β))`: mean-photon shift, delay of the S window in bins, and
/// phases on the F and S windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecretTransform {
    pub intensity_shift: f64,
    pub delay_bins: isize,
    pub phase_first: Phase,
    pub phase_second: Phase,
}

impl Default for SecretTransform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl SecretTransform {
    pub const IDENTITY: SecretTransform =
        SecretTransform { intensity_shift: 0.0, delay_bins: 0, phase_first: Phase::ZERO, phase_second: Phase::ZERO };

    pub fn intensity(shift: f64) -> Self {
        Self { intensity_shift: shift, ..Self::IDENTITY }
    }

    pub fn delay(bins: isize) -> Self {
        Self { delay_bins: bins, ..Self::IDENTITY }
    }

    pub fn phases(first: Phase, second: Phase) -> Self {
        Self { phase_first: first, phase_second: second, ..Self::IDENTITY }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }
}

/// Component-wise sum; phases wrap.
pub fn compose(a: &SecretTransform, b: &SecretTransform) -> SecretTransform {
    SecretTransform {
        intensity_shift: a.intensity_shift + b.intensity_shift,
        delay_bins: a.delay_bins + b.delay_bins,
        phase_first: a.phase_first + b.phase_first,
        phase_second: a.phase_second + b.phase_second,
    }
}

pub fn invert(t: &SecretTransform) -> SecretTransform {
    SecretTransform {
        intensity_shift: -t.intensity_shift,
        delay_bins: -t.delay_bins,
        phase_first: -t.phase_first,
        phase_second: -t.phase_second,
    }
}

/// Intensity shift, then the S-window delay, then the two window phases.
/// The primitives commute, so the order is only a convention.
pub fn apply_transform(train: &PulseTrain, t: &SecretTransform, bounds: IntensityBounds) -> Result<PulseTrain> {
    let shifted = pulse::intensity_shift(train, t.intensity_shift, bounds)?;
    let delayed = pulse::delay_window(&shifted, Window::Second, t.delay_bins)?;
    let p1 = pulse::phase_shift_window(&delayed, Window::First, t.phase_first.radians());
    Ok(pulse::phase_shift_window(&p1, Window::Second, t.phase_second.radians()))
}

/// Sampling sets for random transforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformPolicy {
    /// ΔN is uniform on the integers `0..=intensity_max`.
    pub intensity_max: u32,
    /// D is uniform on these bin offsets.
    pub delay_bins: Vec<usize>,
    /// `None`: α and β uniform on the circle. `Some(L)`: uniform on the L-th
    /// roots of unity (`Some(1)` pins them to zero).
    pub phase_levels: Option<u32>,
}

impl TransformPolicy {
    /// `D ∈ {0, T/4, T/2}` on `grid` (dropping T/4 when it falls between
    /// bins), continuous phases, and ΔN up to `intensity_max`.
    pub fn default_for(grid: &TimeGrid, intensity_max: u32) -> Self {
        let delay_bins =
            [(0, 4), (1, 4), (1, 2)].iter().filter_map(|&(n, d)| grid.slot_fraction_bins(n, d).ok()).collect();
        Self { intensity_max, delay_bins, phase_levels: None }
    }

    /// Every draw is the identity.
    pub fn identity() -> Self {
        Self { intensity_max: 0, delay_bins: vec![0], phase_levels: Some(1) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.delay_bins.is_empty() {
            return Err(Error::Config("transform delay set is empty".into()));
        }
        match self.phase_levels {
            Some(0) => Err(Error::Config("transform phase set is empty".into())),
            Some(l) if !l.is_power_of_two() => {
                Err(Error::Config(format!("transform phase levels must be a power of two, got {l}")))
            }
            _ => Ok(()),
        }
    }

    /// Largest delay a single draw can add.
    pub fn max_delay(&self) -> usize {
        self.delay_bins.iter().copied().max().unwrap_or(0)
    }

    fn sample_phase<R: Rng + ?Sized>(&self, rng: &mut R) -> Phase {
        match self.phase_levels {
            None => Phase(rng.random()),
            Some(l) => Phase::from_level(rng.random_range(0..l as usize), l as usize),
        }
    }
}

pub fn sample_transform<R: Rng + ?Sized>(rng: &mut R, policy: &TransformPolicy) -> Result<SecretTransform> {
    policy.validate()?;
    let intensity_shift = rng.random_range(0..=policy.intensity_max) as f64;
    let delay_bins = policy.delay_bins[rng.random_range(0..policy.delay_bins.len())] as isize;
    let phase_first = policy.sample_phase(rng);
    let phase_second = policy.sample_phase(rng);
    Ok(SecretTransform { intensity_shift, delay_bins, phase_first, phase_second })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseRole {
    Early,
    Late,
}

/// One pulse found outside the window it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowOffender {
    pub bin: usize,
    pub role: PulseRole,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowReport {
    pub offenders: Vec<WindowOffender>,
}

impl WindowReport {
    pub fn is_ok(&self) -> bool {
        self.offenders.is_empty()
    }
}

/// Checks a train against the frame of `grid`: the first occupied bin is
/// the early pulse and must sit in F; every later occupied bin belongs to
/// the late pulse and must sit in S. The train may live on a longer axis
/// than `grid`, which is how overruns past the frame end show up.
pub fn validate_windows(train: &PulseTrain, grid: &TimeGrid) -> WindowReport {
    let first = grid.window_range(Window::First);
    let second = grid.window_range(Window::Second);
    let mut offenders = Vec::new();
    for (i, bin) in train.occupied_bins().enumerate() {
        let (role, ok) =
            if i == 0 { (PulseRole::Early, first.contains(&bin)) } else { (PulseRole::Late, second.contains(&bin)) };
        if !ok {
            offenders.push(WindowOffender { bin, role });
        }
    }
    WindowReport { offenders }
}
