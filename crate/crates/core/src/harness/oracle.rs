//! Cross-check of the amplitude engine against the truncated Fock space.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fock;
use crate::pulse::{self, Bank, DetectionMode, DetectorId, Port, PulseTrain, TimeGrid};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub seed: u64,
    /// Single-bin amplitudes whose count histograms are checked.
    pub amplitudes: Vec<Complex64>,
    pub samples: usize,
    pub cutoff: usize,
    /// `(α, β)` pairs for `D(β)|α⟩ = |α + β⟩`.
    pub displacements: Vec<(Complex64, Complex64)>,
    pub tv_tolerance: f64,
    pub fidelity_tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        let c = Complex64::new;
        Self {
            seed: 0,
            amplitudes: vec![c(0.0, 0.0), c(0.5, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(0.0, 1.5), c(-1.0, 1.0)],
            samples: 100_000,
            cutoff: 40,
            displacements: vec![
                (c(0.0, 0.0), c(2.0, 0.0)),
                (c(1.0, 0.0), c(1.0, 0.0)),
                (c(1.0, 1.0), c(-0.5, 1.0)),
                (c(-2.0, 0.0), c(0.0, 2.0)),
                (c(0.3, -1.2), c(1.4, 1.4)),
            ],
            tv_tolerance: 0.01,
            fidelity_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramCheck {
    pub alpha: Complex64,
    pub samples: usize,
    pub tv_distance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementCheck {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub fidelity: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub histograms: Vec<HistogramCheck>,
    pub displacements: Vec<DisplacementCheck>,
    /// Largest deviation of `a a†|n⟩ = (n+1)|n⟩`, `a† a|n⟩ = n|n⟩` in units
    /// of machine epsilon times `n + 1`.
    pub ladder_max_error_ulps: f64,
    pub ladder_passed: bool,
    pub passed: bool,
}

/// Total-variation distance between sampled counts and a distribution on
/// `0..=cutoff`; counts above the cutoff and the oracle's leakage share an
/// overflow bin.
pub fn tv_distance(counts: &[u64], oracle: &[f64], leakage: f64) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let cutoff = oracle.len() - 1;
    let mut hist = vec![0.0; cutoff + 2];
    for (k, &c) in counts.iter().enumerate() {
        hist[k.min(cutoff + 1)] += c as f64 / n as f64;
    }
    let mut expected = oracle.to_vec();
    expected.push(leakage);
    0.5 * hist.iter().zip(&expected).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn histogram_check(alpha: Complex64, cfg: &OracleConfig, index: usize) -> Result<HistogramCheck> {
    let grid = TimeGrid::default();
    let mut amps = vec![Complex64::new(0.0, 0.0); grid.n_bins()];
    amps[0] = alpha;
    let train = PulseTrain::from_amplitudes(grid, amps)?;
    let id = DetectorId::new(0, Bank::InPhase, Port::Plus);
    let mut r = rng::stream("compact-coding/oracle", &[cfg.seed, index as u64]);
    let mut counts = vec![0u64; cfg.cutoff + 2];
    for _ in 0..cfg.samples {
        let record = pulse::detect(&train, id, DetectionMode::Stochastic, 0.0, &mut r);
        let k = record.detectors[0].counts[0] as usize;
        counts[k.min(cfg.cutoff + 1)] += 1;
    }
    let state = fock::coherent_state(alpha, cfg.cutoff)?;
    let tv = tv_distance(&counts, &fock::photon_number_distribution(&state), state.leakage());
    Ok(HistogramCheck { alpha, samples: cfg.samples, tv_distance: tv, passed: tv < cfg.tv_tolerance })
}

fn displacement_check(alpha: Complex64, beta: Complex64, cfg: &OracleConfig) -> Result<DisplacementCheck> {
    let start = fock::coherent_state(alpha, cfg.cutoff)?;
    let moved = fock::apply_displacement(&start, beta, 1.0)?;
    let target = fock::coherent_state(alpha + beta, cfg.cutoff)?;
    let fidelity = fock::fidelity(&moved, &target)?;
    Ok(DisplacementCheck { alpha, beta, fidelity, passed: fidelity > 1.0 - cfg.fidelity_tolerance })
}

/// Worst ladder identity error over `|0⟩ … |cutoff − 1⟩`.
fn ladder_error_ulps(cutoff: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for n in 0..cutoff {
        let v = fock::number_state(n, cutoff)?;
        let raise_lower = fock::apply_annihilation(&fock::apply_creation(&v));
        let lower_raise = fock::apply_creation(&fock::apply_annihilation(&v));
        let scale = f64::EPSILON * (n + 1) as f64;
        let err1 = raise_lower.max_abs_diff(&v.scaled(Complex64::new((n + 1) as f64, 0.0)));
        let err2 = lower_raise.max_abs_diff(&v.scaled(Complex64::new(n as f64, 0.0)));
        let leak = raise_lower.leakage() + lower_raise.leakage();
        worst = worst.max(err1 / scale).max(err2 / scale);
        if leak > 0.0 {
            worst = f64::INFINITY;
        }
    }
    Ok(worst)
}

pub fn cross_validate_oracle(cfg: &OracleConfig) -> Result<OracleReport> {
    let histograms =
        cfg.amplitudes.iter().enumerate().map(|(i, &a)| histogram_check(a, cfg, i)).collect::<Result<Vec<_>>>()?;
    let displacements =
        cfg.displacements.iter().map(|&(a, b)| displacement_check(a, b, cfg)).collect::<Result<Vec<_>>>()?;
    let ladder_max_error_ulps = ladder_error_ulps(cfg.cutoff)?;
    let ladder_passed = ladder_max_error_ulps <= 4.0;
    let passed = ladder_passed && histograms.iter().all(|h| h.passed) && displacements.iter().all(|d| d.passed);
    Ok(OracleReport { histograms, displacements, ladder_max_error_ulps, ladder_passed, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_histogram_is_exact() {
        let cfg = OracleConfig { amplitudes: vec![Complex64::new(0.0, 0.0)], samples: 1000, ..Default::default() };
        let report = cross_validate_oracle(&cfg).unwrap();
        assert_eq!(report.histograms[0].tv_distance, 0.0);
    }

    #[test]
    fn tv_of_identical_is_zero() {
        assert_eq!(tv_distance(&[1, 1, 0], &[0.5, 0.5], 0.0), 0.0);
        assert!((tv_distance(&[2, 0, 0], &[0.5, 0.5], 0.0) - 0.5).abs() < 1e-15);
        assert!((tv_distance(&[0, 0, 4], &[1.0, 0.0], 0.0) - 1.0).abs() < 1e-15);
    }
}
