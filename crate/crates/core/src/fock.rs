//! Truncated single-mode Fock space.
//!
//! This is the slow, exact reference for the ladder-operator and
//! coherent-state algebra. The pulse engine in [`crate::pulse`] works on
//! coherent amplitudes directly; everything here exists to check it.
//!
//! Every operation that can lose probability mass at the cutoff carries
//! the lost mass forward in [`FockVector::leakage`].

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Amplitudes `c_0..=c_cutoff` in the number basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    amplitudes: Vec<Complex64>,
    leakage: f64,
}

impl FockVector {
    pub fn zero(cutoff: usize) -> Self {
        Self { amplitudes: vec![Complex64::new(0.0, 0.0); cutoff + 1], leakage: 0.0 }
    }

    pub fn vacuum(cutoff: usize) -> Self {
        let mut v = Self::zero(cutoff);
        v.amplitudes[0] = Complex64::new(1.0, 0.0);
        v
    }

    /// Builds a vector from raw amplitudes. Fails on an empty slice.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Shape("a Fock vector needs at least one amplitude".into()));
        }
        if amplitudes.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite amplitude".into()));
        }
        Ok(Self { amplitudes, leakage: 0.0 })
    }

    pub fn cutoff(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, n: usize) -> Complex64 {
        self.amplitudes[n]
    }

    /// Probability mass lost to the cutoff by the operations that produced
    /// this vector.
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Rescales to unit norm. A zero vector is returned unchanged.
    pub fn normalized(&self) -> Self {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 {
            return self.clone();
        }
        Self { amplitudes: self.amplitudes.iter().map(|c| c / norm).collect(), leakage: self.leakage }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self { amplitudes: self.amplitudes.iter().map(|c| c * factor).collect(), leakage: self.leakage }
    }

    /// Largest coefficient-wise distance to `other`. Panics on a cutoff mismatch.
    pub fn max_abs_diff(&self, other: &FockVector) -> f64 {
        assert_eq!(self.cutoff(), other.cutoff(), "cutoff mismatch");
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// Default cutoff for a coherent amplitude: `max(40, ceil(|α|² + 10·sqrt(|α|² + 1)))`.
pub fn default_cutoff(alpha: Complex64) -> usize {
    let mean = alpha.norm_sqr();
    let tail = (mean + 10.0 * (mean + 1.0).sqrt()).ceil() as usize;
    tail.max(40)
}

/// `|n⟩` truncated at `cutoff`.
pub fn number_state(n: usize, cutoff: usize) -> Result<FockVector> {
    if n > cutoff {
        return Err(Error::OutOfRange { value: n, max: cutoff });
    }
    let mut v = FockVector::zero(cutoff);
    v.amplitudes[n] = Complex64::new(1.0, 0.0);
    Ok(v)
}

/// `a†`. The component pushed past the cutoff is dropped and its norm is
/// added to the leakage.
pub fn apply_creation(v: &FockVector) -> FockVector {
    let cutoff = v.cutoff();
    let mut out = FockVector::zero(cutoff);
    for n in 0..cutoff {
        out.amplitudes[n + 1] = v.amplitudes[n] * ((n + 1) as f64).sqrt();
    }
    let dropped = v.amplitudes[cutoff].norm_sqr() * (cutoff + 1) as f64;
    out.leakage = v.leakage + dropped;
    out
}

/// `a`.
pub fn apply_annihilation(v: &FockVector) -> FockVector {
    let cutoff = v.cutoff();
    let mut out = FockVector::zero(cutoff);
    for n in 1..=cutoff {
        out.amplitudes[n - 1] = v.amplitudes[n] * (n as f64).sqrt();
    }
    out.leakage = v.leakage;
    out
}

/// `|α⟩ = e^{-|α|²/2} Σ αⁿ/√(n!) |n⟩`, truncated. The Poisson tail beyond
/// the cutoff is reported as leakage.
pub fn coherent_state(alpha: Complex64, cutoff: usize) -> Result<FockVector> {
    if !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite coherent amplitude {alpha}")));
    }
    let mut v = FockVector::zero(cutoff);
    // Recurrence c_n = c_{n-1} · α / √n avoids overflowing n!.
    let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    v.amplitudes[0] = c;
    for n in 1..=cutoff {
        c = c * alpha / (n as f64).sqrt();
        v.amplitudes[n] = c;
    }
    v.leakage = (1.0 - v.norm_sqr()).max(0.0);
    Ok(v)
}

/// `P(n) = |c_n|²`.
pub fn photon_number_distribution(v: &FockVector) -> Vec<f64> {
    v.amplitudes.iter().map(|c| c.norm_sqr()).collect()
}

/// `⟨v|w⟩ = Σ conj(c_n) d_n`.
pub fn inner_product(v: &FockVector, w: &FockVector) -> Result<Complex64> {
    if v.cutoff() != w.cutoff() {
        return Err(Error::Shape(format!("cutoff {} vs {}", v.cutoff(), w.cutoff())));
    }
    Ok(v.amplitudes.iter().zip(&w.amplitudes).map(|(c, d)| c.conj() * d).sum())
}

/// `|⟨v|w⟩|²`.
pub fn fidelity(v: &FockVector, w: &FockVector) -> Result<f64> {
    Ok(inner_product(v, w)?.norm_sqr())
}

/// `D(β) = exp(β a† − β* a)` evaluated as a dense matrix exponential of the
/// truncated generator.
///
/// The truncated generator is anti-Hermitian, so the result is exactly
/// unitary on the truncated space and the norm cannot reveal truncation.
/// Leakage is instead measured as the population left in the top level,
/// which is where the boundary error of the truncated ladder enters.
pub fn apply_displacement(v: &FockVector, beta: Complex64, leakage_bound: f64) -> Result<FockVector> {
    if !beta.re.is_finite() || !beta.im.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite displacement {beta}")));
    }
    let dim = v.cutoff() + 1;
    let generator = displacement_generator(beta, dim);
    let unitary = generator.exp();
    let amplitudes = unitary.mul_vec(&v.amplitudes);
    let boundary = amplitudes[dim - 1].norm_sqr();
    let leakage = v.leakage + boundary;
    if leakage > leakage_bound {
        return Err(Error::Truncation { leakage, bound: leakage_bound });
    }
    Ok(FockVector { amplitudes, leakage })
}

fn displacement_generator(beta: Complex64, dim: usize) -> DenseMatrix {
    let mut g = DenseMatrix::zeros(dim);
    for n in 0..dim - 1 {
        let s = ((n + 1) as f64).sqrt();
        // β a†: |n⟩ → √(n+1)|n+1⟩
        g[(n + 1, n)] = beta * s;
        // −β* a: |n+1⟩ → √(n+1)|n⟩
        g[(n, n + 1)] = -beta.conj() * s;
    }
    g
}

/// Row-major square complex matrix, just enough for the displacement oracle.
#[derive(Debug, Clone)]
struct DenseMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.dim + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }
}

impl DenseMatrix {
    fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    fn one_norm(&self) -> f64 {
        (0..self.dim).map(|c| (0..self.dim).map(|r| self[(r, c)].norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    fn scale(&self, k: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|x| x * k).collect() }
    }

    fn add(&self, other: &Self) -> Self {
        Self { dim: self.dim, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    fn mul(&self, other: &Self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim).map(|r| (0..self.dim).map(|c| self[(r, c)] * v[c]).sum()).collect()
    }

    /// Scaling and squaring with a Taylor kernel: scale until the norm is
    /// below 1/2, sum the series to machine precision, square back.
    fn exp(&self) -> Self {
        let norm = self.one_norm();
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let scaled = self.scale(1.0 / f64::powi(2.0, squarings as i32));

        let mut result = Self::identity(self.dim);
        let mut term = Self::identity(self.dim);
        for k in 1..=30 {
            term = term.mul(&scaled).scale(1.0 / k as f64);
            result = result.add(&term);
            if term.one_norm() < 1e-18 {
                break;
            }
        }
        for _ in 0..squarings {
            result = result.mul(&result);
        }
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn number_state_basis() {
        let v = number_state(0, 5).unwrap();
        assert_eq!(v.amplitudes().len(), 6);
        assert_eq!(v.amplitude(0), c(1.0, 0.0));
        assert!(v.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));

        let v3 = number_state(3, 5).unwrap();
        assert_eq!(v3.amplitude(3), c(1.0, 0.0));
        assert_eq!(v3.norm_sqr(), 1.0);
    }

    #[test]
    fn number_state_out_of_range() {
        assert!(matches!(number_state(6, 5), Err(Error::OutOfRange { value: 6, max: 5 })));
    }

    #[test]
    fn orthonormal_basis_is_exact() {
        let cutoff = 12;
        for m in 0..=cutoff {
            for n in 0..=cutoff {
                let ip = inner_product(&number_state(m, cutoff).unwrap(), &number_state(n, cutoff).unwrap()).unwrap();
                let expected = if m == n { 1.0 } else { 0.0 };
                assert_eq!(ip, c(expected, 0.0));
            }
        }
    }

    #[test]
    fn creation_examples() {
        let one = apply_creation(&FockVector::vacuum(5));
        assert_eq!(one, number_state(1, 5).unwrap());

        let v = apply_creation(&number_state(2, 5).unwrap());
        assert_eq!(v.amplitude(3), c(3f64.sqrt(), 0.0));
        assert_eq!(v.leakage(), 0.0);
    }

    #[test]
    fn creation_at_cutoff_reports_leakage() {
        let v = apply_creation(&number_state(5, 5).unwrap());
        assert_eq!(v.norm_sqr(), 0.0);
        assert_eq!(v.leakage(), 6.0);
    }

    #[test]
    fn repeated_creation_builds_number_states() {
        let cutoff = 10;
        let mut v = FockVector::vacuum(cutoff);
        for n in 1..=cutoff {
            v = apply_creation(&v);
            assert!(v.normalized().max_abs_diff(&number_state(n, cutoff).unwrap()) < 1e-15);
        }
    }

    #[test]
    fn annihilation_examples() {
        let zero = apply_annihilation(&FockVector::vacuum(5));
        assert_eq!(zero.norm_sqr(), 0.0);

        let v = apply_annihilation(&number_state(3, 5).unwrap());
        assert_eq!(v.amplitude(2), c(3f64.sqrt(), 0.0));
        assert_eq!(v.amplitude(5), c(0.0, 0.0));
    }

    #[test]
    fn ladder_consistency_is_exact() {
        let cutoff = 20;
        for n in 0..cutoff {
            let v = number_state(n, cutoff).unwrap();
            let back = apply_annihilation(&apply_creation(&v));
            let expected = v.scaled(c((n + 1) as f64, 0.0));
            // √(n+1)·√(n+1) rounds to within an ulp or two of n+1.
            assert!(back.max_abs_diff(&expected) <= 4.0 * f64::EPSILON * (n + 1) as f64);
            assert_eq!(back.leakage(), 0.0);
        }
    }

    #[test]
    fn coherent_state_is_annihilation_eigenvector() {
        for &alpha in &[c(0.3, 0.0), c(1.0, -1.0), c(0.0, 2.0), c(-1.4, 1.4)] {
            let v = coherent_state(alpha, 40).unwrap();
            let av = apply_annihilation(&v);
            let expected = v.scaled(alpha);
            // Only the top coefficient differs: a drops it, α·v keeps it.
            assert!(av.max_abs_diff(&expected) <= 1e-8, "alpha {alpha}");
        }
    }

    #[test]
    fn coherent_state_examples() {
        let vac = coherent_state(c(0.0, 0.0), 10).unwrap();
        assert_eq!(vac, FockVector::vacuum(10));

        let one = coherent_state(c(1.0, 0.0), 40).unwrap();
        assert!((photon_number_distribution(&one)[0] - (-1.0f64).exp()).abs() < 1e-15);

        let two = coherent_state(c(2.0, 0.0), 40).unwrap();
        assert!((two.norm_sqr() - 1.0).abs() < 1e-10);
        assert!(two.leakage() < 1e-12);
    }

    #[test]
    fn coherent_state_rejects_non_finite() {
        assert!(coherent_state(c(f64::NAN, 0.0), 10).is_err());
        assert!(coherent_state(c(0.0, f64::INFINITY), 10).is_err());
    }

    #[test]
    fn default_cutoff_grows_with_intensity() {
        assert_eq!(default_cutoff(c(1.0, 0.0)), 40);
        // |α|² = 100: 100 + 10·√101 ≈ 200.5
        assert_eq!(default_cutoff(c(10.0, 0.0)), 201);
    }

    #[test]
    fn coherent_distribution_is_poisson() {
        let alpha = c(1.5, 0.5);
        let mean = alpha.norm_sqr();
        let p = photon_number_distribution(&coherent_state(alpha, 40).unwrap());
        // Poisson pmf by its own recurrence, independent of the amplitude path.
        let mut pmf = (-mean).exp();
        for (n, &pn) in p.iter().enumerate() {
            if n > 0 {
                pmf *= mean / n as f64;
            }
            assert!((pn - pmf).abs() < 1e-14, "n = {n}");
        }
    }

    #[test]
    fn distribution_of_simple_vectors() {
        let p = photon_number_distribution(&number_state(3, 6).unwrap());
        assert_eq!(p[3], 1.0);
        assert_eq!(p.iter().sum::<f64>(), 1.0);
        assert!(photon_number_distribution(&FockVector::zero(4)).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn coherent_overlap_matches_closed_form() {
        let a = c(0.7, -0.2);
        let b = c(-0.4, 1.1);
        let ip = inner_product(&coherent_state(a, 40).unwrap(), &coherent_state(b, 40).unwrap()).unwrap();
        let expected = (-(a - b).norm_sqr() / 2.0).exp();
        assert!((ip.norm() - expected).abs() < 1e-12);
    }

    #[test]
    fn inner_product_cutoff_mismatch() {
        let r = inner_product(&FockVector::vacuum(3), &FockVector::vacuum(4));
        assert!(matches!(r, Err(Error::Shape(_))));
    }

    #[test]
    fn displacement_by_zero_is_identity() {
        let v = coherent_state(c(1.0, 0.5), 40).unwrap();
        let d = apply_displacement(&v, c(0.0, 0.0), 1e-6).unwrap();
        assert!(d.max_abs_diff(&v) < 1e-15);
    }

    #[test]
    fn displacement_of_vacuum_is_coherent() {
        for &beta in &[c(0.5, 0.0), c(2.0, 0.0), c(0.0, -2.0), c(1.2, 1.5)] {
            let d = apply_displacement(&FockVector::vacuum(40), beta, 1e-6).unwrap();
            let f = fidelity(&d, &coherent_state(beta, 40).unwrap()).unwrap();
            assert!(f > 1.0 - 1e-6, "beta {beta}: fidelity {f}");
        }
    }

    #[test]
    fn displacement_shifts_coherent_amplitude() {
        let d = apply_displacement(&coherent_state(c(1.0, 0.0), 40).unwrap(), c(0.5, 0.0), 1e-6).unwrap();
        let f = fidelity(&d, &coherent_state(c(1.5, 0.0), 40).unwrap()).unwrap();
        assert!(f > 1.0 - 1e-6);
    }

    #[test]
    fn displacement_order_is_unobservable() {
        let b1 = c(0.8, -0.3);
        let b2 = c(-0.2, 1.1);
        let vac = FockVector::vacuum(40);
        let d12 = apply_displacement(&apply_displacement(&vac, b1, 1e-6).unwrap(), b2, 1e-6).unwrap();
        let d21 = apply_displacement(&apply_displacement(&vac, b2, 1e-6).unwrap(), b1, 1e-6).unwrap();
        let target = photon_number_distribution(&coherent_state(b1 + b2, 40).unwrap());
        for ((p12, p21), pt) in
            photon_number_distribution(&d12).iter().zip(photon_number_distribution(&d21)).zip(target)
        {
            assert!((p12 - pt).abs() < 1e-8);
            assert!((p21 - pt).abs() < 1e-8);
        }
        // The vectors themselves differ by the global phase exp(i·Im(b2·conj(b1))).
        let phase = (b2 * b1.conj()).im;
        assert!(phase.abs() > 0.1);
        assert!(d12.max_abs_diff(&d21) > 1e-3);
    }

    #[test]
    fn displacement_reports_truncation() {
        let r = apply_displacement(&FockVector::vacuum(6), c(2.0, 0.0), 1e-6);
        match r {
            Err(Error::Truncation { leakage, .. }) => assert!(leakage > 1e-6),
            other => panic!("expected truncation error, got {other:?}"),
        }
    }
}
