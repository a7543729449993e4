//! Discrete Fourier basis of cyclic mass-label space: the orthonormal
//! eigenvectors of the label-shift operator and the expansion of a mass
//! vector's deviation from uniform in that basis.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{ChoreoError, Result};
use crate::model::MassVector;

/// The orthonormal eigenbasis of the cyclic label shift on `C^n`.
///
/// Mode `l` has components `(1/√n)·exp(2πi·l·(j−1)/n)` for `j = 1..n` and
/// eigenvalue `λ_l = exp(2πi·l/n)` under the up-shift `(Bv)_j = v_{j+1}`.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    n: usize,
    vectors: Vec<Vec<Complex64>>,
    eigenvalues: Vec<Complex64>,
}

/// Builds the shift eigenbasis for `n` labels.
pub fn dft_basis(n: usize) -> Result<SpectralBasis> {
    if n < 2 {
        return Err(ChoreoError::Contract(format!(
            "spectral basis needs at least two labels, got {n}"
        )));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let mut vectors = Vec::with_capacity(n);
    let mut eigenvalues = Vec::with_capacity(n);
    for l in 1..=n {
        let vector = (0..n)
            .map(|j| scale * Complex64::from_polar(1.0, 2.0 * PI * (l * j) as f64 / n as f64))
            .collect();
        vectors.push(vector);
        eigenvalues.push(Complex64::from_polar(1.0, 2.0 * PI * l as f64 / n as f64));
    }
    Ok(SpectralBasis { n, vectors, eigenvalues })
}

impl SpectralBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Basis vector for mode `l ∈ {1..n}`; mode `n` is the uniform vector.
    pub fn vector(&self, l: usize) -> &[Complex64] {
        assert!((1..=self.n).contains(&l), "mode out of range");
        &self.vectors[l - 1]
    }

    /// Shift eigenvalue `λ_l = exp(2πi·l/n)`, defined for any integer `l`.
    pub fn eigenvalue(&self, l: isize) -> Complex64 {
        let n = self.n as isize;
        let idx = (l - 1).rem_euclid(n) as usize;
        self.eigenvalues[idx]
    }

    /// Applies the cyclic up-shift `(Bv)_j = v_{j+1}`.
    pub fn shift(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.n, "length mismatch");
        (0..self.n).map(|j| v[(j + 1) % self.n]).collect()
    }

    /// Complex Euclidean inner product `⟨u, v⟩ = Σ conj(u_j)·v_j`.
    pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
        u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
    }
}

/// Expansion coefficients of a mass deviation vector on modes `1..n−1`.
///
/// Mode `n` is orthogonal to every deviation vector, so it is never stored;
/// real masses force the conjugate pairing `a_{n−l} = conj(a_l)`.
#[derive(Debug, Clone)]
pub struct ModeCoefficients {
    n: usize,
    a: Vec<Complex64>,
}

impl ModeCoefficients {
    /// Coefficient `a_l` for `l ∈ {1..n−1}`.
    pub fn get(&self, l: usize) -> Complex64 {
        assert!((1..self.n).contains(&l), "mode out of range");
        self.a[l - 1]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Rebuilds the deviation vector `Σ_l a_l ê_l` (real part; the imaginary
    /// part cancels by conjugate pairing).
    pub fn reconstruct(&self, basis: &SpectralBasis) -> Vec<f64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n];
        for l in 1..self.n {
            let e = basis.vector(l);
            for (o, &ej) in out.iter_mut().zip(e) {
                *o += self.get(l) * ej;
            }
        }
        out.into_iter().map(|z| z.re).collect()
    }
}

/// Projects the deviation-from-uniform of a mass vector onto the shift
/// eigenbasis: `a_l = ⟨ê_l, (m_1 − M/n, …, m_n − M/n)⟩`.
pub fn mass_modes(masses: &MassVector) -> Result<ModeCoefficients> {
    let n = masses.len();
    let basis = dft_basis(n)?;
    let dev: Vec<Complex64> = masses
        .deviations()
        .into_iter()
        .map(|d| Complex64::new(d, 0.0))
        .collect();
    let a = (1..n)
        .map(|l| SpectralBasis::inner(basis.vector(l), &dev))
        .collect();
    Ok(ModeCoefficients { n, a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn norm(v: &[Complex64]) -> f64 {
        v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn basis_is_orthonormal() {
        for n in [2, 3, 5, 8, 64] {
            let basis = dft_basis(n).unwrap();
            for l in 1..=n {
                for m in 1..=n {
                    let want = if l == m { 1.0 } else { 0.0 };
                    let got = SpectralBasis::inner(basis.vector(l), basis.vector(m));
                    assert!(
                        (got - Complex64::new(want, 0.0)).norm() < 1e-13,
                        "n={n} l={l} m={m}: {got}"
                    );
                }
            }
        }
    }

    #[test]
    fn shift_eigenrelation() {
        for n in [3, 5, 6] {
            let basis = dft_basis(n).unwrap();
            for l in 1..=n {
                let shifted = basis.shift(basis.vector(l));
                let scaled: Vec<Complex64> = basis
                    .vector(l)
                    .iter()
                    .map(|&v| basis.eigenvalue(l as isize) * v)
                    .collect();
                let diff: Vec<Complex64> =
                    shifted.iter().zip(&scaled).map(|(a, b)| a - b).collect();
                assert!(norm(&diff) < 1e-14, "n={n} l={l}");
            }
        }
    }

    #[test]
    fn alternating_eigenvalue_is_minus_one() {
        let basis = dft_basis(4).unwrap();
        let lambda = basis.eigenvalue(2);
        assert_abs_diff_eq!(lambda.re, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(lambda.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn eigenvalue_wraps_modulo_n() {
        let basis = dft_basis(5).unwrap();
        for l in 1..=5isize {
            let wrapped = basis.eigenvalue(l + 5);
            assert!((wrapped - basis.eigenvalue(l)).norm() < 1e-15);
            let negative = basis.eigenvalue(l - 5);
            assert!((negative - basis.eigenvalue(l)).norm() < 1e-15);
        }
    }

    #[test]
    fn uniform_masses_have_zero_modes() {
        let modes = mass_modes(&MassVector::equal(4, 1.0).unwrap()).unwrap();
        for l in 1..4 {
            assert!(modes.get(l).norm() < 1e-14);
        }
    }

    #[test]
    fn alternating_masses_load_only_the_half_mode() {
        // Deviation of (1,2,1,2) is (−1/2, 1/2, −1/2, 1/2) = −ê_2.
        let modes = mass_modes(&MassVector::new(vec![1.0, 2.0, 1.0, 2.0]).unwrap()).unwrap();
        assert!((modes.get(2) - Complex64::new(-1.0, 0.0)).norm() < 1e-14);
        assert!(modes.get(1).norm() < 1e-14);
        assert!(modes.get(3).norm() < 1e-14);
    }

    #[test]
    fn three_body_modes_have_unit_magnitude() {
        let modes = mass_modes(&MassVector::new(vec![1.0, 2.0, 3.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(modes.get(1).norm(), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(modes.get(2).norm(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn reconstruction_matches_deviations() {
        let masses = MassVector::new(vec![1.0, 2.5, 0.25, 4.0, 3.0]).unwrap();
        let modes = mass_modes(&masses).unwrap();
        let basis = dft_basis(5).unwrap();
        let rebuilt = modes.reconstruct(&basis);
        for (got, want) in rebuilt.iter().zip(masses.deviations()) {
            assert_abs_diff_eq!(got, &want, epsilon = 1e-12);
        }
    }

    #[test]
    fn conjugate_pairing_for_real_masses() {
        let modes = mass_modes(&MassVector::new(vec![2.0, 1.0, 4.0, 0.5, 1.5, 3.0]).unwrap())
            .unwrap();
        for l in 1..6 {
            let paired = modes.get(6 - l).conj();
            assert!((modes.get(l) - paired).norm() < 1e-13, "l={l}");
        }
    }

    #[test]
    fn cyclic_shift_scales_modes_by_eigenvalue_powers() {
        let masses = MassVector::new(vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let base = mass_modes(&masses).unwrap();
        let basis = dft_basis(5).unwrap();
        for k in 1..=5isize {
            let shifted = mass_modes(&masses.shifted(k)).unwrap();
            for l in 1..5 {
                let want = basis.eigenvalue(l as isize).powi(k as i32) * base.get(l);
                assert!((shifted.get(l) - want).norm() < 1e-12, "k={k} l={l}");
            }
        }
    }

    #[test]
    fn tiny_n_rejected() {
        assert!(dft_basis(1).is_err());
    }
}
