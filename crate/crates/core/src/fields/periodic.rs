//! Periodic scalar fields of theta with dual grid/spectral representation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft;
use crate::error::{Error, Result};
use crate::TAU;

/// Real 2-pi-periodic function sampled at `theta_j = 2 pi j / n` together
/// with its Fourier coefficients.  The two representations are kept
/// consistent at construction and the field is immutable afterwards.
/// Serialization carries the samples only; the spectrum is rebuilt on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "Vec<f64>", try_from = "Vec<f64>")]
pub struct PeriodicField {
    values: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl From<PeriodicField> for Vec<f64> {
    fn from(f: PeriodicField) -> Vec<f64> {
        f.values
    }
}

impl TryFrom<Vec<f64>> for PeriodicField {
    type Error = Error;
    fn try_from(values: Vec<f64>) -> Result<Self> {
        PeriodicField::from_values(values)
    }
}

impl PeriodicField {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::BadThetaSize(n));
        }
        let coeffs = fft::forward(&values);
        Ok(PeriodicField { values, coeffs })
    }

    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Result<Self> {
        let n = coeffs.len();
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::BadThetaSize(n));
        }
        let values = fft::inverse(&coeffs);
        // re-transform so that values and coeffs agree exactly even if the
        // input spectrum was not Hermitian
        Self::from_values(values)
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values((0..n).map(|j| f(TAU * j as f64 / n as f64)).collect())
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::from_values(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::from_values(vec![c; n])
    }

    pub fn n_theta(&self) -> usize {
        self.values.len()
    }

    pub fn theta(&self, j: usize) -> f64 {
        TAU * j as f64 / self.n_theta() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of mode `k`, |k| <= n/2.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let n = self.n_theta() as i64;
        debug_assert!(k.abs() <= n / 2);
        let idx = k.rem_euclid(n) as usize;
        self.coeffs[idx]
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Integral over one period: `2 pi * c[0]`; exact for band-limited data.
    pub fn quadrature(&self) -> f64 {
        TAU * self.mean()
    }

    /// Spectral d/dtheta: mode k multiplied by ik, Nyquist mode zeroed.
    pub fn derivative(&self) -> PeriodicField {
        let n = self.n_theta();
        let mut coeffs = self.coeffs.clone();
        for (slot, c) in coeffs.iter_mut().enumerate() {
            let k = fft::wavenumber(slot, n);
            if slot == n / 2 {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c *= Complex64::new(0.0, k as f64);
            }
        }
        let values = fft::inverse(&coeffs);
        PeriodicField { values, coeffs }
    }

    /// Spectral antiderivative with zero mean.  Rejects nonzero-mean input
    /// (no periodic antiderivative exists).
    pub fn antiderivative(&self) -> Result<PeriodicField> {
        if self.mean().abs() > 1e-10 {
            return Err(Error::NonZeroMean(self.mean()));
        }
        let n = self.n_theta();
        let mut coeffs = self.coeffs.clone();
        for (slot, c) in coeffs.iter_mut().enumerate() {
            let k = fft::wavenumber(slot, n);
            if k == 0 || slot == n / 2 {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c /= Complex64::new(0.0, k as f64);
            }
        }
        let values = fft::inverse(&coeffs);
        Ok(PeriodicField { values, coeffs })
    }

    /// Pointwise product, de-aliased by evaluation on a twice-refined grid.
    pub fn product(&self, other: &PeriodicField) -> Result<PeriodicField> {
        let n = self.n_theta();
        if other.n_theta() != n {
            return Err(Error::GridMismatch);
        }
        let fine_a = upsample(&self.coeffs, 2 * n);
        let fine_b = upsample(&other.coeffs, 2 * n);
        let prod: Vec<f64> = fine_a.iter().zip(&fine_b).map(|(a, b)| a * b).collect();
        let fine_coeffs = fft::forward(&prod);
        let coeffs = downsample(&fine_coeffs, n);
        let values = fft::inverse(&coeffs);
        Ok(PeriodicField { values, coeffs })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> PeriodicField {
        PeriodicField::from_values(self.values.iter().map(|&v| f(v)).collect()).unwrap()
    }

    pub fn zip_with(&self, other: &PeriodicField, f: impl Fn(f64, f64) -> f64) -> Result<PeriodicField> {
        if other.n_theta() != self.n_theta() {
            return Err(Error::GridMismatch);
        }
        PeriodicField::from_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> PeriodicField {
        self.map(|v| s * v)
    }

    pub fn add(&self, other: &PeriodicField) -> Result<PeriodicField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest relative defect of the Hermitian symmetry c(-k) = conj(c(k)).
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.n_theta();
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(1e-300, f64::max);
        let mut worst: f64 = 0.0;
        for k in 1..n / 2 {
            let d = (self.coeffs[k] - self.coeffs[n - k].conj()).norm();
            worst = worst.max(d / scale);
        }
        worst
    }
}

/// Zero-pad a spectrum to `m` slots (m >= n), preserving the function.
fn upsample(coeffs: &[Complex64], m: usize) -> Vec<f64> {
    let n = coeffs.len();
    let mut fine = vec![Complex64::new(0.0, 0.0); m];
    for (slot, &c) in coeffs.iter().enumerate() {
        let k = fft::wavenumber(slot, n);
        if slot == n / 2 {
            // split the Nyquist cosine across +-k
            fine[(k as usize) % m] += 0.5 * c;
            fine[m - k as usize] += 0.5 * c;
        } else {
            let idx = k.rem_euclid(m as i64) as usize;
            fine[idx] = c;
        }
    }
    fft::inverse(&fine)
}

/// Keep modes |k| <= n/2 of a finer spectrum.
fn downsample(fine: &[Complex64], n: usize) -> Vec<Complex64> {
    let m = fine.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for slot in 0..n {
        let k = fft::wavenumber(slot, n);
        if slot == n / 2 {
            // fold +-Nyquist of the fine grid into the coarse cosine slot
            out[slot] = fine[n / 2] + fine[m - n / 2];
        } else {
            out[slot] = fine[k.rem_euclid(m as i64) as usize];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_has_single_coeff() {
        let f = PeriodicField::constant(16, 1.0).unwrap();
        assert!((f.coeff(0) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        for k in 1..=8i64 {
            assert!(f.coeff(k).norm() < 1e-14);
        }
    }

    #[test]
    fn cosine_splits_into_half_modes() {
        let f = PeriodicField::from_fn(32, |t| t.cos()).unwrap();
        assert!((f.coeff(1) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((f.coeff(-1) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!(f.coeff(2).norm() < 1e-14);
        assert!(f.coeff(0).norm() < 1e-14);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(PeriodicField::from_values(vec![0.0; 12]).is_err());
        assert!(PeriodicField::from_values(vec![0.0; 2]).is_err());
    }

    #[test]
    fn derivative_of_cos_is_minus_sin() {
        let f = PeriodicField::from_fn(64, |t| t.cos()).unwrap();
        let d = f.derivative();
        for j in 0..64 {
            assert!((d.values()[j] + f.theta(j).sin()).abs() < 1e-13);
        }
        let c = PeriodicField::constant(64, 3.5).unwrap();
        assert!(c.derivative().linf() < 1e-14);
    }

    #[test]
    fn derivative_of_cos3_matches_finite_difference() {
        let f = |t: f64| (3.0 * t).cos();
        let field = PeriodicField::from_fn(64, f).unwrap();
        let d = field.derivative();
        let h = 1e-4;
        for j in 0..64 {
            let t = field.theta(j);
            let fd = (f(t + h) - f(t - h)) / (2.0 * h);
            assert!((d.values()[j] - fd).abs() < 1e-6);
            assert!((d.values()[j] + 3.0 * (3.0 * t).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn quadrature_exact_for_trig() {
        let cos2 = PeriodicField::from_fn(64, |t| t.cos() * t.cos()).unwrap();
        assert!((cos2.quadrature() - std::f64::consts::PI).abs() < 1e-13);
        let sin = PeriodicField::from_fn(64, |t| t.sin()).unwrap();
        assert!(sin.quadrature().abs() < 1e-13);
    }

    #[test]
    fn quadrature_of_square_matches_simpson() {
        let f = |t: f64| t.cos() + 0.3 * (2.0 * t).sin();
        let field = PeriodicField::from_fn(64, f).unwrap();
        let sq = field.product(&field).unwrap();
        // dense Simpson oracle
        let m = 20001;
        let h = TAU / (m - 1) as f64;
        let mut acc = 0.0;
        for i in 0..m {
            let t = i as f64 * h;
            let w = if i == 0 || i == m - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * f(t) * f(t);
        }
        acc *= h / 3.0;
        assert!((sq.quadrature() - acc).abs() < 1e-10);
        // analytic: pi * (1 + 0.09)
        assert!((sq.quadrature() - std::f64::consts::PI * 1.09).abs() < 1e-12);
    }

    #[test]
    fn antiderivative_inverts_derivative() {
        let f = PeriodicField::from_fn(32, |t| (2.0 * t).sin() - 0.4 * (5.0 * t).cos()).unwrap();
        let back = f.derivative().antiderivative().unwrap();
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let bad = PeriodicField::constant(32, 1.0).unwrap();
        assert!(bad.antiderivative().is_err());
    }

    #[test]
    fn dealiased_product_of_high_modes() {
        let n = 16;
        let a = PeriodicField::from_fn(n, |t| (7.0 * t).cos()).unwrap();
        // plain grid product of cos(7t)^2 aliases mode 14 onto mode 2 on a
        // 16-point grid; the padded product must keep mode 0 only
        let sq = a.product(&a).unwrap();
        assert!((sq.coeff(0).re - 0.5).abs() < 1e-13);
        assert!(sq.coeff(2).norm() < 1e-13);
    }
}
