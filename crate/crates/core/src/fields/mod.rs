//! Core field types and periodic-spectral machinery shared by every solver:
//! Fourier transforms in theta, spectral differentiation, quadrature,
//! wall-normal integration, and interpolation.
//!
//! All fields are immutable after construction; every operation returns a
//! new field, so evaluation is safe to run concurrently across modes, grid
//! rows or parameter sets.

pub mod disk;
pub mod fft;
pub mod grids;
pub mod layer;
pub mod periodic;

pub use disk::{Component, DiskField};
pub use layer::LayerField;
pub use periodic::PeriodicField;

pub use crate::linalg::interp::monotone_interpolate;

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    /// Direct-summation DFT oracle, O(n^2).
    fn dft_direct(values: &[f64]) -> Vec<num_complex::Complex64> {
        let n = values.len();
        (0..n)
            .map(|k| {
                let mut acc = num_complex::Complex64::new(0.0, 0.0);
                for (j, &v) in values.iter().enumerate() {
                    let phase = -crate::TAU * (k * j) as f64 / n as f64;
                    acc += v * num_complex::Complex64::new(phase.cos(), phase.sin());
                }
                acc / n as f64
            })
            .collect()
    }

    #[test]
    fn roundtrip_matches_direct_dft_on_random_64() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let values: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = PeriodicField::from_values(values.clone()).unwrap();
        let oracle = dft_direct(&values);
        for (a, b) in f.coeffs().iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-12);
        }
        // forward-then-inverse returns the samples
        let back = PeriodicField::from_coeffs(f.coeffs().to_vec()).unwrap();
        for (a, b) in back.values().iter().zip(&values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn roundtrip_all_supported_sizes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(80);
        for exp in 2..=9 {
            let n = 1usize << exp;
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = PeriodicField::from_values(values.clone()).unwrap();
            let back = PeriodicField::from_coeffs(f.coeffs().to_vec()).unwrap();
            let scale = f.linf().max(1e-300);
            for (a, b) in back.values().iter().zip(&values) {
                assert!((a - b).abs() / scale < 1e-12, "n = {n}");
            }
            assert!(f.hermitian_defect() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn prop_roundtrip_random_fields(seed in 0u64..1000, exp in 2u32..8) {
            let n = 1usize << exp;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let f = PeriodicField::from_values(values.clone()).unwrap();
            let back = PeriodicField::from_coeffs(f.coeffs().to_vec()).unwrap();
            let scale = f.linf().max(1e-300);
            for (a, b) in back.values().iter().zip(&values) {
                prop_assert!((a - b).abs() / scale < 1e-12);
            }
        }

        #[test]
        fn prop_product_rule_band_limited(seed in 0u64..1000) {
            // combined bandwidth <= n/3 keeps the plain product alias-free
            let n = 96usize.next_power_of_two(); // 128
            let kmax = n / 6;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                let coeffs: Vec<(usize, f64, f64)> = (1..=kmax)
                    .map(|k| (k, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                PeriodicField::from_fn(n, move |t| {
                    coeffs
                        .iter()
                        .map(|&(k, a, b)| a * (k as f64 * t).cos() + b * (k as f64 * t).sin())
                        .sum()
                })
                .unwrap()
            };
            let f = mk(&mut rng);
            let g = mk(&mut rng);
            let lhs = f.product(&g).unwrap().derivative();
            let rhs = f
                .product(&g.derivative())
                .unwrap()
                .add(&f.derivative().product(&g).unwrap())
                .unwrap();
            let scale = lhs.linf().max(1.0);
            for (a, b) in lhs.values().iter().zip(rhs.values()) {
                prop_assert!((a - b).abs() / scale < 1e-8);
            }
        }
    }
}
