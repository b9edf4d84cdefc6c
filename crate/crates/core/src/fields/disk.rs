//! Fields on the disk in polar components, sampled on a radial grid that
//! includes r = 1 and stays away from the center.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::layer::theta_derivative_array;
use super::periodic::PeriodicField;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    Tangential,
    Radial,
    Scalar,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiskField {
    /// Strictly increasing radii in (0, 1], last = 1.
    r: Vec<f64>,
    /// values[(i_theta, j_r)]
    values: Array2<f64>,
    component: Component,
}

impl DiskField {
    pub fn new(r: Vec<f64>, values: Array2<f64>, component: Component) -> Result<Self> {
        if r.len() < 2 || r.windows(2).any(|w| w[1] <= w[0]) || r[0] <= 0.0 {
            return Err(Error::GridNotIncreasing);
        }
        assert_eq!(*r.last().unwrap(), 1.0, "last radial node must be 1");
        assert_eq!(values.dim().1, r.len());
        let n_theta = values.dim().0;
        if n_theta < 4 || !n_theta.is_power_of_two() {
            return Err(Error::BadThetaSize(n_theta));
        }
        Ok(DiskField { r, values, component })
    }

    pub fn zeros(n_theta: usize, r: Vec<f64>, component: Component) -> Result<Self> {
        let n_r = r.len();
        Self::new(r, Array2::zeros((n_theta, n_r)), component)
    }

    pub fn from_fn(
        n_theta: usize,
        r: Vec<f64>,
        component: Component,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let n_r = r.len();
        let mut values = Array2::zeros((n_theta, n_r));
        for i in 0..n_theta {
            let theta = crate::TAU * i as f64 / n_theta as f64;
            for (j, &rj) in r.iter().enumerate() {
                values[(i, j)] = f(theta, rj);
            }
        }
        Self::new(r, values, component)
    }

    pub fn n_theta(&self) -> usize {
        self.values.dim().0
    }

    pub fn n_r(&self) -> usize {
        self.r.len()
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn component(&self) -> Component {
        self.component
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.values
    }

    pub fn at(&self, i_theta: usize, j_r: usize) -> f64 {
        self.values[(i_theta, j_r)]
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn wall_trace(&self) -> PeriodicField {
        let last = self.n_r() - 1;
        PeriodicField::from_values((0..self.n_theta()).map(|i| self.values[(i, last)]).collect()).unwrap()
    }

    pub fn theta_derivative(&self) -> DiskField {
        DiskField {
            r: self.r.clone(),
            values: theta_derivative_array(&self.values),
            component: self.component,
        }
    }

    pub fn theta_mean(&self) -> Vec<f64> {
        let n = self.n_theta() as f64;
        (0..self.n_r()).map(|j| self.values.column(j).sum() / n).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DiskField {
        DiskField {
            r: self.r.clone(),
            values: self.values.mapv(|v| f(v)),
            component: self.component,
        }
    }

    pub fn zip_with(&self, other: &DiskField, f: impl Fn(f64, f64) -> f64) -> Result<DiskField> {
        if self.r.len() != other.r.len() || self.n_theta() != other.n_theta() {
            return Err(Error::GridMismatch);
        }
        let mut values = Array2::zeros(self.values.dim());
        for ((idx, &a), &b) in self.values.indexed_iter().zip(other.values.iter()) {
            values[idx] = f(a, b);
        }
        Ok(DiskField {
            r: self.r.clone(),
            values,
            component: self.component,
        })
    }

    pub fn add(&self, other: &DiskField) -> Result<DiskField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DiskField) -> Result<DiskField> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> DiskField {
        self.map(|v| s * v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wall_trace_and_mean() {
        let r: Vec<f64> = (1..=50).map(|i| i as f64 / 50.0).collect();
        let f = DiskField::from_fn(16, r, Component::Scalar, |t, rr| rr * t.cos() + 2.0).unwrap();
        let trace = f.wall_trace();
        assert!((trace.coeff(1).re - 0.5).abs() < 1e-14);
        let mean = f.theta_mean();
        for m in mean {
            assert!((m - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn grid_must_end_at_one() {
        let r = vec![0.1, 0.5, 0.9];
        let out = std::panic::catch_unwind(|| {
            DiskField::zeros(8, r, Component::Scalar).unwrap()
        });
        assert!(out.is_err());
    }
}
