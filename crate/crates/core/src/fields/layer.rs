//! Boundary-layer fields on [0, 2pi) x [-Y_max, 0] (or the von Mises strip
//! [-psi_max, 0]).

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft;
use super::periodic::PeriodicField;
use crate::error::{Error, Result};
use crate::linalg::{quad, StencilSet};

/// Relative tolerance for the "decays at the truncated end" check.  Layer
/// quantities carry weights up to Y^2 against e^{cY} decay, which at
/// Y_max = 20 and c ~ 0.7 leaves a relative tail near 3e-4; the gate only
/// needs to reject fields that stay O(1) at the truncated end.
pub const DECAY_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerField {
    /// Strictly increasing wall-normal nodes, first = -Y_max, last = 0.
    y: Vec<f64>,
    /// values[(i_theta, j_y)]
    values: Array2<f64>,
    decaying: bool,
}

impl LayerField {
    pub fn new(y: Vec<f64>, values: Array2<f64>, decaying: bool) -> Result<Self> {
        if y.len() < 4 || y.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::GridNotIncreasing);
        }
        assert_eq!(
            values.dim().1,
            y.len(),
            "value columns must match the y grid"
        );
        assert_eq!(*y.last().unwrap(), 0.0, "last node must be exactly 0");
        let n_theta = values.dim().0;
        if n_theta < 4 || !n_theta.is_power_of_two() {
            return Err(Error::BadThetaSize(n_theta));
        }
        Ok(LayerField { y, values, decaying })
    }

    pub fn zeros(n_theta: usize, y: Vec<f64>) -> Result<Self> {
        let n_y = y.len();
        Self::new(y, Array2::zeros((n_theta, n_y)), true)
    }

    pub fn from_fn(n_theta: usize, y: Vec<f64>, f: impl Fn(f64, f64) -> f64, decaying: bool) -> Result<Self> {
        let n_y = y.len();
        let mut values = Array2::zeros((n_theta, n_y));
        for i in 0..n_theta {
            let theta = crate::TAU * i as f64 / n_theta as f64;
            for (j, &yj) in y.iter().enumerate() {
                values[(i, j)] = f(theta, yj);
            }
        }
        Self::new(y, values, decaying)
    }

    pub fn n_theta(&self) -> usize {
        self.values.dim().0
    }

    pub fn n_y(&self) -> usize {
        self.y.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn y_max(&self) -> f64 {
        -self.y[0]
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn at(&self, i_theta: usize, j_y: usize) -> f64 {
        self.values[(i_theta, j_y)]
    }

    pub fn is_decaying(&self) -> bool {
        self.decaying
    }

    pub fn with_decay_flag(mut self, decaying: bool) -> Self {
        self.decaying = decaying;
        self
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// |value at the truncated end| relative to the field maximum.
    pub fn truncation_defect(&self) -> f64 {
        let maxabs = self.linf().max(1e-300);
        let mut end: f64 = 0.0;
        for i in 0..self.n_theta() {
            end = end.max(self.values[(i, 0)].abs());
        }
        end / maxabs
    }

    /// Verify the declared decay at -Y_max: the end value must be small
    /// relative to the field, with an absolute floor so roundoff-scale
    /// fields pass.
    pub fn check_decay(&self) -> Result<()> {
        let maxabs = self.linf();
        let mut end: f64 = 0.0;
        for i in 0..self.n_theta() {
            end = end.max(self.values[(i, 0)].abs());
        }
        if !self.decaying || end > DECAY_TOL * maxabs + 1e-14 {
            return Err(Error::NotDecaying);
        }
        Ok(())
    }

    /// Wall trace as a periodic field (values at the last node, Y = 0).
    pub fn wall_trace(&self) -> PeriodicField {
        let n = self.n_theta();
        let last = self.n_y() - 1;
        PeriodicField::from_values((0..n).map(|i| self.values[(i, last)]).collect()).unwrap()
    }

    /// Profile of theta means, one entry per y node.
    pub fn theta_mean(&self) -> Vec<f64> {
        let n = self.n_theta() as f64;
        (0..self.n_y())
            .map(|j| self.values.column(j).sum() / n)
            .collect()
    }

    /// Spectral d/dtheta, Nyquist zeroed.
    pub fn theta_derivative(&self) -> LayerField {
        LayerField {
            y: self.y.clone(),
            values: theta_derivative_array(&self.values),
            decaying: self.decaying,
        }
    }

    /// Fourth-order d/dY on the stored grid.
    pub fn y_derivative(&self) -> LayerField {
        self.y_derivative_with(&StencilSet::new(&self.y, 1, 4))
    }

    pub fn y_derivative_with(&self, stencils: &StencilSet) -> LayerField {
        let mut values = Array2::zeros(self.values.dim());
        let mut row_in = vec![0.0; self.n_y()];
        let mut row_out = vec![0.0; self.n_y()];
        for i in 0..self.n_theta() {
            for j in 0..self.n_y() {
                row_in[j] = self.values[(i, j)];
            }
            stencils.apply_into(&row_in, &mut row_out);
            for j in 0..self.n_y() {
                values[(i, j)] = row_out[j];
            }
        }
        LayerField {
            y: self.y.clone(),
            values,
            decaying: self.decaying,
        }
    }

    /// Cumulative integral from -Y_max treated as -infinity; requires the
    /// decay flag, returns 0 at the first node.
    pub fn half_line_integral(&self) -> Result<LayerField> {
        self.check_decay()?;
        let mut values = Array2::zeros(self.values.dim());
        let mut row = vec![0.0; self.n_y()];
        for i in 0..self.n_theta() {
            for j in 0..self.n_y() {
                row[j] = self.values[(i, j)];
            }
            let cum = quad::cumint(&self.y, &row);
            for j in 0..self.n_y() {
                values[(i, j)] = cum[j];
            }
        }
        // integral of a decaying field is flat, not small, at the wall end;
        // it still vanishes at the truncated end by construction
        LayerField::new(self.y.clone(), values, true)
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> LayerField {
        LayerField {
            y: self.y.clone(),
            values: self.values.mapv(|v| f(v)),
            decaying: self.decaying,
        }
    }

    pub fn zip_with(&self, other: &LayerField, mut f: impl FnMut(f64, f64) -> f64) -> Result<LayerField> {
        if self.y.len() != other.y.len() || self.n_theta() != other.n_theta() {
            return Err(Error::GridMismatch);
        }
        let mut values = Array2::zeros(self.values.dim());
        for ((idx, &a), &b) in self.values.indexed_iter().zip(other.values.iter()) {
            values[idx] = f(a, b);
        }
        Ok(LayerField {
            y: self.y.clone(),
            values,
            decaying: self.decaying && other.decaying,
        })
    }

    pub fn add(&self, other: &LayerField) -> Result<LayerField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &LayerField) -> Result<LayerField> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> LayerField {
        self.map(|v| s * v)
    }

    /// Add `g(theta) * p(Y)` in place of building two broadcast fields.
    pub fn add_separable(&self, g: &PeriodicField, p: &[f64]) -> Result<LayerField> {
        if g.n_theta() != self.n_theta() || p.len() != self.n_y() {
            return Err(Error::GridMismatch);
        }
        let mut values = self.values.clone();
        for i in 0..self.n_theta() {
            let gv = g.values()[i];
            for j in 0..self.n_y() {
                values[(i, j)] += gv * p[j];
            }
        }
        LayerField::new(self.y.clone(), values, self.decaying)
    }
}

/// Spectral theta derivative of a (n_theta, n_cols) array, Nyquist zeroed.
pub fn theta_derivative_array(values: &Array2<f64>) -> Array2<f64> {
    let (n_theta, n_cols) = values.dim();
    let mut out = Array2::zeros((n_theta, n_cols));
    let mut col = vec![0.0; n_theta];
    for j in 0..n_cols {
        for i in 0..n_theta {
            col[i] = values[(i, j)];
        }
        let mut coeffs = fft::forward(&col);
        for (slot, c) in coeffs.iter_mut().enumerate() {
            let k = fft::wavenumber(slot, n_theta);
            if slot == n_theta / 2 {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c *= Complex64::new(0.0, k as f64);
            }
        }
        let back = fft::inverse(&coeffs);
        for i in 0..n_theta {
            out[(i, j)] = back[i];
        }
    }
    out
}
