//! Outer (inviscid) hierarchy on the disk: the rigid-rotation base state and
//! the linearized solves driven by layer mass fluxes.
//!
//! Every order shares one structure.  Eliminating the pressure leaves
//! `Delta(r v) = 0`, so a boundary trace with modes `a_n cos + b_n sin`
//! extends as `v = sum a_n r^{n-1} cos(n theta) + b_n r^{n-1} sin(n theta)`
//! and `u = sum -a_n r^{n-1} sin + b_n r^{n-1} cos`.  The pressure is
//! recovered from the momentum equations: a spectral theta-antiderivative
//! plus a radial gauge ODE for the mean.  Far-field constants of the layer
//! orders are absorbed by the cutoff shift `chi(r) A_inf + A(r)` whose
//! radial profile solves `r A'' + A' - A/r = -A_inf (r chi'' + chi' -
//! chi/r)` by explicit quadratures.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cutoff::Cutoff;
use crate::error::{Error, Result};
use crate::fields::{fft, Component, DiskField, PeriodicField};
use crate::linalg::interp::lagrange_resample;
use crate::linalg::quad;

/// Rigid rotation `u = a r` with pressure `p = a^2 r^2 / 2` (gauge p(0) = 0).
pub fn couette_base(a: f64, n_theta: usize, r: &[f64]) -> (DiskField, DiskField) {
    let u = DiskField::from_fn(n_theta, r.to_vec(), Component::Tangential, |_, rr| a * rr).unwrap();
    let p = DiskField::from_fn(n_theta, r.to_vec(), Component::Scalar, |_, rr| {
        0.5 * a * a * rr * rr
    })
    .unwrap();
    (u, p)
}

/// Radial corrector absorbing the far-field constant `a_inf` of a layer
/// order: the full mode-0 shift is `chi(r) a_inf + A(r)` with `A(1) = 0`
/// and `A(r) = a_lin r` on [0, 1/2].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corrector {
    pub a_inf: f64,
    pub a_lin: f64,
    /// dense quadrature grid on [1/2, 1]
    grid: Vec<f64>,
    i1: Vec<f64>,
    i2: Vec<f64>,
}

impl Corrector {
    /// Build the corrector from the printed quadratures
    /// `A = a_lin r + r int phi/(2s) - (1/r) int s phi / 2` with
    /// `phi = -a_inf (r chi'' + chi' - chi/r)` and `a_lin` fixed by A(1)=0.
    pub fn new(a_inf: f64, chi: &Cutoff) -> Self {
        let n = 4001;
        let grid: Vec<f64> = (0..n).map(|i| 0.5 + 0.5 * i as f64 / (n - 1) as f64).collect();
        let phi: Vec<f64> = grid.iter().map(|&r| -a_inf * chi.corrector_source(r)).collect();
        let f1: Vec<f64> = grid.iter().zip(&phi).map(|(&r, &p)| p / (2.0 * r)).collect();
        let f2: Vec<f64> = grid.iter().zip(&phi).map(|(&r, &p)| r * p / 2.0).collect();
        let i1 = quad::cumint(&grid, &f1);
        let i2 = quad::cumint(&grid, &f2);
        let a_lin = -i1[n - 1] + i2[n - 1];
        Corrector { a_inf, a_lin, grid, i1, i2 }
    }

    fn quads(&self, r: f64) -> (f64, f64) {
        if r <= 0.5 {
            (0.0, 0.0)
        } else {
            let i1 = lagrange_resample(&self.grid, &self.i1, &[r]).unwrap()[0];
            let i2 = lagrange_resample(&self.grid, &self.i2, &[r]).unwrap()[0];
            (i1, i2)
        }
    }

    /// A(r) alone.
    pub fn a_profile(&self, r: f64) -> f64 {
        let (i1, i2) = self.quads(r);
        self.a_lin * r + r * i1 - i2 / r
    }

    /// Full mode-0 velocity shift chi a_inf + A and its first and second
    /// derivatives.
    pub fn shift(&self, r: f64, chi: &Cutoff) -> (f64, f64, f64) {
        let (i1, i2) = self.quads(r);
        let phi = -self.a_inf * chi.corrector_source(r);
        let a = self.a_lin * r + r * i1 - i2 / r;
        let da = self.a_lin + i1 + i2 / (r * r);
        let d2a = phi / r - 2.0 * i2 / (r * r * r);
        (
            chi.chi(r) * self.a_inf + a,
            chi.dchi(r) * self.a_inf + da,
            chi.d2chi(r) * self.a_inf + d2a,
        )
    }

    /// int_0^r [chi(s) a_inf + A(s)] ds, the mode-0 pressure shift over 2a.
    pub fn pressure_integral(&self, r: f64, chi: &Cutoff) -> f64 {
        // below the bridge only the linear part contributes
        let lin = 0.5 * self.a_lin * r.min(0.5) * r.min(0.5);
        if r <= 0.5 {
            return lin;
        }
        let idx_max = self.grid.partition_point(|&g| g <= r);
        let sub = &self.grid[..idx_max.max(2)];
        let vals: Vec<f64> = sub
            .iter()
            .map(|&s| chi.chi(s) * self.a_inf + self.a_profile(s))
            .collect();
        let cum = quad::cumint(sub, &vals);
        let upto_node = cum[sub.len() - 1];
        // remainder between the last node and r by a small trapezoid
        let last = sub[sub.len() - 1];
        let rem = 0.5
            * (r - last)
            * ((chi.chi(last) * self.a_inf + self.a_profile(last))
                + (chi.chi(r) * self.a_inf + self.a_profile(r)));
        lin + upto_node + rem
    }
}

/// One order of the outer expansion.  Velocities are the harmonic series
/// plus an optional mode-0 corrector; the pressure and its exact first
/// derivatives live on a reference radial grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EulerOrder {
    n_theta: usize,
    /// slot-indexed coefficients of v's modes (|k| >= 1)
    v_coeffs: Vec<Complex64>,
    pub boundary_trace: PeriodicField,
    pub corrector: Option<Corrector>,
    r_ref: Vec<f64>,
    p: Array2<f64>,
    dp_dr: Array2<f64>,
    dp_dth: Array2<f64>,
}

/// Falling factorial: d^m/dr^m r^p evaluated with exponent bookkeeping.
fn power_deriv(p: i64, m: usize, r: f64) -> f64 {
    let mut coeff = 1.0;
    let mut e = p;
    for _ in 0..m {
        coeff *= e as f64;
        e -= 1;
    }
    if coeff == 0.0 {
        return 0.0;
    }
    if e == 0 {
        coeff
    } else {
        coeff * r.powi(e as i32)
    }
}

impl EulerOrder {
    /// Extend a zero-mean boundary trace of the radial velocity into the
    /// disk: `v_k(r) = c_k r^{|k|-1}`, `u_k = i sgn(k) c_k r^{|k|-1}`.
    pub fn harmonic_velocity_solve(trace: &PeriodicField, r_ref: &[f64]) -> Result<EulerOrder> {
        if trace.mean().abs() > 1e-12 {
            return Err(Error::NonZeroMean(trace.mean()));
        }
        let n_theta = trace.n_theta();
        let scale = trace.linf().max(1e-300);
        let mut v_coeffs = trace.coeffs().to_vec();
        v_coeffs[0] = Complex64::new(0.0, 0.0);
        v_coeffs[n_theta / 2] = Complex64::new(0.0, 0.0);
        for c in v_coeffs.iter_mut() {
            if c.norm() < 1e-14 * scale {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        let n_r = r_ref.len();
        Ok(EulerOrder {
            n_theta,
            v_coeffs,
            boundary_trace: trace.clone(),
            corrector: None,
            r_ref: r_ref.to_vec(),
            p: Array2::zeros((n_theta, n_r)),
            dp_dr: Array2::zeros((n_theta, n_r)),
            dp_dth: Array2::zeros((n_theta, n_r)),
        })
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn r_ref(&self) -> &[f64] {
        &self.r_ref
    }

    fn u_coeff(&self, slot: usize) -> Complex64 {
        let k = fft::wavenumber(slot, self.n_theta);
        Complex64::new(0.0, k.signum() as f64) * self.v_coeffs[slot]
    }

    /// Sample the m-th radial derivative of the tangential velocity
    /// (corrector included) at the given radii.
    pub fn sample_u(&self, r: &[f64], m: usize, chi: &Cutoff) -> Array2<f64> {
        let mut out = self.sample_series(r, m, true);
        if let Some(corr) = &self.corrector {
            for (j, &rj) in r.iter().enumerate() {
                let (s0, s1, s2) = corr.shift(rj, chi);
                let add = match m {
                    0 => s0,
                    1 => s1,
                    2 => s2,
                    _ => panic!("corrector derivatives available up to order 2"),
                };
                for i in 0..self.n_theta {
                    out[(i, j)] += add;
                }
            }
        }
        out
    }

    /// Sample the m-th radial derivative of the radial velocity.
    pub fn sample_v(&self, r: &[f64], m: usize) -> Array2<f64> {
        self.sample_series(r, m, false)
    }

    fn sample_series(&self, r: &[f64], m: usize, tangential: bool) -> Array2<f64> {
        let n_theta = self.n_theta;
        let mut out = Array2::zeros((n_theta, r.len()));
        let mut spec = vec![Complex64::new(0.0, 0.0); n_theta];
        for (j, &rj) in r.iter().enumerate() {
            for slot in 0..n_theta {
                let k = fft::wavenumber(slot, n_theta);
                let c = if tangential { self.u_coeff(slot) } else { self.v_coeffs[slot] };
                if k == 0 || c.norm() == 0.0 {
                    spec[slot] = Complex64::new(0.0, 0.0);
                } else {
                    spec[slot] = c * power_deriv(k.abs() - 1, m, rj);
                }
            }
            let vals = fft::inverse_complex(&spec);
            for i in 0..n_theta {
                out[(i, j)] = vals[i].re;
            }
        }
        out
    }

    /// Wall-value periodic fields: m-th radial derivative at r = 1.
    pub fn u_wall_deriv(&self, m: usize, chi: &Cutoff) -> PeriodicField {
        let arr = self.sample_u(&[1.0], m, chi);
        PeriodicField::from_values((0..self.n_theta).map(|i| arr[(i, 0)]).collect()).unwrap()
    }

    pub fn v_wall_deriv(&self, m: usize) -> PeriodicField {
        let arr = self.sample_v(&[1.0], m);
        PeriodicField::from_values((0..self.n_theta).map(|i| arr[(i, 0)]).collect()).unwrap()
    }

    /// Sample pressure (0), d/dr (1) or d/dtheta (2) by per-theta high-order
    /// interpolation from the reference grid.
    pub fn sample_p(&self, r: &[f64], which: usize) -> Array2<f64> {
        let src = match which {
            0 => &self.p,
            1 => &self.dp_dr,
            2 => &self.dp_dth,
            _ => panic!("pressure samples: 0 = p, 1 = dp/dr, 2 = dp/dtheta"),
        };
        let mut out = Array2::zeros((self.n_theta, r.len()));
        let mut row = vec![0.0; self.r_ref.len()];
        for i in 0..self.n_theta {
            for (jj, v) in row.iter_mut().enumerate() {
                *v = src[(i, jj)];
            }
            let vals = lagrange_resample(&self.r_ref, &row, r).unwrap();
            for (j, v) in vals.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }

    /// Velocity fields as DiskFields on a given grid (for export and tests).
    pub fn velocity_fields(&self, r: &[f64], chi: &Cutoff) -> (DiskField, DiskField) {
        let u = DiskField::new(r.to_vec(), self.sample_u(r, 0, chi), Component::Tangential).unwrap();
        let v = DiskField::new(r.to_vec(), self.sample_v(r, 0), Component::Radial).unwrap();
        (u, v)
    }

    pub fn pressure_field(&self, r: &[f64]) -> DiskField {
        DiskField::new(r.to_vec(), self.sample_p(r, 0), Component::Scalar).unwrap()
    }
}

/// Quadratic forcing of order i from the lower modified orders:
/// theta-momentum part `F = sum_{j+k=i} [u_j d_th u_k + v_j r d_r u_k +
/// u_j v_k]` and radial part `G = sum [u_j d_th v_k + v_j r d_r v_k -
/// u_j u_k]`, sampled on the reference grid.
fn quadratic_forcing(
    n_theta: usize,
    lower: &[&EulerOrder],
    order_index: usize,
    r: &[f64],
    chi: &Cutoff,
) -> (Array2<f64>, Array2<f64>) {
    let mut f = Array2::zeros((n_theta, r.len()));
    let mut g = Array2::zeros((n_theta, r.len()));
    for (jj, oj) in lower.iter().enumerate() {
        let j = jj + 1;
        if order_index < j + 1 {
            continue;
        }
        let k = order_index - j;
        if k < 1 || k > lower.len() {
            continue;
        }
        let ok = lower[k - 1];
        let uj = oj.sample_u(r, 0, chi);
        let vj = oj.sample_v(r, 0);
        let uk = ok.sample_u(r, 0, chi);
        let vk = ok.sample_v(r, 0);
        let duk = ok.sample_u(r, 1, chi);
        let dvk = ok.sample_v(r, 1);
        let uk_th = crate::fields::layer::theta_derivative_array(&uk);
        let vk_th = crate::fields::layer::theta_derivative_array(&vk);
        for i in 0..n_theta {
            for (jr, &rr) in r.iter().enumerate() {
                f[(i, jr)] +=
                    uj[(i, jr)] * uk_th[(i, jr)] + vj[(i, jr)] * rr * duk[(i, jr)] + uj[(i, jr)] * vk[(i, jr)];
                g[(i, jr)] +=
                    uj[(i, jr)] * vk_th[(i, jr)] + vj[(i, jr)] * rr * dvk[(i, jr)] - uj[(i, jr)] * uk[(i, jr)];
            }
        }
    }
    (f, g)
}

/// Reconstruct the pressure of `order` (index `order_index`) given the
/// lower modified orders: nonzero theta modes from the theta-momentum
/// antiderivative, the mean from the radial gauge ODE integrated from the
/// center.  Exact first derivatives are stored from the momentum balances.
pub fn euler_pressure_solve(
    order: &mut EulerOrder,
    order_index: usize,
    a: f64,
    lower: &[&EulerOrder],
    chi: &Cutoff,
) -> Result<()> {
    let r = order.r_ref.clone();
    let n_theta = order.n_theta;
    let n_r = r.len();
    let (ff, gg) = quadratic_forcing(n_theta, lower, order_index, &r, chi);
    let u = order.sample_u(&r, 0, chi);
    let v = order.sample_v(&r, 0);
    let u_th = crate::fields::layer::theta_derivative_array(&u);
    let v_th = crate::fields::layer::theta_derivative_array(&v);

    // dp/dtheta = -(a r u_th + 2 a r v + F)
    let mut dp_dth = Array2::zeros((n_theta, n_r));
    for i in 0..n_theta {
        for j in 0..n_r {
            dp_dth[(i, j)] = -(a * r[j] * u_th[(i, j)] + 2.0 * a * r[j] * v[(i, j)] + ff[(i, j)]);
        }
    }
    // compatibility: the theta mean of the integrand must vanish
    let mut worst_mean: f64 = 0.0;
    for j in 0..n_r {
        let mean: f64 = dp_dth.column(j).sum() / n_theta as f64;
        worst_mean = worst_mean.max(mean.abs());
    }
    if worst_mean > 1e-10 {
        return Err(Error::NonZeroMean(worst_mean));
    }

    // nonzero modes of p by spectral antiderivative, per radius
    let mut p = Array2::zeros((n_theta, n_r));
    let mut col = vec![0.0; n_theta];
    for j in 0..n_r {
        for i in 0..n_theta {
            col[i] = dp_dth[(i, j)];
        }
        let mut hat = fft::forward(&col);
        for slot in 0..n_theta {
            let k = fft::wavenumber(slot, n_theta);
            if k == 0 || slot == n_theta / 2 {
                hat[slot] = Complex64::new(0.0, 0.0);
            } else {
                hat[slot] /= Complex64::new(0.0, k as f64);
            }
        }
        let vals = fft::inverse(&hat);
        for i in 0..n_theta {
            p[(i, j)] = vals[i];
        }
    }

    // radial gauge: phi'(r) = 2 a u_0 - G_0 / r (the mean of d_th v and of
    // the zero-mean antiderivative's d/dr vanish); phi(0) = 0
    let mut phi_rhs = vec![0.0; n_r];
    for j in 0..n_r {
        let u0: f64 = u.column(j).sum() / n_theta as f64;
        let g0: f64 = gg.column(j).sum() / n_theta as f64;
        phi_rhs[j] = 2.0 * a * u0 - g0 / r[j];
    }
    let phi = quad::cumint_nonuniform(&r, &phi_rhs);
    for j in 0..n_r {
        for i in 0..n_theta {
            p[(i, j)] += phi[j];
        }
    }

    // exact dp/dr from the radial momentum: dp/dr = 2 a u - a d_th v - G/r
    let mut dp_dr = Array2::zeros((n_theta, n_r));
    for i in 0..n_theta {
        for j in 0..n_r {
            dp_dr[(i, j)] = 2.0 * a * u[(i, j)] - a * v_th[(i, j)] - gg[(i, j)] / r[j];
        }
    }

    order.p = p;
    order.dp_dr = dp_dr;
    order.dp_dth = dp_dth;
    Ok(())
}

/// Absorb the far-field constant of the matching layer order: shift the
/// tangential velocity by `chi a_inf + A(r)` and the pressure by
/// `2a int_0^r [chi a_inf + A]`.  The shifted order satisfies the same
/// identities and moves the wall value by exactly `a_inf`.
pub fn modify_euler(order: &EulerOrder, a_inf: f64, a: f64, chi: &Cutoff) -> EulerOrder {
    let corr = Corrector::new(a_inf, chi);
    let mut out = order.clone();
    let n_theta = out.n_theta;
    for (j, &rj) in order.r_ref.iter().enumerate() {
        let dp = 2.0 * a * corr.pressure_integral(rj, chi);
        let (s0, _, _) = corr.shift(rj, chi);
        for i in 0..n_theta {
            out.p[(i, j)] += dp;
            out.dp_dr[(i, j)] += 2.0 * a * s0;
        }
    }
    out.corrector = Some(corr);
    out
}

/// Build a complete order: harmonic velocities from the trace, then the
/// pressure with the quadratic forcing of the given lower orders.
pub fn higher_order_euler(
    order_index: usize,
    trace: &PeriodicField,
    lower: &[&EulerOrder],
    a: f64,
    r_ref: &[f64],
    chi: &Cutoff,
) -> Result<EulerOrder> {
    let mut order = EulerOrder::harmonic_velocity_solve(trace, r_ref)?;
    euler_pressure_solve(&mut order, order_index, a, lower, chi)?;
    Ok(order)
}
