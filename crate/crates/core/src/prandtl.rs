//! Leading-order nonlinear boundary layer in von Mises variables.
//!
//! The tangential wall mismatch is resolved by the quasilinear heat equation
//! `2 U_theta = (U^2)_{psi psi}` on the strip psi in (-inf, 0].  Writing
//! `Q = U^2 - a^2` and splitting off the constant-coefficient solution `Q0`
//! carrying the wall data, the remainder satisfies the fixed point
//! `Q = L(H(Q))` where `L` inverts `Phi_theta - a Phi_psipsi = Lambda_theta`
//! with zero boundary values and `H` is the pointwise quasilinear defect.
//! The map contracts for small wall perturbation; the converged profile is
//! mapped back to the wall-normal coordinate to yield the layer velocity.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{fft, LayerField, PeriodicField};
use crate::linalg::interp::lagrange_resample;
use crate::linalg::{quad, BandedLu, StencilSet};
use crate::TAU;

/// Wall data and derived rotation constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub alpha: f64,
    pub eta: f64,
    pub f: PeriodicField,
    /// Batchelor-Wood constant a = sqrt(alpha^2 + eta^2/(2 pi) int f^2).
    pub a: f64,
}

impl PhysicalParams {
    pub fn new(alpha: f64, eta: f64, f: PeriodicField) -> Result<Self> {
        let a = batchelor_wood_constant(alpha, eta, &f)?;
        Ok(PhysicalParams { alpha, eta, f, a })
    }

    /// Wall speed alpha + eta f(theta).
    pub fn wall_speed(&self) -> PeriodicField {
        self.f.scale(self.eta).map(|v| v + self.alpha)
    }
}

/// `a = sqrt(alpha^2 + eta^2 / (2 pi) * int f^2 dtheta)`; requires zero-mean
/// f and positive alpha.
pub fn batchelor_wood_constant(alpha: f64, eta: f64, f: &PeriodicField) -> Result<f64> {
    if alpha <= 0.0 {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    if f.mean().abs() > 1e-14 {
        return Err(Error::NonZeroMean(f.mean()));
    }
    let f_sq = f.product(f)?;
    Ok((alpha * alpha + eta * eta * f_sq.quadrature() / TAU).sqrt())
}

/// Wall datum of the von Mises unknown: `g = (alpha + eta f)^2 - a^2`.
/// Zero mean by the definition of `a`.
pub fn boundary_data_g(params: &PhysicalParams) -> Result<PeriodicField> {
    let wall = params.wall_speed();
    let sq = wall.product(&wall)?;
    Ok(sq.map(|v| v - params.a * params.a))
}

/// Decaying solution of the constant-coefficient problem
/// `(Q0)_theta = a (Q0)_psipsi`, `Q0(theta, 0) = g(theta)`: per mode
/// `Q0_k(psi) = g_k exp(alpha_k psi)` with
/// `alpha_k = sqrt(|k| / (2a)) (1 + sgn(k) i)`.
pub fn solve_q0(g: &PeriodicField, u_e1: f64, psi: &[f64]) -> Result<LayerField> {
    if g.mean().abs() > 1e-12 {
        return Err(Error::NonZeroMean(g.mean()));
    }
    let n_theta = g.n_theta();
    let n_psi = psi.len();
    let mut spectral = vec![vec![Complex64::new(0.0, 0.0); n_psi]; n_theta];
    for slot in 0..n_theta {
        let k = fft::wavenumber(slot, n_theta);
        if k == 0 || slot == n_theta / 2 {
            continue;
        }
        let rate = (k.unsigned_abs() as f64 / (2.0 * u_e1)).sqrt();
        let alpha_k = Complex64::new(rate, rate * k.signum() as f64);
        let gk = g.coeff(k);
        for (j, &p) in psi.iter().enumerate() {
            spectral[slot][j] = gk * (alpha_k * p).exp();
        }
    }
    let mut values = Array2::zeros((n_theta, n_psi));
    let mut col = vec![Complex64::new(0.0, 0.0); n_theta];
    for j in 0..n_psi {
        for slot in 0..n_theta {
            col[slot] = spectral[slot][j];
        }
        let back = fft::inverse_complex(&col);
        for i in 0..n_theta {
            values[(i, j)] = back[i].re;
        }
    }
    LayerField::new(psi.to_vec(), values, true)
}

/// The linear solve `Phi_theta - u_e(1) Phi_psipsi = Lambda_theta` with
/// `Phi(theta, 0) = Phi(theta, -psi_max) = 0`, decomposed per Fourier mode
/// into banded complex boundary value problems.  Mode zero maps to zero
/// (the image has zero theta average).  Factorizations are cached, so the
/// operator can be applied repeatedly inside the fixed point.
pub struct LOperator {
    n_theta: usize,
    psi: Vec<f64>,
    factors: Vec<Option<BandedLu>>,
}

impl LOperator {
    pub fn new(n_theta: usize, psi: &[f64], u_e1: f64) -> Result<Self> {
        let n = psi.len();
        let d2 = StencilSet::new(psi, 2, 4);
        let bw = d2.bandwidth();
        let mut factors: Vec<Option<BandedLu>> = Vec::with_capacity(n_theta / 2 + 1);
        // slots 1 .. n_theta/2 - 1; negative modes follow by conjugation
        for k in 0..=n_theta / 2 {
            if k == 0 || k == n_theta / 2 {
                factors.push(None);
                continue;
            }
            let ik = Complex64::new(0.0, k as f64);
            let mut lu = BandedLu::new(n, bw, bw);
            lu.set(0, 0, Complex64::new(1.0, 0.0));
            lu.set(n - 1, n - 1, Complex64::new(1.0, 0.0));
            for j in 1..n - 1 {
                let (start, w) = d2.row(j);
                for (m, &wm) in w.iter().enumerate() {
                    lu.add(j, start + m, Complex64::new(-u_e1 * wm, 0.0));
                }
                lu.add(j, j, ik);
            }
            lu.factor()?;
            factors.push(Some(lu));
        }
        Ok(LOperator {
            n_theta,
            psi: psi.to_vec(),
            factors,
        })
    }

    pub fn apply(&self, lambda: &LayerField) -> Result<LayerField> {
        if lambda.n_theta() != self.n_theta || lambda.y() != &self.psi[..] {
            return Err(Error::GridMismatch);
        }
        let n_theta = self.n_theta;
        let n_psi = self.psi.len();
        // theta transform per psi level
        let mut modes = vec![vec![Complex64::new(0.0, 0.0); n_psi]; n_theta];
        let mut col = vec![0.0; n_theta];
        for j in 0..n_psi {
            for i in 0..n_theta {
                col[i] = lambda.at(i, j);
            }
            let hat = fft::forward(&col);
            for slot in 0..n_theta {
                modes[slot][j] = hat[slot];
            }
        }
        let mut out_modes = vec![vec![Complex64::new(0.0, 0.0); n_psi]; n_theta];
        for k in 1..n_theta / 2 {
            let lu = self.factors[k].as_ref().unwrap();
            let ik = Complex64::new(0.0, k as f64);
            let mut rhs: Vec<Complex64> = (0..n_psi).map(|j| ik * modes[k][j]).collect();
            rhs[0] = Complex64::new(0.0, 0.0);
            rhs[n_psi - 1] = Complex64::new(0.0, 0.0);
            lu.solve(&mut rhs);
            for j in 0..n_psi {
                out_modes[k][j] = rhs[j];
                out_modes[n_theta - k][j] = rhs[j].conj();
            }
        }
        let mut values = Array2::zeros((n_theta, n_psi));
        let mut spec = vec![Complex64::new(0.0, 0.0); n_theta];
        for j in 0..n_psi {
            for slot in 0..n_theta {
                spec[slot] = out_modes[slot][j];
            }
            let back = fft::inverse_complex(&spec);
            for i in 0..n_theta {
                values[(i, j)] = back[i].re;
            }
        }
        LayerField::new(self.psi.clone(), values, true)
    }
}

/// Pointwise quasilinear defect
/// `H(Q) = Q + Q0 - 2 u_e(1) sqrt(Q + Q0 + u_e(1)^2) + 2 u_e(1)^2`.
/// Fails with a layer-separation report when the radicand loses positivity.
pub fn nonlinear_h(q: &LayerField, q0: &LayerField, u_e1: f64) -> Result<LayerField> {
    let u_sq = u_e1 * u_e1;
    let mut min_rad = f64::INFINITY;
    let h = q.zip_with(q0, |qv, q0v| {
        let rad = qv + q0v + u_sq;
        min_rad = min_rad.min(rad);
        qv + q0v - 2.0 * u_e1 * rad.max(0.0).sqrt() + 2.0 * u_sq
    })?;
    if min_rad <= 0.0 {
        return Err(Error::LayerSeparation(min_rad));
    }
    Ok(h.with_decay_flag(true))
}

/// Converged von Mises solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VonMisesSolution {
    pub params: PhysicalParams,
    pub q: LayerField,
    pub q0: LayerField,
    /// U = sqrt(Q + Q0 + a^2) > 0.
    pub u: LayerField,
    pub iterations: usize,
    /// Largest ratio of successive sup-norm increments (0 when it converged
    /// in a single sweep).
    pub final_contraction_ratio: f64,
}

/// Iterate `Q <- L(H(Q))` from `Q = 0` until the sup-norm increment drops
/// below `tol`.  The observed contraction ratio must stay below one.
pub fn solve_prandtl_fixed_point(
    params: &PhysicalParams,
    n_theta: usize,
    psi: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<VonMisesSolution> {
    let a = params.a;
    let g_full = boundary_data_g(params)?;
    let g = resample_modes(&g_full, n_theta)?;
    let q0 = solve_q0(&g, a, psi)?;
    let l_op = LOperator::new(n_theta, psi, a)?;

    let mut q = LayerField::zeros(n_theta, psi.to_vec())?;
    let mut prev_increment: Option<f64> = None;
    let mut worst_ratio: f64 = 0.0;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let h = nonlinear_h(&q, &q0, a)?;
        let q_next = l_op.apply(&h)?;
        let increment = q_next.sub(&q)?.linf();
        if let Some(prev) = prev_increment {
            if prev > 0.0 {
                worst_ratio = worst_ratio.max(increment / prev);
            }
        }
        q = q_next;
        if increment <= tol {
            break;
        }
        if iterations >= max_iter || worst_ratio >= 1.0 {
            return Err(Error::ContractionFailure {
                ratio: worst_ratio,
                iterations,
            });
        }
        prev_increment = Some(increment);
    }

    let mut min_rad = f64::INFINITY;
    let u = q.zip_with(&q0, |qv, q0v| {
        let rad = qv + q0v + a * a;
        min_rad = min_rad.min(rad);
        rad.max(0.0).sqrt()
    })?;
    if min_rad <= 0.0 {
        return Err(Error::LayerSeparation(min_rad));
    }
    Ok(VonMisesSolution {
        params: params.clone(),
        q,
        q0,
        u: u.with_decay_flag(false),
        iterations,
        final_contraction_ratio: worst_ratio,
    })
}

/// Restrict or pad a periodic field to a different mode count.
pub fn resample_modes(f: &PeriodicField, n_theta: usize) -> Result<PeriodicField> {
    if f.n_theta() == n_theta {
        return Ok(f.clone());
    }
    let n = f.n_theta();
    PeriodicField::from_fn(n_theta, |t| {
        let mut acc = f.coeff(0).re;
        for k in 1..n / 2 {
            let c = f.coeff(k as i64);
            acc += 2.0 * (c.re * (k as f64 * t).cos() - c.im * (k as f64 * t).sin());
        }
        acc + f.coeffs()[n / 2].re * ((n / 2) as f64 * t).cos()
    })
}

/// Map the converged von Mises profile back to the wall-normal coordinate:
/// per theta column, `Y(psi) = -int_psi^0 ds / U`, then
/// `u_p0(theta, Y) = U(theta, psi(Y)) - u_e(1)` on the uniform Y grid.
pub fn von_mises_invert(sol: &VonMisesSolution, y_grid: &[f64]) -> Result<LayerField> {
    let a = sol.params.a;
    let n_theta = sol.u.n_theta();
    let psi = sol.u.y();
    let n_psi = psi.len();
    let y_min = y_grid[0];
    let mut values = Array2::zeros((n_theta, y_grid.len()));
    let mut inv_u = vec![0.0; n_psi];
    let mut row = vec![0.0; n_psi];
    for i in 0..n_theta {
        for j in 0..n_psi {
            inv_u[j] = 1.0 / sol.u.at(i, j);
        }
        let cum = quad::cumint(psi, &inv_u);
        let total = cum[n_psi - 1];
        // Y_j = cum_j - total: increasing, ends exactly at 0
        let y_of_psi: Vec<f64> = cum.iter().map(|c| c - total).collect();
        if y_of_psi[0] > y_min {
            return Err(Error::PsiRangeInsufficient {
                reached: y_of_psi[0],
                needed: y_min,
            });
        }
        // resample the deviation, not U itself: Lagrange weight sums carry
        // O(1e-16) noise that would otherwise pollute the zero profile
        for j in 0..n_psi {
            row[j] = sol.u.at(i, j) - a;
        }
        let resampled = lagrange_resample(&y_of_psi, &row, y_grid)?;
        for (j, v) in resampled.into_iter().enumerate() {
            values[(i, j)] = v;
        }
    }
    LayerField::new(y_grid.to_vec(), values, true)
}

/// Radial layer velocity from continuity:
/// `v_p1 = -int_{-inf}^Y d_theta u_p0`.
pub fn compute_vp1(u_p0: &LayerField) -> Result<LayerField> {
    Ok(u_p0.theta_derivative().half_line_integral()?.scale(-1.0))
}

/// Layer pressure from the radial momentum balance:
/// `p_p1 = int_{-inf}^Y [(u_p0)^2 + 2 u_e(1) u_p0]`.
pub fn compute_pp1(u_p0: &LayerField, u_e1: f64) -> Result<LayerField> {
    pp1_integrand(u_p0, u_e1).half_line_integral()
}

/// `(u_p0)^2 + 2 a u_p0`, the exact Y-derivative of p_p1.
pub fn pp1_integrand(u_p0: &LayerField, u_e1: f64) -> LayerField {
    u_p0.map(|v| v * v + 2.0 * u_e1 * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::grids;

    const NTH: usize = 64;

    fn params(alpha: f64, eta: f64) -> PhysicalParams {
        let f = PeriodicField::from_fn(NTH, |t| t.cos()).unwrap();
        PhysicalParams::new(alpha, eta, f).unwrap()
    }

    fn psi_grid(a: f64) -> Vec<f64> {
        grids::uniform_to_zero(a * 22.0, 801)
    }

    #[test]
    fn batchelor_wood_values() {
        // eta = 0: unperturbed rigid rotation
        let p0 = params(1.3, 0.0);
        assert_eq!(p0.a, 1.3);
        // closed form with int cos^2 = pi
        let p1 = params(1.0, 0.1);
        assert!((p1.a - 1.005f64.sqrt()).abs() < 1e-14);
        // dense-quadrature oracle for a two-mode f
        let f = PeriodicField::from_fn(NTH, |t| t.cos() + 0.5 * (3.0 * t).sin()).unwrap();
        let a = batchelor_wood_constant(1.0, 0.05, &f).unwrap();
        let m = 40001;
        let h = TAU / (m - 1) as f64;
        let mut acc = 0.0;
        for i in 0..m - 1 {
            let t = i as f64 * h;
            let v = t.cos() + 0.5 * (3.0 * t).sin();
            acc += v * v * h;
        }
        let oracle = (1.0 + 0.05 * 0.05 * acc / TAU).sqrt();
        assert!((a - oracle).abs() < 1e-9);
        // alpha <= 0 rejected
        assert!(batchelor_wood_constant(0.0, 0.1, &f).is_err());
    }

    #[test]
    fn boundary_data_matches_pointwise_formula() {
        let p = params(1.0, 0.1);
        let g = boundary_data_g(&p).unwrap();
        // g(0) = 2 eta + eta^2 (1 - 1/2) for f = cos
        assert!((g.values()[0] - 0.205).abs() < 1e-13);
        assert!(g.mean().abs() < 1e-14);
        let p0 = params(1.0, 0.0);
        assert!(boundary_data_g(&p0).unwrap().linf() < 1e-15);
    }

    #[test]
    fn q0_single_mode_closed_form() {
        let g = PeriodicField::from_fn(NTH, |t| t.cos()).unwrap();
        let psi = grids::uniform_to_zero(20.0, 801);
        let q0 = solve_q0(&g, 0.5, &psi).unwrap();
        // alpha_1 = 1 + i: amplitude e^psi, phase shift psi
        for (j, &p) in psi.iter().enumerate() {
            for i in (0..NTH).step_by(7) {
                let theta = TAU * i as f64 / NTH as f64;
                let expect = p.exp() * (theta + p).cos();
                assert!((q0.at(i, j) - expect).abs() < 1e-12);
            }
        }
        // zero data -> zero field; nonzero mean rejected
        let z = PeriodicField::zeros(NTH).unwrap();
        assert!(solve_q0(&z, 0.5, &psi).unwrap().linf() == 0.0);
        let bad = PeriodicField::constant(NTH, 1.0).unwrap();
        assert!(solve_q0(&bad, 0.5, &psi).is_err());
    }

    #[test]
    fn q0_satisfies_heat_equation_fd_oracle() {
        let n_theta = 256;
        let g = PeriodicField::from_fn(n_theta, |t| t.cos() + 0.3 * (2.0 * t).sin()).unwrap();
        let u_e1 = 0.8;
        let psi = grids::uniform_to_zero(20.0, 801);
        let q0 = solve_q0(&g, u_e1, &psi).unwrap();
        // independent 4th-order FD in both directions
        let dtheta = TAU / n_theta as f64;
        let dpsi = psi[1] - psi[0];
        let mut worst: f64 = 0.0;
        for i in 0..n_theta {
            let (im2, im1, ip1, ip2) = (
                (i + n_theta - 2) % n_theta,
                (i + n_theta - 1) % n_theta,
                (i + 1) % n_theta,
                (i + 2) % n_theta,
            );
            for j in 2..psi.len() - 2 {
                let dth = (q0.at(im2, j) - 8.0 * q0.at(im1, j) + 8.0 * q0.at(ip1, j)
                    - q0.at(ip2, j))
                    / (12.0 * dtheta);
                let dpp = (-q0.at(i, j - 2) + 16.0 * q0.at(i, j - 1) - 30.0 * q0.at(i, j)
                    + 16.0 * q0.at(i, j + 1)
                    - q0.at(i, j + 2))
                    / (12.0 * dpsi * dpsi);
                worst = worst.max((dth - u_e1 * dpp).abs());
            }
        }
        assert!(worst < 1e-6, "heat equation residual {worst}");
    }

    #[test]
    fn apply_l_zero_for_theta_independent_forcing() {
        let psi = grids::uniform_to_zero(20.0, 401);
        let l_op = LOperator::new(16, &psi, 1.0).unwrap();
        let lambda = LayerField::from_fn(16, psi.clone(), |_, p| p.exp(), true).unwrap();
        let phi = l_op.apply(&lambda).unwrap();
        assert!(phi.linf() < 1e-13);
    }

    #[test]
    fn apply_l_recovers_manufactured_solution() {
        let u_e1 = 0.7;
        let psi = grids::uniform_to_zero(20.0, 801);
        // Phi* = sin(theta) psi e^psi; Lambda = sin(theta) phi + u cos(theta) phi''
        let phi_star =
            LayerField::from_fn(NTH, psi.clone(), |t, p| t.sin() * p * p.exp(), true).unwrap();
        let lambda = LayerField::from_fn(
            NTH,
            psi.clone(),
            |t, p| t.sin() * p * p.exp() + u_e1 * t.cos() * (2.0 + p) * p.exp(),
            true,
        )
        .unwrap();
        let l_op = LOperator::new(NTH, &psi, u_e1).unwrap();
        let phi = l_op.apply(&lambda).unwrap();
        let err = phi.sub(&phi_star).unwrap().linf();
        assert!(err <= 1e-6, "manufactured solution error {err}");
    }

    #[test]
    fn apply_l_discrete_residual_on_q0_forcing() {
        let p = params(1.0, 0.05);
        let g = boundary_data_g(&p).unwrap();
        let psi = psi_grid(p.a);
        let q0 = solve_q0(&g, p.a, &psi).unwrap();
        let l_op = LOperator::new(NTH, &psi, p.a).unwrap();
        let phi = l_op.apply(&q0).unwrap();
        // residual with the solver's own discrete operators
        let d2 = StencilSet::new(&psi, 2, 4);
        let phi_pp = phi.y_derivative_with(&d2);
        let lhs = phi
            .theta_derivative()
            .zip_with(&phi_pp, |a_, b| a_ - p.a * b)
            .unwrap();
        let rhs = q0.theta_derivative();
        let mut worst: f64 = 0.0;
        for i in 0..NTH {
            for j in 1..psi.len() - 1 {
                worst = worst.max((lhs.at(i, j) - rhs.at(i, j)).abs());
            }
        }
        assert!(worst < 1e-8, "discrete residual {worst}");
    }

    #[test]
    fn nonlinear_h_taylor_and_zeros() {
        let psi = grids::uniform_to_zero(20.0, 401);
        let z = LayerField::zeros(8, psi.clone()).unwrap();
        let h0 = nonlinear_h(&z, &z, 1.0).unwrap();
        assert!(h0.linf() < 1e-15);
        // Q = -Q0 pointwise
        let q0 = LayerField::from_fn(8, psi.clone(), |t, p| 0.1 * t.cos() * p.exp(), true).unwrap();
        let hq = nonlinear_h(&q0.scale(-1.0), &q0, 1.0).unwrap();
        assert!(hq.linf() < 1e-15);
        // small-argument Taylor expansion H = x^2/(4 u^2) + O(x^3)
        let u_e1 = 1.0;
        let x = 1e-3;
        let xf = LayerField::from_fn(8, psi.clone(), |_, _| x, false).unwrap();
        let h = nonlinear_h(&xf, &z, u_e1).unwrap();
        let expect = x * x / (4.0 * u_e1 * u_e1);
        assert!((h.at(0, 0) - expect).abs() < 2e-10);
        // layer separation reported
        let big = LayerField::from_fn(8, psi, |_, _| -2.0, false).unwrap();
        assert!(matches!(
            nonlinear_h(&big, &z, 1.0),
            Err(Error::LayerSeparation(_))
        ));
    }

    #[test]
    fn fixed_point_eta_zero_is_trivial() {
        let p = params(1.0, 0.0);
        let psi = psi_grid(p.a);
        let sol = solve_prandtl_fixed_point(&p, NTH, &psi, 1e-11, 25).unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(sol.q.linf() < 1e-15);
        let dev = sol.u.map(|v| v - p.a);
        assert!(dev.linf() < 1e-14);
    }

    #[test]
    fn fixed_point_contracts_at_small_eta() {
        let p = params(1.0, 0.05);
        let psi = psi_grid(p.a);
        let sol = solve_prandtl_fixed_point(&p, NTH, &psi, 1e-11, 25).unwrap();
        assert!(sol.iterations <= 25);
        assert!(
            sol.final_contraction_ratio <= 0.5,
            "ratio {}",
            sol.final_contraction_ratio
        );
        // Batchelor-Wood invariance: d/dpsi int U^2 dtheta = 0
        let u_sq = sol.u.zip_with(&sol.u, |a, b| a * b).unwrap();
        let mean_profile = u_sq.theta_mean();
        let dpsi = StencilSet::new(psi.as_slice(), 1, 4).apply(&mean_profile);
        let worst = dpsi.iter().fold(0.0f64, |m, v| m.max(v.abs())) * TAU;
        assert!(worst <= 1e-8, "BW invariance defect {worst}");
        // wall compatibility: mean U^2 at psi = 0 equals a^2
        let wall_mean = *mean_profile.last().unwrap();
        assert!((wall_mean - p.a * p.a).abs() <= 1e-10);
        // positivity margin used by the linearized orders
        let umin = sol.u.values().iter().fold(f64::INFINITY, |m, &v| m.min(v));
        assert!(umin >= p.alpha / 2.0);
        // quasilinear equation residual: 2 U_theta = (U^2)_psipsi
        let d2 = StencilSet::new(psi.as_slice(), 2, 4);
        let lhs = sol.u.theta_derivative().scale(2.0);
        let rhs = u_sq.y_derivative_with(&d2);
        let mut worst_pde: f64 = 0.0;
        for i in 0..NTH {
            for j in 2..psi.len() - 2 {
                worst_pde = worst_pde.max((lhs.at(i, j) - rhs.at(i, j)).abs());
            }
        }
        assert!(worst_pde < 1e-6, "von Mises residual {worst_pde}");
    }

    #[test]
    fn invert_reproduces_wall_trace_and_trivial_case() {
        let p = params(1.0, 0.05);
        let psi = psi_grid(p.a);
        let sol = solve_prandtl_fixed_point(&p, NTH, &psi, 1e-11, 25).unwrap();
        let y = grids::uniform_to_zero(20.0, 401);
        let u_p0 = von_mises_invert(&sol, &y).unwrap();
        // wall value alpha + eta f - a, exact at Y = 0
        let wall = u_p0.wall_trace();
        for i in 0..NTH {
            let theta = TAU * i as f64 / NTH as f64;
            let expect = 1.0 + 0.05 * theta.cos() - p.a;
            assert!((wall.values()[i] - expect).abs() < 1e-12);
        }
        assert!(u_p0.truncation_defect() < 1e-6);
        // eta = 0 gives the zero profile
        let p0 = params(1.0, 0.0);
        let sol0 = solve_prandtl_fixed_point(&p0, NTH, &psi_grid(1.0), 1e-11, 25).unwrap();
        let u0 = von_mises_invert(&sol0, &y).unwrap();
        assert!(u0.linf() < 1e-13);
    }

    #[test]
    fn invert_rejects_uncovered_y_range() {
        let p = params(1.0, 0.05);
        let psi = grids::uniform_to_zero(5.0, 201);
        let sol = solve_prandtl_fixed_point(&p, NTH, &psi, 1e-10, 25).unwrap();
        let y = grids::uniform_to_zero(20.0, 401);
        assert!(matches!(
            von_mises_invert(&sol, &y),
            Err(Error::PsiRangeInsufficient { .. })
        ));
    }

    #[test]
    fn vp1_and_pp1_structure() {
        let p = params(1.0, 0.05);
        let psi = psi_grid(p.a);
        let sol = solve_prandtl_fixed_point(&p, NTH, &psi, 1e-11, 25).unwrap();
        let divergence_at = |n_y: usize| -> f64 {
            let y = grids::uniform_to_zero(20.0, n_y);
            let u_p0 = von_mises_invert(&sol, &y).unwrap();
            let v_p1 = compute_vp1(&u_p0).unwrap();
            u_p0.theta_derivative()
                .add(&v_p1.y_derivative())
                .unwrap()
                .linf()
        };
        // 4th-order FD oracle: small on the fine grid, ~16x larger when the
        // spacing doubles
        let fine = divergence_at(801);
        let coarse = divergence_at(401);
        assert!(fine < 1e-8, "divergence {fine}");
        assert!(coarse / fine > 8.0, "convergence order: {coarse} vs {fine}");
        let y = grids::uniform_to_zero(20.0, 401);
        let u_p0 = von_mises_invert(&sol, &y).unwrap();
        let v_p1 = compute_vp1(&u_p0).unwrap();
        // theta-independent profile gives zero v
        let flat = LayerField::from_fn(8, y.clone(), |_, yv| yv.exp(), true).unwrap();
        assert!(compute_vp1(&flat).unwrap().linf() < 1e-14);
        // zero theta mean at every Y
        let vmax = v_p1.theta_mean().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(vmax < 1e-12, "v mean {vmax}");
        // pressure: d/dY recovers the integrand (FD oracle on the fine grid),
        // zero at the truncated end
        let y_fine = grids::uniform_to_zero(20.0, 801);
        let u_fine = von_mises_invert(&sol, &y_fine).unwrap();
        let p_fine = compute_pp1(&u_fine, p.a).unwrap();
        let defect = p_fine
            .y_derivative()
            .sub(&pp1_integrand(&u_fine, p.a))
            .unwrap()
            .linf();
        assert!(defect < 1e-8, "pressure derivative defect {defect}");
        let p_p1 = compute_pp1(&u_p0, p.a).unwrap();
        for i in 0..NTH {
            assert_eq!(p_p1.at(i, 0), 0.0);
        }
        // zero layer gives zero pressure
        let z = LayerField::zeros(8, y).unwrap();
        assert!(compute_pp1(&z, 1.0).unwrap().linf() == 0.0);
    }
}
