//! Compose the order-N approximation at a given epsilon and measure how
//! well it satisfies the momentum equations.
//!
//! The radial grid is layer-aligned: outside the cutoff support a coarse
//! interior grid, inside it the exact images r = 1 + eps Y_j of the layer
//! grid, so layer fields are indexed, never interpolated.  Outer orders
//! evaluate analytically from their mode series.  The divergence defect of
//! the truncated sum has the closed form
//!   K = chi eps^{N+1} [v + Y d_Y v]_{N+1} + r chi' sum_i eps^i v_i
//! (the top-index radial velocity wall-anchored), and the tangential
//! corrector h with d_th h = -K restores discrete divergence to roundoff.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::ExpansionStack;
use crate::fields::layer::theta_derivative_array;
use crate::fields::{fft, Component, DiskField};
use crate::linalg::interp::lagrange_resample;
use crate::linalg::{quad, StencilSet};
use crate::TAU;

/// Spectral theta-antiderivative: h with d_th h = K, zero theta mean.
/// Rejects K with nonzero mean at any radius.
pub fn corrector_h(k: &DiskField) -> Result<DiskField> {
    let n_theta = k.n_theta();
    let n_r = k.n_r();
    let scale = k.linf().max(1e-300);
    let mut values = Array2::zeros((n_theta, n_r));
    let mut col = vec![0.0; n_theta];
    for j in 0..n_r {
        for i in 0..n_theta {
            col[i] = k.at(i, j);
        }
        let mut hat = fft::forward(&col);
        if hat[0].re.abs() > 1e-10 * scale.max(1.0) {
            return Err(Error::NonZeroMean(hat[0].re));
        }
        for slot in 0..n_theta {
            let kk = fft::wavenumber(slot, n_theta);
            if kk == 0 || slot == n_theta / 2 {
                hat[slot] = Complex64::new(0.0, 0.0);
            } else {
                hat[slot] /= Complex64::new(0.0, kk as f64);
            }
        }
        let vals = fft::inverse(&hat);
        for i in 0..n_theta {
            values[(i, j)] = vals[i];
        }
    }
    DiskField::new(k.r().to_vec(), values, Component::Scalar)
}

/// Composite approximation at one (order, epsilon) together with the exact
/// first/second radial derivatives used by the residual evaluation.
pub struct Composite {
    pub order: usize,
    pub epsilon: f64,
    pub r: Vec<f64>,
    /// layer-grid index of each radial node, None in the interior
    pub y_index: Vec<Option<usize>>,
    pub u: DiskField,
    pub v: DiskField,
    pub p: DiskField,
    pub h: DiskField,
    du: Array2<f64>,
    d2u: Array2<f64>,
    dv: Array2<f64>,
    d2v: Array2<f64>,
    dp: Array2<f64>,
    p_th: Array2<f64>,
    /// max |d_th u + v + r d_r v| over the grid, with the stored derivatives
    pub divergence_max: f64,
    /// true when the layer grid has fewer than 8 nodes per epsilon
    pub under_resolved: bool,
}

/// Diagnostics of the composed fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompositeChecks {
    pub divergence_max: f64,
    pub wall_u_defect: f64,
    pub wall_v_defect: f64,
    pub v_mean_max: f64,
}

impl Composite {
    /// Assemble the order-N composite at `epsilon`.  `n_interior` controls
    /// the coarse grid below the cutoff support.
    pub fn assemble(
        stack: &ExpansionStack,
        order: usize,
        epsilon: f64,
        n_interior: usize,
    ) -> Result<Composite> {
        assert!(order <= stack.order, "stack built to order {}", stack.order);
        let n_theta = stack.n_theta();
        let y = stack.y();
        let n_y = y.len();
        let a = stack.params.a;
        let chi = &stack.chi;
        let y_max = -y[0];
        if 0.5 / epsilon > y_max + 1e-12 {
            return Err(Error::YRangeInsufficient {
                epsilon,
                needed: 0.5 / epsilon,
            });
        }

        // union grid: interior nodes below the first layer image
        let mut r: Vec<f64> = Vec::new();
        let mut y_index: Vec<Option<usize>> = Vec::new();
        let first_layer = y
            .iter()
            .position(|&yj| 1.0 + epsilon * yj >= 0.5 - 1e-13)
            .unwrap();
        let r_layer0 = 1.0 + epsilon * y[first_layer];
        let r_min = 1e-6;
        for m in 0..n_interior {
            let rr = r_min + (r_layer0 - r_min) * m as f64 / n_interior as f64;
            r.push(rr);
            y_index.push(None);
        }
        for j in first_layer..n_y {
            r.push(1.0 + epsilon * y[j]);
            y_index.push(Some(j));
        }
        let n_r = r.len();
        let last = n_r - 1;
        r[last] = 1.0;

        // epsilon-weighted layer sums and their Y-derivatives
        let mut lu: Array2<f64> = Array2::zeros((n_theta, n_y));
        let mut lu_y: Array2<f64> = Array2::zeros((n_theta, n_y));
        let mut lu_yy: Array2<f64> = Array2::zeros((n_theta, n_y));
        for i in 0..=order {
            let w = epsilon.powi(i as i32);
            for (idx, v) in lu.indexed_iter_mut() {
                *v += w * stack.layer.u_tilde[i].at(idx.0, idx.1);
            }
            for (idx, v) in lu_y.indexed_iter_mut() {
                *v += w * stack.layer.du[i].at(idx.0, idx.1);
            }
            for (idx, v) in lu_yy.indexed_iter_mut() {
                *v += w * stack.layer.d2u[i].at(idx.0, idx.1);
            }
        }
        let d1y = StencilSet::new(y, 1, 4);
        let mut lv: Array2<f64> = Array2::zeros((n_theta, n_y));
        let mut lv_y: Array2<f64> = Array2::zeros((n_theta, n_y));
        let mut lv_yy: Array2<f64> = Array2::zeros((n_theta, n_y));
        let mut lp: Array2<f64> = Array2::zeros((n_theta, n_y));
        let mut lp_y: Array2<f64> = Array2::zeros((n_theta, n_y));
        for i in 1..=order + 1 {
            let w = epsilon.powi(i as i32);
            let top = i == order + 1;
            let vf = &stack.layer.v[i];
            let dvf = &stack.layer.dv[i];
            let d2vf = dvf.y_derivative_with(&d1y);
            let wall = vf.wall_trace();
            for ii in 0..n_theta {
                let anchor = if top { wall.values()[ii] } else { 0.0 };
                for j in 0..n_y {
                    if i <= order || top {
                        lv[(ii, j)] += w * (vf.at(ii, j) - anchor);
                        lv_y[(ii, j)] += w * dvf.at(ii, j);
                        lv_yy[(ii, j)] += w * d2vf.at(ii, j);
                    }
                }
            }
            for (idx, v) in lp.indexed_iter_mut() {
                *v += w * stack.layer.p[i].at(idx.0, idx.1);
            }
            for (idx, v) in lp_y.indexed_iter_mut() {
                *v += w * stack.layer.dp[i].at(idx.0, idx.1);
            }
        }

        // outer sums sampled on the union grid
        let mut ue: Array2<f64> = Array2::zeros((n_theta, n_r));
        let mut due: Array2<f64> = Array2::zeros((n_theta, n_r));
        let mut d2ue: Array2<f64> = Array2::zeros((n_theta, n_r));
        let mut ve: Array2<f64> = Array2::zeros((n_theta, n_r));
        let mut dve: Array2<f64> = Array2::zeros((n_theta, n_r));
        let mut d2ve: Array2<f64> = Array2::zeros((n_theta, n_r));
        let mut pe: Array2<f64> = Array2::zeros((n_theta, n_r));
        let mut dpe: Array2<f64> = Array2::zeros((n_theta, n_r));
        let mut pe_th: Array2<f64> = Array2::zeros((n_theta, n_r));
        for i in 0..n_theta {
            for (j, &rr) in r.iter().enumerate() {
                ue[(i, j)] = a * rr;
                due[(i, j)] = a;
                pe[(i, j)] = 0.5 * a * a * rr * rr;
                dpe[(i, j)] = a * a * rr;
            }
        }
        for (iord, order_data) in stack.euler.iter().take(order).enumerate() {
            let w = epsilon.powi(iord as i32 + 1);
            let add = |dst: &mut Array2<f64>, src: &Array2<f64>| {
                for (idx, v) in dst.indexed_iter_mut() {
                    *v += w * src[idx];
                }
            };
            add(&mut ue, &order_data.sample_u(&r, 0, chi));
            add(&mut due, &order_data.sample_u(&r, 1, chi));
            add(&mut d2ue, &order_data.sample_u(&r, 2, chi));
            add(&mut ve, &order_data.sample_v(&r, 0));
            add(&mut dve, &order_data.sample_v(&r, 1));
            add(&mut d2ve, &order_data.sample_v(&r, 2));
            add(&mut pe, &order_data.sample_p(&r, 0));
            add(&mut dpe, &order_data.sample_p(&r, 1));
            add(&mut pe_th, &order_data.sample_p(&r, 2));
        }

        // compose values and radial derivatives
        let ieps = 1.0 / epsilon;
        let mut u = ue.clone();
        let mut du = due.clone();
        let mut d2u = d2ue.clone();
        let mut v = ve.clone();
        let mut dv = dve.clone();
        let mut d2v = d2ve.clone();
        let mut p = pe.clone();
        let mut dp = dpe.clone();
        let mut k_defect: Array2<f64> = Array2::zeros((n_theta, n_r));
        let w_top = epsilon.powi(order as i32 + 1);
        let top_wall = stack.layer.v[order + 1].wall_trace();
        for (j, &rr) in r.iter().enumerate() {
            let Some(jy) = y_index[j] else { continue };
            let (c, c1, c2) = (chi.chi(rr), chi.dchi(rr), chi.d2chi(rr));
            let yj = y[jy];
            for i in 0..n_theta {
                u[(i, j)] += c * lu[(i, jy)];
                du[(i, j)] += c1 * lu[(i, jy)] + c * ieps * lu_y[(i, jy)];
                d2u[(i, j)] += c2 * lu[(i, jy)]
                    + 2.0 * c1 * ieps * lu_y[(i, jy)]
                    + c * ieps * ieps * lu_yy[(i, jy)];
                v[(i, j)] += c * lv[(i, jy)];
                dv[(i, j)] += c1 * lv[(i, jy)] + c * ieps * lv_y[(i, jy)];
                d2v[(i, j)] += c2 * lv[(i, jy)]
                    + 2.0 * c1 * ieps * lv_y[(i, jy)]
                    + c * ieps * ieps * lv_yy[(i, jy)];
                p[(i, j)] += c * c * lp[(i, jy)];
                dp[(i, j)] += 2.0 * c * c1 * lp[(i, jy)] + c * c * ieps * lp_y[(i, jy)];
                // divergence defect of the truncation
                let v_top = stack.layer.v[order + 1].at(i, jy) - top_wall.values()[i];
                let dv_top = stack.layer.dv[order + 1].at(i, jy);
                let mut chi_prime_sum = w_top * v_top;
                for m in 1..=order {
                    chi_prime_sum += epsilon.powi(m as i32) * stack.layer.v[m].at(i, jy);
                }
                k_defect[(i, j)] =
                    c * w_top * (v_top + yj * dv_top) + rr * c1 * chi_prime_sum;
            }
        }

        // corrector h: d_th h = -K, zero mean, h(theta, 1) = 0 because the
        // defect vanishes on the wall row by construction
        let k_field = DiskField::new(r.clone(), k_defect.mapv(|x| -x), Component::Scalar)?;
        let h = corrector_h(&k_field)?;
        let d1r = StencilSet::new(&r, 1, 4);
        let d2r = StencilSet::new(&r, 2, 4);
        let mut row = vec![0.0; n_r];
        let mut hr = vec![0.0; n_r];
        for i in 0..n_theta {
            for j in 0..n_r {
                row[j] = h.at(i, j);
            }
            d1r.apply_into(&row, &mut hr);
            for j in 0..n_r {
                u[(i, j)] += h.at(i, j);
                du[(i, j)] += hr[j];
            }
            d2r.apply_into(&row, &mut hr);
            for j in 0..n_r {
                d2u[(i, j)] += hr[j];
            }
        }

        // theta derivative of the pressure: outer part analytic, layer part
        // spectral, h enters u only
        let lp_th = theta_derivative_array(&lp);
        let mut p_th = pe_th;
        for (j, &rr) in r.iter().enumerate() {
            let Some(jy) = y_index[j] else { continue };
            let c = chi.chi(rr);
            for i in 0..n_theta {
                p_th[(i, j)] += c * c * lp_th[(i, jy)];
            }
        }

        // discrete divergence with the stored derivatives
        let u_th = theta_derivative_array(&u);
        let mut divergence_max: f64 = 0.0;
        for i in 0..n_theta {
            for j in 0..n_r {
                let d = u_th[(i, j)] + v[(i, j)] + r[j] * dv[(i, j)];
                divergence_max = divergence_max.max(d.abs());
            }
        }

        let under_resolved = (y[1] - y[0]) > 1.0 / 8.0;
        Ok(Composite {
            order,
            epsilon,
            y_index,
            u: DiskField::new(r.clone(), u, Component::Tangential)?,
            v: DiskField::new(r.clone(), v, Component::Radial)?,
            p: DiskField::new(r.clone(), p, Component::Scalar)?,
            h,
            du,
            d2u,
            dv,
            d2v,
            dp,
            p_th,
            divergence_max,
            under_resolved,
            r,
        })
    }

    pub fn checks(&self, stack: &ExpansionStack) -> CompositeChecks {
        let wall_speed = stack.params.wall_speed();
        let wall_u = self.u.wall_trace();
        let wall_v = self.v.wall_trace();
        let mut wall_u_defect: f64 = 0.0;
        for (aa, bb) in wall_u.values().iter().zip(wall_speed.values()) {
            wall_u_defect = wall_u_defect.max((aa - bb).abs());
        }
        let v_mean_max = self
            .v
            .theta_mean()
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        CompositeChecks {
            divergence_max: self.divergence_max,
            wall_u_defect,
            wall_v_defect: wall_v.linf(),
            v_mean_max,
        }
    }

    /// Values of the composite tangential velocity on an arbitrary radial
    /// grid (layer parts interpolated); used for seeding and error norms.
    pub fn eval_u_on(&self, r_dst: &[f64]) -> Array2<f64> {
        let n_theta = self.u.n_theta();
        let mut out = Array2::zeros((n_theta, r_dst.len()));
        let mut row = vec![0.0; self.r.len()];
        for i in 0..n_theta {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.u.at(i, j);
            }
            let vals = lagrange_resample(&self.r, &row, r_dst).unwrap();
            for (j, v) in vals.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }
}

/// Momentum residuals of the composite and their weighted norms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualReport {
    pub epsilon: f64,
    pub order: usize,
    /// (iint R_u^2 / r dtheta dr)^{1/2}
    pub norm_u: f64,
    pub norm_v: f64,
    /// combined norm restricted to r < 1/2 and r >= 1/2
    pub norm_interior: f64,
    pub norm_layer: f64,
    pub max_abs: f64,
    pub under_resolved: bool,
}

/// Evaluate both momentum residuals of the composed fields.
pub fn evaluate_residual(c: &Composite) -> ResidualReport {
    let n_theta = c.u.n_theta();
    let n_r = c.r.len();
    let eps2 = c.epsilon * c.epsilon;
    let u = c.u.values();
    let v = c.v.values();
    let u_th = theta_derivative_array(u);
    let u_thth = theta_derivative_array(&u_th);
    let v_th = theta_derivative_array(v);
    let v_thth = theta_derivative_array(&v_th);
    let mut ru: Array2<f64> = Array2::zeros((n_theta, n_r));
    let mut rv: Array2<f64> = Array2::zeros((n_theta, n_r));
    for i in 0..n_theta {
        for j in 0..n_r {
            let rr = c.r[j];
            ru[(i, j)] = u[(i, j)] * u_th[(i, j)]
                + rr * v[(i, j)] * c.du[(i, j)]
                + u[(i, j)] * v[(i, j)]
                + c.p_th[(i, j)]
                - eps2
                    * (rr * c.d2u[(i, j)]
                        + c.du[(i, j)]
                        + u_thth[(i, j)] / rr
                        + 2.0 * v_th[(i, j)] / rr
                        - u[(i, j)] / rr);
            rv[(i, j)] = u[(i, j)] * v_th[(i, j)] + rr * v[(i, j)] * c.dv[(i, j)]
                - u[(i, j)] * u[(i, j)]
                + rr * c.dp[(i, j)]
                - eps2
                    * (rr * c.d2v[(i, j)] + v_thth[(i, j)] / rr - 2.0 * u_th[(i, j)] / rr
                        + c.dv[(i, j)]
                        - v[(i, j)] / rr);
        }
    }

    // weighted norms (iint R^2 / r)^{1/2}: exact theta quadrature, trapezoid
    // in r
    let weighted = |f: &Array2<f64>, lo: f64, hi: f64| -> f64 {
        let mut prof = vec![0.0; n_r];
        for j in 0..n_r {
            let mut acc = 0.0;
            for i in 0..n_theta {
                acc += f[(i, j)] * f[(i, j)];
            }
            prof[j] = acc * TAU / n_theta as f64 / c.r[j];
        }
        let mut masked_r = Vec::new();
        let mut masked_p = Vec::new();
        for j in 0..n_r {
            if c.r[j] >= lo && c.r[j] <= hi {
                masked_r.push(c.r[j]);
                masked_p.push(prof[j]);
            }
        }
        if masked_r.len() < 2 {
            return 0.0;
        }
        quad::trapezoid(&masked_r, &masked_p).max(0.0).sqrt()
    };
    let norm_u = weighted(&ru, 0.0, 1.0);
    let norm_v = weighted(&rv, 0.0, 1.0);
    let both_sq = |lo: f64, hi: f64| -> f64 {
        let a = weighted(&ru, lo, hi);
        let b = weighted(&rv, lo, hi);
        (a * a + b * b).sqrt()
    };
    let max_abs = ru
        .iter()
        .chain(rv.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    ResidualReport {
        epsilon: c.epsilon,
        order: c.order,
        norm_u,
        norm_v,
        norm_interior: both_sq(0.0, 0.5),
        norm_layer: both_sq(0.5, 1.0),
        max_abs,
        under_resolved: c.under_resolved,
    }
}

/// Least-squares slope of log2(norm) against log2(eps): the measured
/// convergence order of a residual ladder.
pub fn log2_slope(epsilons: &[f64], norms: &[f64]) -> f64 {
    assert_eq!(epsilons.len(), norms.len());
    let n = epsilons.len() as f64;
    let xs: Vec<f64> = epsilons.iter().map(|e| e.log2()).collect();
    let ys: Vec<f64> = norms.iter().map(|v| v.max(1e-300).log2()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, yv) in xs.iter().zip(&ys) {
        num += (x - mx) * (yv - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::{ExpansionConfig, ExpansionStack};
    use crate::fields::PeriodicField;
    use crate::prandtl::PhysicalParams;
    use once_cell::sync::Lazy;

    fn stack(eta: f64, order: usize) -> ExpansionStack {
        let f = PeriodicField::from_fn(64, |t| t.cos()).unwrap();
        let p = PhysicalParams::new(1.0, eta, f).unwrap();
        ExpansionStack::build(&p, order, &ExpansionConfig::default()).unwrap()
    }

    static STACK: Lazy<ExpansionStack> = Lazy::new(|| stack(0.05, 2));

    #[test]
    fn corrector_h_single_mode() {
        let r: Vec<f64> = (1..=64).map(|i| i as f64 / 64.0).collect();
        let k = DiskField::from_fn(16, r.clone(), Component::Scalar, |t, rr| {
            t.cos() * (1.0 - rr)
        })
        .unwrap();
        let h = corrector_h(&k).unwrap();
        for i in 0..16 {
            let theta = TAU * i as f64 / 16.0;
            for j in [0usize, 30, 63] {
                let expect = theta.sin() * (1.0 - r[j]);
                assert!((h.at(i, j) - expect).abs() < 1e-13);
            }
        }
        // d_th h - K to spectral accuracy
        let defect = h.theta_derivative().sub(&k).unwrap().linf();
        assert!(defect < 1e-12);
        // zero input, zero output; nonzero mean rejected
        let z = DiskField::zeros(16, r.clone(), Component::Scalar).unwrap();
        assert!(corrector_h(&z).unwrap().linf() == 0.0);
        let bad = DiskField::from_fn(16, r, Component::Scalar, |_, rr| 1.0 - rr).unwrap();
        assert!(corrector_h(&bad).is_err());
    }

    #[test]
    fn eta_zero_composite_is_rigid_rotation() {
        let st = stack(0.0, 2);
        for eps in [0.1, 0.05] {
            let c = Composite::assemble(&st, 2, eps, 96).unwrap();
            // u = a r exactly, v = 0
            let mut worst: f64 = 0.0;
            for i in 0..st.n_theta() {
                for (j, &rr) in c.r.iter().enumerate() {
                    worst = worst.max((c.u.at(i, j) - rr).abs());
                }
            }
            assert!(worst < 1e-9, "u deviation {worst}");
            assert!(c.v.linf() < 1e-9);
            let rep = evaluate_residual(&c);
            assert!(rep.norm_u <= 1e-11 && rep.norm_v <= 1e-11,
                "residuals {} {}", rep.norm_u, rep.norm_v);
            assert!(rep.max_abs <= 1e-9, "pointwise residual {}", rep.max_abs);
        }
    }

    #[test]
    fn composite_invariants_at_small_eta() {
        for order in 0..=2usize {
            let c = Composite::assemble(&STACK, order, 0.05, 96).unwrap();
            let checks = c.checks(&STACK);
            assert!(checks.divergence_max <= 1e-9, "divergence {} at order {order}", checks.divergence_max);
            assert!(checks.wall_u_defect <= 1e-10, "wall u {} at order {order}", checks.wall_u_defect);
            assert!(checks.wall_v_defect <= 1e-10, "wall v {} at order {order}", checks.wall_v_defect);
            assert!(checks.v_mean_max <= 1e-10, "v mean {} at order {order}", checks.v_mean_max);
        }
    }

    #[test]
    fn y_range_guard() {
        assert!(matches!(
            Composite::assemble(&STACK, 2, 0.02, 96),
            Err(Error::YRangeInsufficient { .. })
        ));
    }

    #[test]
    fn residual_decreases_with_epsilon_and_order() {
        let ladder = [0.1, 0.05];
        let mut norms_by_order = Vec::new();
        for order in 0..=2usize {
            let mut norms = Vec::new();
            for &eps in &ladder {
                let c = Composite::assemble(&STACK, order, eps, 96).unwrap();
                let rep = evaluate_residual(&c);
                norms.push((rep.norm_u * rep.norm_u + rep.norm_v * rep.norm_v).sqrt());
            }
            assert!(norms[1] < norms[0], "order {order}: {norms:?}");
            norms_by_order.push(norms);
        }
        // higher order gives smaller residual at fixed epsilon
        assert!(norms_by_order[1][1] < norms_by_order[0][1]);
        assert!(norms_by_order[2][1] < norms_by_order[1][1]);
    }
}
