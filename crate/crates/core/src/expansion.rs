//! Build the full expansion hierarchy once per parameter set: the von Mises
//! layer solve, then alternately an outer order driven by the layer mass
//! flux and a linearized layer order driven by the outer wall values, with
//! far-field constants absorbed into cutoff-shifted outer corrections.
//! Everything here is epsilon-independent; the composite assembles it at a
//! given epsilon.

use serde::{Deserialize, Serialize};

use crate::cutoff::Cutoff;
use crate::error::Result;
use crate::euler::{higher_order_euler, modify_euler, EulerOrder};
use crate::fields::{grids, LayerField};
use crate::linalg::StencilSet;
use crate::prandtl::{
    compute_pp1, pp1_integrand, solve_prandtl_fixed_point, von_mises_invert, PhysicalParams,
    VonMisesSolution,
};
use crate::prandtl_linear::{
    assemble_f1, assemble_f2, assemble_g1, assemble_g2, recover_v_next, solve_linearized_prandtl,
    LayerStack, WallData,
};

/// Grid and tolerance knobs of the hierarchy build.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionConfig {
    pub n_theta: usize,
    pub y_max: f64,
    pub n_y: usize,
    /// psi_max = a (y_max + psi_pad): the pad keeps the von Mises image of
    /// the psi strip covering the whole Y grid for eta > 0.
    pub psi_pad: f64,
    pub n_psi: usize,
    /// reference radial grid size for the outer orders
    pub n_r_euler: usize,
    pub fixed_point_tol: f64,
    pub fixed_point_max_iter: usize,
    pub krylov_tol: f64,
    pub krylov_max_iter: usize,
    pub delta: f64,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        ExpansionConfig {
            n_theta: 64,
            y_max: 20.0,
            n_y: 401,
            psi_pad: 2.0,
            n_psi: 801,
            n_r_euler: 513,
            fixed_point_tol: 1e-11,
            fixed_point_max_iter: 25,
            krylov_tol: 1e-12,
            krylov_max_iter: 300,
            delta: 0.0,
        }
    }
}

/// Per-order linear solve statistics, kept for the build log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinStats {
    pub order: usize,
    pub gmres_iterations: usize,
    pub residual: f64,
    pub a_inf: f64,
}

/// The epsilon-independent hierarchy through order N.
pub struct ExpansionStack {
    pub params: PhysicalParams,
    pub order: usize,
    pub chi: Cutoff,
    pub von_mises: VonMisesSolution,
    pub layer: LayerStack,
    /// Modified outer orders 1..=N.
    pub euler: Vec<EulerOrder>,
    pub r_euler: Vec<f64>,
    pub lin_stats: Vec<LinStats>,
}

impl ExpansionStack {
    /// Run the whole pipeline.  Stages are tagged so failures name the
    /// culprit.
    pub fn build(params: &PhysicalParams, order: usize, cfg: &ExpansionConfig) -> Result<Self> {
        assert!(order <= 2, "forcing assembly is implemented through order 2");
        let chi = Cutoff;
        let a = params.a;
        let y = grids::uniform_to_zero(cfg.y_max, cfg.n_y);
        let psi = grids::uniform_to_zero(a * (cfg.y_max + cfg.psi_pad), cfg.n_psi);
        let r_euler = grids::wall_clustered(cfg.n_r_euler, 2.0, 1e-6);
        let d1 = StencilSet::new(&y, 1, 4);
        let d2 = StencilSet::new(&y, 2, 4);

        // leading order: nonlinear layer in von Mises variables
        let von_mises = solve_prandtl_fixed_point(
            params,
            cfg.n_theta,
            &psi,
            cfg.fixed_point_tol,
            cfg.fixed_point_max_iter,
        )
        .map_err(|e| e.in_stage("prandtl fixed point"))?;
        let u_p0 = von_mises_invert(&von_mises, &y).map_err(|e| e.in_stage("von Mises inversion"))?;

        let mut layer = LayerStack::new(y.clone());
        layer.push_u(u_p0, 0.0, &d1, &d2);
        let zero = LayerField::zeros(cfg.n_theta, y.clone())?;
        layer.v.push(zero.clone());
        layer.dv.push(zero.clone());
        layer.p.push(zero.clone());
        layer.dp.push(zero.clone());

        // v_p^(1) and p_p^(1)
        let (v1, dv1) = recover_v_next(&layer.u_tilde[0], &layer.v[0], &layer.dv[0])
            .map_err(|e| e.in_stage("layer continuity, order 1"))?;
        layer.v.push(v1);
        layer.dv.push(dv1);
        let p1 = compute_pp1(&layer.u[0], a).map_err(|e| e.in_stage("layer pressure, order 1"))?;
        layer.dp.push(pp1_integrand(&layer.u[0], a));
        layer.p.push(p1);

        let mut euler: Vec<EulerOrder> = Vec::new();
        let mut lin_stats = Vec::new();
        let wall_couette = WallData::couette(a, cfg.n_theta);

        for i in 1..=order {
            // outer order i from the layer mass flux
            let trace = layer.v[i].wall_trace().scale(-1.0);
            let lower: Vec<&EulerOrder> = euler.iter().collect();
            let euler_raw = higher_order_euler(i, &trace, &lower, a, &r_euler, &chi)
                .map_err(|e| e.in_stage("outer solve"))?;
            let wall_raw = WallData::from_euler(&euler_raw, &chi);

            // forcing of the linearized layer order
            let forcing = match i {
                1 => assemble_f1(&layer, &wall_raw, a)?,
                2 => {
                    let wall_mod1 = WallData::from_euler(&euler[0], &chi);
                    assemble_f2(&layer, &[wall_couette.clone(), wall_mod1, wall_raw.clone()])?
                }
                _ => unreachable!(),
            };

            // linearized layer solve around ubar = a + u_p0 and
            // vbar = v_e^(1)(theta,1) + v_p^(1)
            let ubar = layer.u[0].map(|v| a + v);
            let wall_ve1 = if i == 1 {
                wall_raw.v[0].clone()
            } else {
                WallData::from_euler(&euler[0], &chi).v[0].clone()
            };
            let vbar = layer.v[1].add_separable(&wall_ve1, &vec![1.0; y.len()])?;
            let wall_bc = euler_raw.u_wall_deriv(0, &chi).scale(-1.0);
            let sol = solve_linearized_prandtl(
                a,
                &ubar,
                &layer.du[0],
                &vbar,
                &forcing.field,
                &wall_bc,
                &layer.v[i],
                cfg.delta,
                cfg.krylov_tol,
                cfg.krylov_max_iter,
            )
            .map_err(|e| e.in_stage("linearized layer solve"))?;
            lin_stats.push(LinStats {
                order: i,
                gmres_iterations: sol.gmres_iterations,
                residual: sol.residual,
                a_inf: sol.a_inf,
            });
            layer.push_u(sol.u, sol.a_inf, &d1, &d2);

            // absorb the far-field constant into the outer order
            let euler_mod = modify_euler(&euler_raw, sol.a_inf, a, &chi);
            euler.push(euler_mod);

            // layer pressure of index i+1
            let g = match i {
                1 => {
                    let wall_mod1 = WallData::from_euler(&euler[0], &chi);
                    assemble_g1(&layer, &wall_mod1, a)?
                }
                2 => {
                    let wall_mod1 = WallData::from_euler(&euler[0], &chi);
                    let wall_mod2 = WallData::from_euler(&euler[1], &chi);
                    assemble_g2(&layer, &[wall_couette.clone(), wall_mod1, wall_mod2], a)?
                }
                _ => unreachable!(),
            };
            let p_next = g
                .field
                .half_line_integral()
                .map_err(|e| e.in_stage("layer pressure"))?;
            layer.p.push(p_next);
            layer.dp.push(g.field);

            // radial layer velocity of index i+1
            let (v_next, dv_next) = recover_v_next(&layer.u_tilde[i], &layer.v[i], &layer.dv[i])
                .map_err(|e| e.in_stage("layer continuity"))?;
            layer.v.push(v_next);
            layer.dv.push(dv_next);
        }

        Ok(ExpansionStack {
            params: params.clone(),
            order,
            chi,
            von_mises,
            layer,
            euler,
            r_euler,
            lin_stats,
        })
    }

    pub fn n_theta(&self) -> usize {
        self.layer.n_theta()
    }

    pub fn y(&self) -> &[f64] {
        &self.layer.y
    }
}
