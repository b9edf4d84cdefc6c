//! The three pipeline commands behind the CLI: build the expansion and
//! snapshot it, sweep the composite residual over the epsilon ladder, and
//! validate against the Navier-Stokes solver.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::composite::{evaluate_residual, log2_slope, Composite};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::expansion::ExpansionStack;
use crate::linalg::interp::lagrange_resample;
use crate::ns::{
    error_norms, interior_vorticity_deviation, seed_from_composite, solve_steady_ns,
    streamline_flux_diagnostic, NsGrid, NsSolution, NsState,
};
use crate::report::{build_log, csv_table, fmt_float, Criterion, Snapshot, Summary};

/// Build the epsilon-independent hierarchy, write `snapshot.json` and
/// `build_log.txt`.
pub fn cmd_expand(cfg: &RunConfig, out: &Path) -> Result<Snapshot> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let params = cfg.physical_params()?;
    let stack = ExpansionStack::build(&params, cfg.order, &cfg.expansion_config())?;
    let snapshot = Snapshot::from_stack(&stack);
    fs::write(out.join("snapshot.json"), serde_json::to_string(&snapshot)?)?;
    fs::write(out.join("build_log.txt"), build_log(&stack))?;
    Ok(snapshot)
}

/// Residual study row.
#[derive(Debug, Clone)]
pub struct ResidualRow {
    pub epsilon: f64,
    pub order: usize,
    pub res_u: f64,
    pub res_v: f64,
    pub res_interior: f64,
    pub res_layer: f64,
    pub slope_so_far: Option<f64>,
    pub warn: bool,
}

/// Sweep the residual over the ladder for every order up to the configured
/// one; write `residual.csv` and return the rows.
pub fn cmd_residual(cfg: &RunConfig, out: &Path) -> Result<Vec<ResidualRow>> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let params = cfg.physical_params()?;
    let stack = ExpansionStack::build(&params, cfg.order, &cfg.expansion_config())?;
    let mut rows = Vec::new();
    for order in 0..=cfg.order {
        let mut prev: Option<(f64, f64)> = None;
        for &eps in &cfg.epsilons {
            let comp = Composite::assemble(&stack, order, eps, cfg.grid.n_interior)?;
            let rep = evaluate_residual(&comp);
            let combined = (rep.norm_u * rep.norm_u + rep.norm_v * rep.norm_v).sqrt();
            let slope = prev.map(|(pe, pn)| (pn / combined).log2() / (pe / eps).log2());
            rows.push(ResidualRow {
                epsilon: eps,
                order,
                res_u: rep.norm_u,
                res_v: rep.norm_v,
                res_interior: rep.norm_interior,
                res_layer: rep.norm_layer,
                slope_so_far: slope,
                warn: rep.under_resolved,
            });
            prev = Some((eps, combined));
        }
    }
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt_float(r.epsilon),
                r.order.to_string(),
                fmt_float(r.res_u),
                fmt_float(r.res_v),
                fmt_float(r.res_interior),
                fmt_float(r.res_layer),
                r.slope_so_far.map(fmt_float).unwrap_or_default(),
                if r.warn { "under_resolved".to_string() } else { String::new() },
            ]
        })
        .collect();
    fs::write(
        out.join("residual.csv"),
        csv_table(
            &["epsilon", "order", "res_u_weighted", "res_v_weighted", "res_interior", "res_layer", "slope_so_far", "warn"],
            &table,
        ),
    )?;
    Ok(rows)
}

/// Measured slope of the combined weighted residual for one order across
/// the whole ladder (least squares on the log-log points).
pub fn residual_slope(rows: &[ResidualRow], order: usize) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.order == order)
        .map(|r| (r.epsilon, (r.res_u * r.res_u + r.res_v * r.res_v).sqrt()))
        .collect();
    let eps: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let norms: Vec<f64> = pts.iter().map(|p| p.1).collect();
    log2_slope(&eps, &norms)
}

/// Validation row per epsilon.
#[derive(Debug, Clone)]
pub struct ValidateRow {
    pub epsilon: f64,
    pub converged: bool,
    pub newton_iters: usize,
    pub e_u_inf: f64,
    pub e_u_over_eps: f64,
    pub e_v_over_eps: f64,
    pub vort_dev: f64,
    pub flux_max: f64,
}

pub struct ValidateOutput {
    pub rows: Vec<ValidateRow>,
    pub summary: Summary,
    pub solver_failure: bool,
}

/// Theorem-style reference: a r + u_p0((r - 1) / eps) on the given radii.
fn leading_reference(stack: &ExpansionStack, eps: f64, r: &[f64]) -> Array2<f64> {
    let n_theta = stack.n_theta();
    let y = stack.y();
    let a = stack.params.a;
    let u0 = &stack.layer.u[0];
    let mut out = Array2::zeros((n_theta, r.len()));
    let mut row = vec![0.0; y.len()];
    for i in 0..n_theta {
        for (j, v) in row.iter_mut().enumerate() {
            *v = u0.at(i, j);
        }
        for (j, &rr) in r.iter().enumerate() {
            let yy = (rr - 1.0) / eps;
            let layer = if yy < y[0] {
                0.0
            } else {
                lagrange_resample(y, &row, &[yy]).unwrap()[0]
            };
            out[(i, j)] = a * rr + layer;
        }
    }
    out
}

/// Run the Navier-Stokes ladder, write `validate.csv` and `summary.json`.
pub fn cmd_validate(cfg: &RunConfig, out: &Path) -> Result<ValidateOutput> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let params = cfg.physical_params()?;
    let stack = ExpansionStack::build(&params, cfg.order, &cfg.expansion_config())?;
    let grid = NsGrid::new(cfg.grid.n_theta, cfg.grid.n_r, cfg.grid.grading, cfg.grid.r_min);
    let wall = params.wall_speed();
    let two_a = 2.0 * params.a;

    let mut rows: Vec<ValidateRow> = Vec::new();
    let mut solver_failure = false;
    let mut prev_solution: Option<NsState> = None;
    for &eps in &cfg.epsilons {
        let comp = Composite::assemble(&stack, cfg.order, eps, cfg.grid.n_interior)?;
        let seed = seed_from_composite(&grid, &comp);
        let solve = |s: &NsState| {
            solve_steady_ns(
                &grid,
                &wall,
                eps,
                s,
                cfg.tol.newton,
                20,
                cfg.tol.krylov * 1e-3,
                800,
            )
        };
        let result: Result<NsSolution> = solve(&seed).or_else(|e| {
            // walk down the ladder: retry from the last converged solution
            if let Some(prev) = &prev_solution {
                solve(prev)
            } else {
                Err(e)
            }
        });
        match result {
            Ok(sol) => {
                let reference = leading_reference(&stack, eps, &grid.r);
                let metrics = error_norms(&sol, &reference)?;
                let flux = streamline_flux_diagnostic(&grid, &sol, &[0.2, 0.5, 0.8])?;
                let flux_max = flux
                    .iter()
                    .map(|f| f.signed.abs() / f.absolute.max(1e-300))
                    .fold(0.0f64, f64::max);
                let vort_dev = interior_vorticity_deviation(&sol.omega, params.a, 0.5);
                rows.push(ValidateRow {
                    epsilon: eps,
                    converged: true,
                    newton_iters: sol.newton_iters,
                    e_u_inf: metrics.e_u_inf,
                    e_u_over_eps: metrics.e_u_inf / eps,
                    e_v_over_eps: metrics.e_v_inf / eps,
                    vort_dev,
                    flux_max,
                });
                prev_solution = Some(NsState {
                    psi: sol.psi.values().clone(),
                    omega: sol.omega.values().clone(),
                });
            }
            Err(err) => {
                solver_failure = true;
                rows.push(ValidateRow {
                    epsilon: eps,
                    converged: false,
                    newton_iters: 0,
                    e_u_inf: f64::NAN,
                    e_u_over_eps: f64::NAN,
                    e_v_over_eps: f64::NAN,
                    vort_dev: f64::NAN,
                    flux_max: f64::NAN,
                });
                if prev_solution.is_none() {
                    // no converged seed to continue from
                    let _ = err;
                    break;
                }
            }
        }
    }

    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt_float(r.epsilon),
                if r.converged { r.newton_iters.to_string() } else { "failed".to_string() },
                fmt_float(r.e_u_inf),
                fmt_float(r.e_u_over_eps),
                fmt_float(r.e_v_over_eps),
                fmt_float(r.vort_dev),
                fmt_float(r.flux_max),
            ]
        })
        .collect();
    fs::write(
        out.join("validate.csv"),
        csv_table(
            &["epsilon", "newton_iters", "e_u_inf", "e_u_inf_over_eps", "e_v_inf_over_eps", "vort_dev_r050", "flux_diag_max"],
            &table,
        ),
    )?;

    let ok: Vec<&ValidateRow> = rows.iter().filter(|r| r.converged).collect();
    let mut criteria = Vec::new();
    let max_iters = ok.iter().map(|r| r.newton_iters).max().unwrap_or(usize::MAX);
    criteria.push(Criterion::at_most("newton_iters_max", max_iters as f64, 12.0));
    let band = |vals: Vec<f64>| -> f64 {
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(0.0f64, f64::max);
        if hi <= 1e-13 {
            1.0
        } else {
            hi / lo.max(1e-300)
        }
    };
    criteria.push(Criterion::at_most(
        "e_u_over_eps_band",
        band(ok.iter().map(|r| r.e_u_over_eps).collect()),
        2.0,
    ));
    criteria.push(Criterion::at_most(
        "e_v_over_eps_band",
        band(ok.iter().map(|r| r.e_v_over_eps).collect()),
        2.0,
    ));
    let monotone = ok.windows(2).all(|w| w[1].vort_dev < w[0].vort_dev || w[0].vort_dev <= 1e-13);
    criteria.push(Criterion::at_least(
        "vorticity_deviation_monotone",
        if monotone { 1.0 } else { 0.0 },
        1.0,
    ));
    let final_dev = ok.last().map(|r| r.vort_dev).unwrap_or(f64::NAN);
    criteria.push(Criterion::at_most(
        "vorticity_deviation_final",
        final_dev,
        0.05 * two_a,
    ));
    let flux_worst = ok.iter().map(|r| r.flux_max).fold(0.0f64, f64::max);
    criteria.push(Criterion::at_most("streamline_flux_normalized", flux_worst, 0.05));
    if solver_failure {
        criteria.push(Criterion::at_most("newton_failures", 1.0, 0.0));
    }
    let summary = Summary::new(criteria);
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(ValidateOutput {
        rows,
        summary,
        solver_failure,
    })
}

/// Apply `--override key=value` strings on top of a parsed config.
pub fn apply_overrides(cfg: &mut RunConfig, overrides: &[String]) -> Result<()> {
    for ov in overrides {
        let Some((k, v)) = ov.split_once('=') else {
            return Err(Error::Config(format!("override '{ov}' is not key=value")));
        };
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()
}
