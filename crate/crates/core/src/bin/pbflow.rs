//! Command line front end: `expand`, `residual`, `validate`.
//!
//! Exit codes: 0 all checks pass, 2 a numerical criterion failed, 3 solver
//! failure, 4 configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pbflow::commands::{apply_overrides, cmd_expand, cmd_residual, cmd_validate};
use pbflow::config::RunConfig;
use pbflow::error::Error;

#[derive(Parser)]
#[command(name = "pbflow", about = "Boundary-layer expansion and steady-flow validation on the unit disk")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the expansion hierarchy and write the solution snapshot
    Expand(Common),
    /// Sweep the composite momentum residual over the epsilon ladder
    Residual(Common),
    /// Solve the Navier-Stokes ladder and check it against the expansion
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// configuration file (flat key = value lines)
    #[arg(long)]
    config: PathBuf,
    /// output directory
    #[arg(long)]
    out: PathBuf,
    /// key=value assignments applied after the file is read
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn load_config(common: &Common) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", common.config.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    apply_overrides(&mut cfg, &common.overrides)?;
    Ok(cfg)
}

fn exit_for(err: &Error) -> ExitCode {
    match err {
        Error::Config(_) => ExitCode::from(4),
        _ => ExitCode::from(3),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.cmd {
        Cmd::Expand(c) | Cmd::Residual(c) | Cmd::Validate(c) => c,
    };
    let cfg = match load_config(common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    };
    match &cli.cmd {
        Cmd::Expand(c) => match cmd_expand(&cfg, &c.out) {
            Ok(snap) => {
                println!(
                    "expansion built: a = {:.12}, {} fixed-point iterations, A_inf = {:?}",
                    snap.batchelor_wood_a, snap.fixed_point_iterations, snap.a_inf
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_for(&e)
            }
        },
        Cmd::Residual(c) => match cmd_residual(&cfg, &c.out) {
            Ok(rows) => {
                for r in &rows {
                    println!(
                        "order {} eps {:<8}: |R_u| = {:.3e}, |R_v| = {:.3e}{}",
                        r.order,
                        r.epsilon,
                        r.res_u,
                        r.res_v,
                        r.slope_so_far
                            .map(|s| format!(", slope {s:.2}"))
                            .unwrap_or_default()
                    );
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_for(&e)
            }
        },
        Cmd::Validate(c) => match cmd_validate(&cfg, &c.out) {
            Ok(out) => {
                for cr in &out.summary.criteria {
                    println!(
                        "{}: value {:.4e} threshold {:.4e} -> {}",
                        cr.criterion_id,
                        cr.value,
                        cr.threshold,
                        if cr.pass { "pass" } else { "FAIL" }
                    );
                }
                if out.solver_failure {
                    ExitCode::from(3)
                } else if !out.summary.all_pass {
                    ExitCode::from(2)
                } else {
                    ExitCode::SUCCESS
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_for(&e)
            }
        },
    }
}
