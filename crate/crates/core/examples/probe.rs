use pbflow::composite::Composite;
use pbflow::config::RunConfig;
use pbflow::expansion::ExpansionStack;
use pbflow::ns::*;

fn main() {
    let cfg = RunConfig::default();
    let params = cfg.physical_params().unwrap();
    let stack = ExpansionStack::build(&params, 2, &cfg.expansion_config()).unwrap();
    let grid = NsGrid::new(cfg.grid.n_theta, cfg.grid.n_r, cfg.grid.grading, cfg.grid.r_min);
    let wall = params.wall_speed();
    let comp = Composite::assemble(&stack, 2, 0.1, cfg.grid.n_interior).unwrap();
    let seed = seed_from_composite(&grid, &comp);
    match solve_steady_ns(&grid, &wall, 0.1, &seed, 1e-9, 20, 1e-9, 800) {
        Ok(sol) => println!("converged {} iters, residual history {:?}", sol.newton_iters, sol.residual_history),
        Err(e) => println!("FAILED: {e}"),
    }
}
