//! Grid constructors shared by the layer and disk solvers.

/// Uniform grid on [-span, 0], endpoints exact.
pub fn uniform_to_zero(span: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && span > 0.0);
    let h = span / (n - 1) as f64;
    let mut g: Vec<f64> = (0..n).map(|j| -span + j as f64 * h).collect();
    g[0] = -span;
    g[n - 1] = 0.0;
    g
}

/// Radial grid on [r_min, 1] clustered toward the wall r = 1.
///
/// Uniform xi in [0, 1] mapped by r = 1 - (1 - r_min) (e^{sigma(1-xi)} - 1)
/// / (e^sigma - 1); sigma = 0 degenerates to uniform.
pub fn wall_clustered(n: usize, sigma: f64, r_min: f64) -> Vec<f64> {
    assert!(n >= 2 && r_min > 0.0 && r_min < 1.0);
    let mut g = Vec::with_capacity(n);
    let denom = if sigma == 0.0 { 1.0 } else { sigma.exp_m1() };
    for j in 0..n {
        let xi = j as f64 / (n - 1) as f64;
        let s = if sigma == 0.0 {
            1.0 - xi
        } else {
            (sigma * (1.0 - xi)).exp_m1() / denom
        };
        g.push(1.0 - (1.0 - r_min) * s);
    }
    g[0] = r_min;
    g[n - 1] = 1.0;
    g
}

/// Near-wall spacing of a grid (distance between the last two nodes).
pub fn wall_spacing(grid: &[f64]) -> f64 {
    let n = grid.len();
    grid[n - 1] - grid[n - 2]
}
