//! Finite-difference weights on arbitrary node sets (Fornberg's recursion)
//! and per-row stencil tables for differentiating gridded data.

/// Weights for the `m`-th derivative at `x0` from function values at `nodes`.
///
/// Fornberg's recursive algorithm; exact for polynomials of degree
/// `nodes.len() - 1`, so `nodes.len() >= m + p` gives order-`p` accuracy on
/// smooth data.
pub fn fornberg_weights(x0: f64, nodes: &[f64], m: usize) -> Vec<f64> {
    let n = nodes.len();
    assert!(n > m, "need more than {m} nodes for derivative order {m}");
    // c[k][j]: weight of node j for derivative order k.
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c[m].clone()
}

/// Precomputed differentiation stencils for every node of a fixed grid.
///
/// Each row holds the starting node index of its window and the weights, so
/// applying the operator is a short dot product per node.  Windows are
/// clamped at the grid ends (one-sided stencils of the same polynomial
/// exactness).
#[derive(Debug, Clone)]
pub struct StencilSet {
    pub n: usize,
    starts: Vec<usize>,
    weights: Vec<Vec<f64>>,
}

impl StencilSet {
    /// Stencils for the `deriv`-th derivative with `accuracy`-order truncation
    /// error (window of `deriv + accuracy` nodes, centered where possible).
    pub fn new(grid: &[f64], deriv: usize, accuracy: usize) -> Self {
        let n = grid.len();
        let width = (deriv + accuracy).min(n);
        let mut starts = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let half = width / 2;
            let start = i.saturating_sub(half).min(n - width);
            let w = fornberg_weights(grid[i], &grid[start..start + width], deriv);
            starts.push(start);
            weights.push(w);
        }
        StencilSet { n, starts, weights }
    }

    /// Differentiate samples living on the construction grid.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), self.n);
        let mut out = vec![0.0; self.n];
        self.apply_into(f, &mut out);
        out
    }

    pub fn apply_into(&self, f: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let s = self.starts[i];
            let w = &self.weights[i];
            let mut acc = 0.0;
            for (k, wk) in w.iter().enumerate() {
                acc += wk * f[s + k];
            }
            out[i] = acc;
        }
    }

    /// Row view for assembling the stencil into a matrix.
    pub fn row(&self, i: usize) -> (usize, &[f64]) {
        (self.starts[i], &self.weights[i])
    }

    /// Widest distance between a node and the edge of its window.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .map(|i| {
                let s = self.starts[i];
                let e = s + self.weights[i].len() - 1;
                (i - s).max(e - i)
            })
            .max()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_reproduce_poly_derivatives() {
        let nodes = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let w = fornberg_weights(0.0, &nodes, 1);
        // classic 4th-order centered first derivative
        let expect = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
        let w2 = fornberg_weights(0.0, &nodes, 2);
        let expect2 = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
        for (a, b) in w2.iter().zip(expect2.iter()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn stencilset_differentiates_smooth_function() {
        let n = 201;
        let grid: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
        let f: Vec<f64> = grid.iter().map(|&x| (2.0 * x).sin()).collect();
        let d1 = StencilSet::new(&grid, 1, 4).apply(&f);
        let d2 = StencilSet::new(&grid, 2, 4).apply(&f);
        let mut e1: f64 = 0.0;
        let mut e2: f64 = 0.0;
        for (i, &x) in grid.iter().enumerate() {
            e1 = e1.max((d1[i] - 2.0 * (2.0 * x).cos()).abs());
            e2 = e2.max((d2[i] + 4.0 * (2.0 * x).sin()).abs());
        }
        assert!(e1 < 2e-7, "d1 error {e1}");
        assert!(e2 < 5e-5, "d2 error {e2}");
    }

    #[test]
    fn stencilset_exact_on_nonuniform_grid_for_quadratics() {
        let grid = [0.0, 0.13, 0.21, 0.55, 0.8, 1.0];
        let f: Vec<f64> = grid.iter().map(|&x| 3.0 * x * x - x + 2.0).collect();
        let d1 = StencilSet::new(&grid, 1, 2).apply(&f);
        let d2 = StencilSet::new(&grid, 2, 1).apply(&f);
        for (i, &x) in grid.iter().enumerate() {
            assert!((d1[i] - (6.0 * x - 1.0)).abs() < 1e-12);
            assert!((d2[i] - 6.0).abs() < 1e-11);
        }
    }
}
