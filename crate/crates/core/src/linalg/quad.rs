//! Cumulative quadrature on 1-D grids.

/// Cumulative integral from `x[0]`, fourth order on a uniform grid.
///
/// Each cell is integrated by the cubic through its four nearest nodes
/// (Newton-Cotes open weights -1/24, 13/24, 13/24, -1/24 in the interior,
/// one-sided cubics in the first and last cell).  Returns `out[j] =
/// integral from x[0] to x[j]`, so `out[0] = 0`.
pub fn cumint(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert_eq!(f.len(), n);
    assert!(n >= 2);
    let mut out = vec![0.0; n];
    if n < 4 {
        // trapezoid fallback for tiny grids
        for j in 1..n {
            out[j] = out[j - 1] + 0.5 * (x[j] - x[j - 1]) * (f[j] + f[j - 1]);
        }
        return out;
    }
    for j in 0..n - 1 {
        let h = x[j + 1] - x[j];
        let cell = if j == 0 {
            h * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) / 24.0
        } else if j == n - 2 {
            h * (f[n - 4] - 5.0 * f[n - 3] + 19.0 * f[n - 2] + 9.0 * f[n - 1]) / 24.0
        } else {
            h * (-f[j - 1] + 13.0 * f[j] + 13.0 * f[j + 1] - f[j + 2]) / 24.0
        };
        out[j + 1] = out[j] + cell;
    }
    out
}

/// Cumulative integral on an arbitrary strictly increasing grid, fourth
/// order: each cell integrates the Lagrange cubic through the four nearest
/// nodes with two-point Gauss-Legendre (exact for cubics).
pub fn cumint_nonuniform(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert_eq!(f.len(), n);
    assert!(n >= 2);
    let mut out = vec![0.0; n];
    if n < 4 {
        for j in 1..n {
            out[j] = out[j - 1] + 0.5 * (x[j] - x[j - 1]) * (f[j] + f[j - 1]);
        }
        return out;
    }
    const G: f64 = 0.577_350_269_189_625_76; // 1/sqrt(3)
    for j in 0..n - 1 {
        let s = j.saturating_sub(1).min(n - 4);
        let xs = &x[s..s + 4];
        let fs = &f[s..s + 4];
        let (a, b) = (x[j], x[j + 1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let cell = half * (lagrange4(xs, fs, mid - half * G) + lagrange4(xs, fs, mid + half * G));
        out[j + 1] = out[j] + cell;
    }
    out
}

fn lagrange4(xs: &[f64], fs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        let mut l = 1.0;
        for j in 0..4 {
            if j != i {
                l *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        acc += l * fs[i];
    }
    acc
}

/// Trapezoid rule total, for oracles and norms on nonuniform grids.
pub fn trapezoid(x: &[f64], f: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 1..x.len() {
        acc += 0.5 * (x[j] - x[j - 1]) * (f[j] + f[j - 1]);
    }
    acc
}
