//! 1-D interpolation: shape-preserving monotone cubic (Fritsch-Carlson) and
//! high-order local Lagrange resampling for smooth data.

use crate::error::{Error, Result};

/// Monotone cubic Hermite interpolation of `(x_src, y_src)` evaluated at
/// `x_dst`.  Exact on the nodes, shape-preserving between them; rejects
/// evaluation outside the source range.
pub fn monotone_interpolate(x_src: &[f64], y_src: &[f64], x_dst: &[f64]) -> Result<Vec<f64>> {
    let slopes = pchip_slopes(x_src, y_src)?;
    let (lo, hi) = (x_src[0], x_src[x_src.len() - 1]);
    let mut out = Vec::with_capacity(x_dst.len());
    for &x in x_dst {
        if x < lo - 1e-12 || x > hi + 1e-12 {
            return Err(Error::InterpOutOfRange(x, lo, hi));
        }
        out.push(hermite_eval(x_src, y_src, &slopes, x.clamp(lo, hi)));
    }
    Ok(out)
}

/// Fritsch-Carlson slopes guaranteeing a monotone interpolant on monotone data.
pub fn pchip_slopes(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    assert_eq!(y.len(), n);
    if n < 2 || x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::GridNotIncreasing);
    }
    if n == 2 {
        let d = (y[1] - y[0]) / (x[1] - x[0]);
        return Ok(vec![d, d]);
    }
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            // weighted harmonic mean keeps the interpolant monotone
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    Ok(d)
}

fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let mut s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if s * d0 <= 0.0 {
        s = 0.0;
    } else if d0 * d1 < 0.0 && s.abs() > 3.0 * d0.abs() {
        s = 3.0 * d0;
    }
    s
}

fn hermite_eval(x: &[f64], y: &[f64], d: &[f64], xq: f64) -> f64 {
    let i = bracket(x, xq);
    let h = x[i + 1] - x[i];
    let t = (xq - x[i]) / h;
    let (t2, t3) = (t * t, t * t * t);
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y[i] + h10 * h * d[i] + h01 * y[i + 1] + h11 * h * d[i + 1]
}

fn bracket(x: &[f64], xq: f64) -> usize {
    match x.binary_search_by(|v| v.partial_cmp(&xq).unwrap()) {
        Ok(i) => i.min(x.len() - 2),
        Err(i) => i.saturating_sub(1).min(x.len() - 2),
    }
}

/// Resample smooth data by a sliding 6-node Lagrange polynomial (error
/// O(h^6)); used where interpolation error must stay far below the
/// finite-difference truncation of downstream derivatives.
pub fn lagrange_resample(x_src: &[f64], y_src: &[f64], x_dst: &[f64]) -> Result<Vec<f64>> {
    let n = x_src.len();
    assert_eq!(y_src.len(), n);
    let width = 6.min(n);
    let (lo, hi) = (x_src[0], x_src[n - 1]);
    let mut out = Vec::with_capacity(x_dst.len());
    for &x in x_dst {
        if x < lo - 1e-12 || x > hi + 1e-12 {
            return Err(Error::InterpOutOfRange(x, lo, hi));
        }
        let xq = x.clamp(lo, hi);
        let i = bracket(x_src, xq);
        let start = i.saturating_sub(width / 2 - 1).min(n - width);
        let xs = &x_src[start..start + width];
        let ys = &y_src[start..start + width];
        let mut acc = 0.0;
        for a in 0..width {
            let mut l = 1.0;
            for b in 0..width {
                if a != b {
                    l *= (xq - xs[b]) / (xs[a] - xs[b]);
                }
            }
            acc += l * ys[a];
        }
        out.push(acc);
    }
    Ok(out)
}
