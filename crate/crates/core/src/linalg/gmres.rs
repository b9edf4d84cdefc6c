//! Right-preconditioned GMRES with modified Gram-Schmidt and Givens
//! rotations.  The residual history it reports is the true residual of the
//! unpreconditioned system.

pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve `A x = b` with right preconditioning: GMRES runs on `A M^{-1}` and
/// returns `x = M^{-1} y`.  `apply_a` and `apply_m_inv` take a vector and
/// produce a new one.  Stops when the residual drops below
/// `atol + rtol * |b|`.
pub fn gmres(
    apply_a: &dyn Fn(&[f64]) -> Vec<f64>,
    apply_m_inv: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x0: &[f64],
    rtol: f64,
    atol: f64,
    max_iter: usize,
) -> GmresOutcome {
    let n = b.len();
    let tol = atol + rtol * norm(b);
    let ax0 = apply_a(x0);
    let mut r: Vec<f64> = b.iter().zip(&ax0).map(|(bi, ai)| bi - ai).collect();
    let beta = norm(&r);
    let mut x = x0.to_vec();
    if beta <= tol {
        return GmresOutcome { x, iterations: 0, residual: beta, converged: true };
    }

    let m = max_iter.min(n);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    for v in &mut r {
        *v /= beta;
    }
    basis.push(r);
    // Hessenberg columns, Givens cosines/sines, rotated rhs
    let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut cs = Vec::with_capacity(m);
    let mut sn: Vec<f64> = Vec::with_capacity(m);
    let mut g = vec![beta];
    let mut iters = 0;
    let mut res = beta;

    for k in 0..m {
        iters = k + 1;
        let zk = apply_m_inv(&basis[k]);
        let mut w = apply_a(&zk);
        let mut hk = vec![0.0; k + 2];
        for (j, vj) in basis.iter().enumerate() {
            let hjk = dot(&w, vj);
            hk[j] = hjk;
            for (wi, vi) in w.iter_mut().zip(vj) {
                *wi -= hjk * vi;
            }
        }
        let wn = norm(&w);
        hk[k + 1] = wn;
        // apply accumulated rotations to the new column
        for j in 0..k {
            let t = cs[j] * hk[j] + sn[j] * hk[j + 1];
            hk[j + 1] = -sn[j] * hk[j] + cs[j] * hk[j + 1];
            hk[j] = t;
        }
        let denom = (hk[k] * hk[k] + hk[k + 1] * hk[k + 1]).sqrt();
        let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (hk[k] / denom, hk[k + 1] / denom) };
        cs.push(c);
        sn.push(s);
        hk[k] = c * hk[k] + s * hk[k + 1];
        hk[k + 1] = 0.0;
        g.push(-s * g[k]);
        g[k] *= c;
        h.push(hk);
        res = g[k + 1].abs();
        if res <= tol || wn == 0.0 {
            break;
        }
        for v in &mut w {
            *v /= wn;
        }
        basis.push(w);
    }

    // back-substitute y from the triangular system, then x += M^{-1} V y
    let k = iters;
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = g[i];
        for j in i + 1..k {
            acc -= h[j][i] * y[j];
        }
        y[i] = acc / h[i][i];
    }
    let mut vy = vec![0.0; n];
    for j in 0..k {
        for (t, vij) in vy.iter_mut().zip(&basis[j]) {
            *t += y[j] * vij;
        }
    }
    let z = apply_m_inv(&vy);
    for (xi, zi) in x.iter_mut().zip(&z) {
        *xi += zi;
    }
    let ax = apply_a(&x);
    let true_res = norm(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>());
    GmresOutcome { x, iterations: iters, residual: true_res, converged: true_res <= tol * 1.5 + res }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system_without_preconditioner() {
        // tridiagonal SPD
        let n = 50;
        let apply = |v: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for i in 0..n {
                out[i] = 4.0 * v[i]
                    - if i > 0 { v[i - 1] } else { 0.0 }
                    - if i + 1 < n { v[i + 1] } else { 0.0 };
            }
            out
        };
        let ident = |v: &[f64]| v.to_vec();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = apply(&x_true);
        let out = gmres(&apply, &ident, &b, &vec![0.0; n], 1e-12, 0.0, 200);
        assert!(out.converged);
        let err = out.x.iter().zip(&x_true).map(|(a, t)| (a - t).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "err {err} after {} iters", out.iterations);
    }

    #[test]
    fn preconditioner_cuts_iterations() {
        let n = 120;
        let diag: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64)).collect();
        let apply = {
            let diag = diag.clone();
            move |v: &[f64]| -> Vec<f64> {
                let mut out: Vec<f64> = v.iter().zip(&diag).map(|(x, d)| d * x).collect();
                for i in 0..n {
                    out[i] += 0.3 * v[(i + 1) % n];
                }
                out
            }
        };
        let minv = {
            let diag = diag.clone();
            move |v: &[f64]| -> Vec<f64> { v.iter().zip(&diag).map(|(x, d)| x / d).collect() }
        };
        let b = vec![1.0; n];
        let plain = gmres(&apply, &|v: &[f64]| v.to_vec(), &b, &vec![0.0; n], 1e-10, 0.0, 500);
        let pre = gmres(&apply, &minv, &b, &vec![0.0; n], 1e-10, 0.0, 500);
        assert!(pre.converged && plain.converged);
        assert!(pre.iterations < plain.iterations);
    }
}
