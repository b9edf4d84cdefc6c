//! Complex banded LU with partial pivoting (LAPACK gbtrf storage scheme).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Band matrix with `kl` subdiagonals and `ku` superdiagonals, factored in
/// place.  Pivoting can push fill `kl` diagonals above `ku`, so storage is
/// `2*kl + ku + 1` bands.
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    /// ab[(band, col)]; entry (i, j) lives at band kl + ku + i - j.
    ab: ndarray::Array2<Complex64>,
    ipiv: Vec<usize>,
    factored: bool,
}

impl BandedLu {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        BandedLu {
            n,
            kl,
            ku,
            ab: ndarray::Array2::zeros((2 * kl + ku + 1, n)),
            ipiv: vec![0; n],
            factored: false,
        }
    }

    #[inline]
    fn band(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + self.ku + self.kl >= j && j + self.kl >= i, "({i},{j}) outside band");
        self.kl + self.ku + i - j
    }

    /// Add `v` to entry (i, j).  Panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        assert!(!self.factored);
        assert!(j <= i + self.ku && i <= j + self.kl, "({i},{j}) outside band kl={} ku={}", self.kl, self.ku);
        let b = self.band(i, j);
        self.ab[(b, j)] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        assert!(!self.factored);
        assert!(j <= i + self.ku && i <= j + self.kl, "({i},{j}) outside band kl={} ku={}", self.kl, self.ku);
        let b = self.band(i, j);
        self.ab[(b, j)] = v;
    }

    /// LU factorization with partial pivoting.
    pub fn factor(&mut self) -> Result<()> {
        assert!(!self.factored);
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let kv = kl + ku;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            // pivot search in column j, rows j..=j+km
            let mut p = 0usize;
            let mut pmax = self.ab[(kl + ku, j)].norm_sqr();
            for i in 1..=km {
                let v = self.ab[(kl + ku + i, j)].norm_sqr();
                if v > pmax {
                    pmax = v;
                    p = i;
                }
            }
            if pmax == 0.0 {
                return Err(Error::SingularMatrix(j));
            }
            self.ipiv[j] = j + p;
            if p != 0 {
                let cmax = (n - 1).min(j + kv);
                for c in j..=cmax {
                    let b1 = kl + ku + j - c;
                    let b2 = b1 + p;
                    self.ab.swap((b1, c), (b2, c));
                }
            }
            let piv = self.ab[(kl + ku, j)];
            for i in 1..=km {
                let m = self.ab[(kl + ku + i, j)] / piv;
                self.ab[(kl + ku + i, j)] = m;
                let cmax = (n - 1).min(j + kv);
                for c in (j + 1)..=cmax {
                    let upper = self.ab[(kl + ku + j - c, c)];
                    self.ab[(kl + ku + j + i - c, c)] -= m * upper;
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solve A x = b using the stored factorization.
    pub fn solve(&self, b: &mut [Complex64]) {
        assert!(self.factored, "factor() before solve()");
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let kv = kl + ku;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            for i in 1..=km {
                let m = self.ab[(kl + ku + i, j)];
                let bj = b[j];
                b[j + i] -= m * bj;
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.ab[(kl + ku, j)];
            let rmin = j.saturating_sub(kv);
            let bj = b[j];
            for r in rmin..j {
                let u = self.ab[(kl + ku + r - j, j)];
                b[r] -= u * bj;
            }
        }
    }
}
