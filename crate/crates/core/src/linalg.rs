//! Dense LU for the small per-step systems and a banded LU for collocation Jacobians.

use crate::error::{Error, Result};

/// LU factorization with partial pivoting of a fixed-size matrix.
#[derive(Debug, Clone)]
pub struct DenseLu<const N: usize> {
    lu: [[f64; N]; N],
    piv: [usize; N],
}

impl<const N: usize> DenseLu<N> {
    pub fn factor(mut a: [[f64; N]; N]) -> Result<Self> {
        let mut piv = [0usize; N];
        for k in 0..N {
            let (p, max) = (k..N)
                .map(|i| (i, a[i][k].abs()))
                .fold((k, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            if max == 0.0 || !max.is_finite() {
                return Err(Error::SingularMatrix);
            }
            piv[k] = p;
            a.swap(k, p);
            let inv = 1.0 / a[k][k];
            for i in k + 1..N {
                let f = a[i][k] * inv;
                a[i][k] = f;
                for j in k + 1..N {
                    a[i][j] -= f * a[k][j];
                }
            }
        }
        Ok(Self { lu: a, piv })
    }

    pub fn solve(&self, mut b: [f64; N]) -> [f64; N] {
        for k in 0..N {
            b.swap(k, self.piv[k]);
            for i in k + 1..N {
                b[i] -= self.lu[i][k] * b[k];
            }
        }
        for k in (0..N).rev() {
            let mut s = b[k];
            for j in k + 1..N {
                s -= self.lu[k][j] * b[j];
            }
            b[k] = s / self.lu[k][k];
        }
        b
    }
}

/// Row-major banded matrix with room for the fill-in produced by row pivoting.
///
/// Element `(i, j)` lives at row offset `kl + j - i`; the stored upper band is
/// `ku + kl` wide so that factorization can write into it.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku + self.kl
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i < self.n && j < self.n && self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// `y = A x` using the stored band.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku + self.kl).min(self.n - 1);
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
                *yi += self.data[self.idx(i, j)] * xj;
            }
        }
        y
    }

    /// In-place LU with partial (row) pivoting.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let uw = self.ku + self.kl; // upper width after fill-in
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut max = self.get(k, k).abs();
            for i in k + 1..=last {
                let v = self.data[self.idx(i, k)].abs();
                if v > max {
                    max = v;
                    p = i;
                }
            }
            if max == 0.0 || !max.is_finite() {
                return Err(Error::SingularMatrix);
            }
            piv[k] = p;
            let jlast = (k + uw).min(n - 1);
            if p != k {
                for j in k..=jlast {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.data.swap(a, b);
                }
            }
            let inv = 1.0 / self.data[self.idx(k, k)];
            for i in k + 1..=last {
                let ik = self.idx(i, k);
                let f = self.data[ik] * inv;
                self.data[ik] = f;
                if f != 0.0 {
                    for j in k + 1..=jlast {
                        let kj = self.data[self.idx(k, j)];
                        let ij = self.idx(i, j);
                        self.data[ij] -= f * kj;
                    }
                }
            }
        }
        Ok(BandLu { m: self, piv })
    }
}

/// Factored banded matrix.
#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.m.n;
        let kl = self.m.kl;
        let uw = self.m.ku + self.m.kl;
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let last = (k + kl).min(n - 1);
            for i in k + 1..=last {
                b[i] -= self.m.data[self.m.idx(i, k)] * b[k];
            }
        }
        for k in (0..n).rev() {
            let jlast = (k + uw).min(n - 1);
            let mut s = b[k];
            for (j, bj) in b.iter().enumerate().take(jlast + 1).skip(k + 1) {
                s -= self.m.data[self.m.idx(k, j)] * bj;
            }
            b[k] = s / self.m.data[self.m.idx(k, k)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dense_lu_solves() {
        let a = [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]];
        let lu = DenseLu::factor(a).unwrap();
        let x = lu.solve([3.0, 5.0, 5.0]);
        for (i, row) in a.iter().enumerate() {
            let r: f64 = row.iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!((r - [3.0, 5.0, 5.0][i]).abs() < 1e-14);
        }
        assert!(DenseLu::factor([[0.0, 0.0], [1.0, 1.0]]).is_err());
    }

    #[test]
    fn band_lu_matches_dense_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (n, kl, ku) = (40, 4, 3);
        let mut m = BandMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                // weak diagonal forces pivoting
                let v: f64 = rng.gen_range(-1.0..1.0);
                m.set(i, j, if i == j { 0.01 * v } else { v });
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = m.matvec(&x);
        let lu = m.clone().factor().unwrap();
        let mut sol = b.clone();
        lu.solve(&mut sol);
        let err = sol.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "err = {err}");
    }
}
