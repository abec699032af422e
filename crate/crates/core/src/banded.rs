//! Banded LU factorization with partial pivoting.

use crate::error::{Error, Result};

/// Square banded matrix with `kl` sub- and `ku` super-diagonals.
///
/// Each row keeps room for `kl` extra super-diagonals, which is the fill-in
/// that row interchanges can produce.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
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
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Sets an entry inside the declared band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band"
        );
        let k = self.idx(i, j);
        self.data[k] = value;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.idx(i, j)] * x[j]).sum()
            })
            .collect()
    }

    /// Adds `shift` to every diagonal entry.
    pub fn shift_diagonal(&mut self, shift: f64) {
        for i in 0..self.n {
            let k = self.idx(i, i);
            self.data[k] += shift;
        }
    }

    pub fn factor(mut self) -> Result<BandedLu> {
        let n = self.n;
        let kl = self.kl;
        let reach = self.ku + self.kl;
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular(k));
            }
            pivots[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let ij = self.idx(i, j);
                        let kj = self.idx(k, j);
                        self.data[ij] -= l * self.data[kj];
                    }
                }
            }
        }
        Ok(BandedLu {
            lu: self,
            pivots,
        })
    }
}

/// LU factors of a [`BandedMatrix`].
#[derive(Debug, Clone)]
pub struct BandedLu {
    lu: BandedMatrix,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = &self.lu;
        let n = m.n;
        assert_eq!(rhs.len(), n);
        let mut x = rhs.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..=(k + m.kl).min(n - 1) {
                    x[i] -= m.data[m.idx(i, k)] * xk;
                }
            }
        }
        let reach = m.ku + m.kl;
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + reach).min(n - 1) {
                s -= m.data[m.idx(k, j)] * x[j];
            }
            x[k] = s / m.data[m.idx(k, k)];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut x = b.to_vec();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
            m.swap(k, p);
            x.swap(k, p);
            for i in k + 1..n {
                let l = m[i][k] / m[k][k];
                for j in k..n {
                    m[i][j] -= l * m[k][j];
                }
                x[i] -= l * x[k];
            }
        }
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| m[k][j] * x[j]).sum();
            x[k] = (x[k] - s) / m[k][k];
        }
        x
    }

    #[test]
    fn matches_dense_elimination_on_indefinite_band() {
        let n = 40;
        let mut band = BandedMatrix::zeros(n, 2, 2);
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i.saturating_sub(2)..=(i + 2).min(n - 1) {
                // deliberately small diagonal to force pivoting
                let v = if i == j {
                    0.01 * ((i as f64) - 20.0)
                } else {
                    ((i * 7 + j * 3) % 11) as f64 / 5.0 - 1.0
                };
                band.set(i, j, v);
                dense[i][j] = v;
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let expected = dense_solve(&dense, &b);
        let got = band.clone().factor().unwrap().solve(&b);
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-9 * (1.0 + e.abs()));
        }
        let back = band.mul_vec(&got);
        for (r, bb) in back.iter().zip(&b) {
            assert!((r - bb).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let band = BandedMatrix::zeros(5, 1, 1);
        assert!(matches!(band.factor(), Err(Error::Singular(0))));
    }
}
