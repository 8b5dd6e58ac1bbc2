//! Banded symmetric positive definite systems (Cholesky on the lower band).

use crate::error::{Error, Result};

/// Symmetric matrix stored as its lower band, row `i` holding columns `i - bw ..= i`.
#[derive(Debug, Clone)]
pub struct SymBand {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw + j - i)
    }

    /// Adds `v` to entries `(i, j)` and `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if j <= i { (i, j) } else { (j, i) };
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j <= i { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let a = self.data[self.slot(i, j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    pub fn cholesky(&self) -> Result<BandCholesky> {
        let mut l = self.data.clone();
        let bw = self.bw;
        let slot = |i: usize, j: usize| i * (bw + 1) + (bw + j - i);
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut s = l[slot(i, j)];
                let kl = lo.max(j.saturating_sub(bw));
                for k in kl..j {
                    s -= l[slot(i, k)] * l[slot(j, k)];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::Numeric(format!("matrix is not positive definite at row {i}")));
                    }
                    l[slot(i, i)] = s.sqrt();
                } else {
                    l[slot(i, j)] = s / l[slot(j, j)];
                }
            }
        }
        Ok(BandCholesky { n: self.n, bw, l })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let bw = self.bw;
        let slot = |i: usize, j: usize| i * (bw + 1) + (bw + j - i);
        let mut y = b.to_vec();
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            let mut s = y[i];
            for k in lo..i {
                s -= self.l[slot(i, k)] * y[k];
            }
            y[i] = s / self.l[slot(i, i)];
        }
        for i in (0..self.n).rev() {
            let mut s = y[i];
            let hi = (i + bw).min(self.n - 1);
            for k in i + 1..=hi {
                s -= self.l[slot(k, i)] * y[k];
            }
            y[i] = s / self.l[slot(i, i)];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_laplacian_like_system() {
        let n = 30;
        let bw = 5;
        let mut a = SymBand::zeros(n, bw);
        for i in 0..n {
            a.add(i, i, 4.0);
            if i >= 1 {
                a.add(i, i - 1, -1.0);
            }
            if i >= bw {
                a.add(i, i - bw, -1.0);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.mul(&x);
        let got = a.cholesky().unwrap().solve(&b);
        for (u, v) in x.iter().zip(&got) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut a = SymBand::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, 2.0);
        assert!(a.cholesky().is_err());
    }
}
