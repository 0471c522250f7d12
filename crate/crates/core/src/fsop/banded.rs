//! Symmetric banded matrices and their Cholesky factors.

use crate::error::{Error, Result};

/// Symmetric matrix stored by its lower band: `band[i][j]` holds `A[i][i-bw+j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBanded {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw + j - i)
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Add `v` to the symmetric pair `(i, j)`, `(j, i)` (once if `i == j`).
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry ({i},{j}) outside band {}", self.bw);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// `a x + b y`.
    pub fn lin_comb(a: f64, x: &SymBanded, b: f64, y: &SymBanded) -> SymBanded {
        assert_eq!(x.n, y.n);
        let bw = x.bw.max(y.bw);
        let mut out = SymBanded::zeros(x.n, bw);
        for i in 0..x.n {
            for j in i.saturating_sub(bw)..=i {
                let v = a * x.get(i, j) + b * y.get(i, j);
                let k = out.idx(i, j);
                out.data[k] = v;
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..i {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += self.data[self.idx(i, i)] * x[i];
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn cholesky(&self) -> Result<BandedCholesky> {
        BandedCholesky::factor(self)
    }
}

/// `A = L Lᵀ` with `L` lower banded.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    fn factor(a: &SymBanded) -> Result<Self> {
        let (n, bw) = (a.n, a.bw);
        let mut l = a.data.clone();
        let at = |i: usize, j: usize| i * (bw + 1) + (bw + j - i);
        let mut dmax = 0.0f64;
        let mut dmin = f64::INFINITY;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut s = l[at(i, j)];
                let lo2 = lo.max(j.saturating_sub(bw));
                for k in lo2..j {
                    s -= l[at(i, k)] * l[at(j, k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::Numerical(format!(
                            "banded Cholesky: pivot {i} = {s:.3e} not positive (n = {n}, bandwidth {bw})"
                        )));
                    }
                    let d = s.sqrt();
                    dmax = dmax.max(d);
                    dmin = dmin.min(d);
                    l[at(i, i)] = d;
                } else {
                    l[at(i, j)] = s / l[at(j, j)];
                }
            }
        }
        if dmin / dmax < 1e-12 {
            return Err(Error::Numerical(format!(
                "banded Cholesky: pivot ratio {:.3e} suggests a singular system",
                dmin / dmax
            )));
        }
        Ok(Self { n, bw, l })
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.l[i * (self.bw + 1) + (self.bw + j - i)]
    }

    /// Solve in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let mut s = b[i];
            for k in i.saturating_sub(self.bw)..i {
                s -= self.at(i, k) * b[k];
            }
            b[i] = s / self.at(i, i);
        }
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + self.bw + 1).min(self.n) {
                s -= self.at(k, i) * b[k];
            }
            b[i] = s / self.at(i, i);
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_band() {
        let n = 40;
        let mut a = SymBanded::zeros(n, 3);
        for i in 0..n {
            a.add_sym(i, i, 10.0 + i as f64 * 0.1);
            if i >= 1 {
                a.add_sym(i, i - 1, -1.0);
            }
            if i >= 3 {
                a.add_sym(i, i - 3, 0.5);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let b = a.mul(&x);
        let y = a.cholesky().unwrap().solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-13);
        }
        let d = a.to_dense();
        assert_eq!(d[(5, 2)], 0.5);
        assert_eq!(d[(2, 5)], 0.5);
    }

    #[test]
    fn rejects_indefinite() {
        let mut a = SymBanded::zeros(2, 1);
        a.add_sym(0, 0, 1.0);
        a.add_sym(1, 1, 1.0);
        a.add_sym(1, 0, 2.0);
        assert!(a.cholesky().is_err());
    }
}
