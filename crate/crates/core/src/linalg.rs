//! Banded Hermitian positive-definite factorisation for the projection
//! solves (normal matrices of three-point stencils are narrow bands).

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

/// Lower band of a Hermitian matrix, `row i, col j` for `i - bw <= j <= i`.
#[derive(Clone, Debug)]
pub(crate) struct BandedHermitian {
    n: usize,
    bw: usize,
    a: Vec<C>,
}

impl BandedHermitian {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedHermitian {
            n,
            bw,
            a: vec![C::new(0.0, 0.0); n * (bw + 1)],
        }
    }

    fn at(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (i - j)
    }

    /// Entry `(i, j)` with `j <= i`.
    pub fn set(&mut self, i: usize, j: usize, v: C) {
        let k = self.at(i, j);
        self.a[k] = v;
    }

    pub fn get(&self, i: usize, j: usize) -> C {
        if j > i {
            return self.get(j, i).conj();
        }
        if i - j > self.bw {
            return C::new(0.0, 0.0);
        }
        self.a[self.at(i, j)]
    }

    pub fn mul(&self, x: &[C]) -> Vec<C> {
        let mut y = vec![C::new(0.0, 0.0); self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw + 1).min(self.n);
            for j in lo..hi {
                y[i] += self.get(i, j) * x[j];
            }
        }
        y
    }

    /// In-place Cholesky `A = L Lᴴ`.
    pub fn factor(mut self) -> Result<BandedCholesky> {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let mut s = self.a[self.at(i, j)];
                for k in lo.max(j.saturating_sub(self.bw))..j {
                    s -= self.a[self.at(i, k)] * self.a[self.at(j, k)].conj();
                }
                if i == j {
                    if !(s.re > 0.0) {
                        return Err(Error::Numerical {
                            message: "normal matrix is not positive definite".into(),
                            log: vec![format!("pivot {i} = {s}")],
                        });
                    }
                    let k = self.at(i, i);
                    self.a[k] = C::new(s.re.sqrt(), 0.0);
                } else {
                    let d = self.a[self.at(j, j)];
                    let k = self.at(i, j);
                    self.a[k] = s / d;
                }
            }
        }
        Ok(BandedCholesky { l: self })
    }
}

pub(crate) struct BandedCholesky {
    l: BandedHermitian,
}

impl BandedCholesky {
    pub fn solve(&self, b: &[C]) -> Vec<C> {
        let l = &self.l;
        let n = l.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(l.bw);
            let mut s = y[i];
            for k in lo..i {
                s -= l.a[l.at(i, k)] * y[k];
            }
            y[i] = s / l.a[l.at(i, i)];
        }
        for i in (0..n).rev() {
            let hi = (i + l.bw + 1).min(n);
            let mut s = y[i];
            for k in i + 1..hi {
                s -= l.a[l.at(k, i)].conj() * y[k];
            }
            y[i] = s / l.a[l.at(i, i)];
        }
        y
    }
}
