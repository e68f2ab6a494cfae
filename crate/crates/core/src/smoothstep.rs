//! Polynomial smoothsteps with closed-form derivatives.
//!
//! `Smoothstep::new(k)` is the unique polynomial of degree `2k+1` that rises
//! from 0 at `x = 0` to 1 at `x = 1` with its first `k` derivatives vanishing
//! at both ends, extended by 0 below and 1 above. The extension is `C^k`.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Smoothstep {
    continuity: usize,
    /// Monomial coefficients, ascending powers of x.
    coeffs: Vec<f64>,
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

impl Smoothstep {
    pub fn new(continuity: usize) -> Self {
        let k = continuity;
        // S(x) = x^{k+1} sum_j C(k+j, j) (1-x)^j
        let mut coeffs = vec![0.0; 2 * k + 2];
        for j in 0..=k {
            let c = binomial(k + j, j);
            for i in 0..=j {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                coeffs[k + 1 + i] += c * binomial(j, i) * sign;
            }
        }
        Smoothstep {
            continuity: k,
            coeffs,
        }
    }

    pub fn continuity(&self) -> usize {
        self.continuity
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivatives::<1>(x)[0]
    }

    /// Value and the first `N-1` derivatives at `x`.
    pub fn derivatives<const N: usize>(&self, x: f64) -> [f64; N] {
        let mut out = [0.0; N];
        if x <= 0.0 {
            return out;
        }
        if x >= 1.0 {
            out[0] = 1.0;
            return out;
        }
        let mut c = self.coeffs.clone();
        for slot in out.iter_mut() {
            *slot = c.iter().rev().fold(0.0, |acc, &a| acc * x + a);
            c = c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(p, &a)| a * p as f64)
                .collect();
            if c.is_empty() {
                break;
            }
        }
        out
    }
}

/// A compactly supported bump in one variable: rises on `[lo, mid]`, falls on
/// `[mid, hi]`, equal to 1 only at `mid`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump1d {
    pub lo: f64,
    pub hi: f64,
    pub continuity: usize,
}

impl Bump1d {
    pub fn new(lo: f64, hi: f64, continuity: usize) -> Self {
        Bump1d { lo, hi, continuity }
    }

    /// Value and first three derivatives.
    pub fn jet(&self, x: f64) -> [f64; 4] {
        if x <= self.lo || x >= self.hi {
            return [0.0; 4];
        }
        let step = Smoothstep::new(self.continuity);
        let half = 0.5 * (self.hi - self.lo);
        let a = step.derivatives::<4>((x - self.lo) / half);
        let b = step.derivatives::<4>((self.hi - x) / half);
        // chain rule: d/dx of the rising part is 1/half, falling part -1/half
        let s1 = 1.0 / half;
        let ra = [a[0], a[1] * s1, a[2] * s1 * s1, a[3] * s1 * s1 * s1];
        let rb = [b[0], -b[1] * s1, b[2] * s1 * s1, -b[3] * s1 * s1 * s1];
        [
            ra[0] * rb[0],
            ra[1] * rb[0] + ra[0] * rb[1],
            ra[2] * rb[0] + 2.0 * ra[1] * rb[1] + ra[0] * rb[2],
            ra[3] * rb[0] + 3.0 * ra[2] * rb[1] + 3.0 * ra[1] * rb[2] + ra[0] * rb[3],
        ]
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet(x)[0]
    }
}
