//! Second-order first-derivative stencil on a uniform grid.

use std::ops::{Add, Mul, Sub};

/// Centered differences inside, one-sided three-point formulas at the ends.
pub fn d1<T>(f: &[T], h: f64) -> Vec<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let n = f.len();
    assert!(n >= 3, "stencil needs at least three nodes");
    let s = 0.5 / h;
    let mut out = Vec::with_capacity(n);
    out.push((f[1] * 4.0 - f[0] * 3.0 - f[2]) * s);
    for j in 1..n - 1 {
        out.push((f[j + 1] - f[j - 1]) * s);
    }
    out.push((f[n - 1] * 3.0 - f[n - 2] * 4.0 + f[n - 3]) * s);
    out
}

pub fn d1_real(f: &[f64], h: f64) -> Vec<f64> {
    d1(f, h)
}

/// Transpose of [`d1`] as a matrix acting on node vectors.
pub fn d1_transpose<T>(f: &[T], h: f64) -> Vec<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let n = f.len();
    assert!(n >= 4, "stencil transpose needs at least four nodes");
    let s = 0.5 / h;
    let zero = f[0] * 0.0;
    let mut out = vec![zero; n];
    // row 0: (-3, 4, -1)
    out[0] = out[0] - f[0] * (3.0 * s);
    out[1] = out[1] + f[0] * (4.0 * s);
    out[2] = out[2] - f[0] * s;
    for j in 1..n - 1 {
        out[j + 1] = out[j + 1] + f[j] * s;
        out[j - 1] = out[j - 1] - f[j] * s;
    }
    // row n-1: (1, -4, 3)
    out[n - 1] = out[n - 1] + f[n - 1] * (3.0 * s);
    out[n - 2] = out[n - 2] - f[n - 1] * (4.0 * s);
    out[n - 3] = out[n - 3] + f[n - 1] * s;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_quadratics() {
        let h = 0.1;
        let f: Vec<f64> = (0..10).map(|j| (j as f64 * h).powi(2) + 3.0).collect();
        let d = d1_real(&f, h);
        for (j, v) in d.iter().enumerate() {
            assert!((v - 2.0 * j as f64 * h).abs() < 1e-12);
        }
    }

    #[test]
    fn transpose_is_adjoint() {
        let h = 0.3;
        let x: Vec<f64> = (0..9).map(|j| (j as f64).sin()).collect();
        let y: Vec<f64> = (0..9).map(|j| (j as f64 * 0.7).cos()).collect();
        let dx = d1_real(&x, h);
        let dty = d1_transpose(&y, h);
        let a: f64 = dx.iter().zip(&y).map(|(a, b)| a * b).sum();
        let b: f64 = x.iter().zip(&dty).map(|(a, b)| a * b).sum();
        assert!((a - b).abs() < 1e-12);
    }
}
