//! Dense complex LU with partial pivoting, log-determinants and a 1-norm
//! condition estimate. Matrices are row-major `Vec<Complex64>`.
//!
//! Eigenvalues and singular values are delegated to `nalgebra`.

use alloc::vec::Vec;
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{Float, Zero};

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<Complex64>,
    piv: Vec<usize>,
    odd: bool,
    norm1: f64,
}

impl Lu {
    /// Factors the `n x n` row-major matrix `a` in place.
    pub fn new(n: usize, mut a: Vec<Complex64>) -> Result<Self> {
        assert_eq!(a.len(), n * n, "matrix is not n x n");
        let norm1 = norm1(n, &a);
        let mut piv: Vec<usize> = (0..n).collect();
        let mut odd = false;
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].norm_sqr();
            for i in k + 1..n {
                let v = a[i * n + k].norm_sqr();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::IllConditioned(f64::INFINITY));
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
                odd = !odd;
            }
            let (top, rest) = a.split_at_mut((k + 1) * n);
            let row_k = &top[k * n..];
            let inv = row_k[k].inv();
            for row_i in rest.chunks_exact_mut(n) {
                let l = row_i[k] * inv;
                row_i[k] = l;
                if l.is_zero() {
                    continue;
                }
                for (x, y) in row_i[k + 1..].iter_mut().zip(&row_k[k + 1..]) {
                    *x -= l * y;
                }
            }
        }
        Ok(Self { n, lu: a, piv, odd, norm1 })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Solves `A x = b`, overwriting `b`.
    pub fn solve(&self, b: &mut [Complex64]) {
        let n = self.n;
        let mut x: Vec<Complex64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: Complex64 = row.iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: Complex64 = row.iter().zip(&x[i + 1..]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        b.copy_from_slice(&x);
    }

    /// Solves `A^H x = b`, overwriting `b`.
    pub fn solve_adjoint(&self, b: &mut [Complex64]) {
        let n = self.n;
        // A = P^T L U, so A^H = U^H L^H P.
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.lu[k * n + i].conj() * z[k];
            }
            z[i] = s / self.lu[i * n + i].conj();
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in i + 1..n {
                s -= self.lu[k * n + i].conj() * z[k];
            }
            z[i] = s;
        }
        for (i, &p) in self.piv.iter().enumerate() {
            b[p] = z[i];
        }
    }

    /// `log|det A|` and the unit phase `det A / |det A|`.
    pub fn log_det(&self) -> (f64, Complex64) {
        let mut log_abs = 0.0;
        let mut phase = if self.odd { Complex64::new(-1.0, 0.0) } else { Complex64::new(1.0, 0.0) };
        for i in 0..self.n {
            let d = self.lu[i * self.n + i];
            let r = d.norm();
            log_abs += r.ln();
            phase *= d / r;
        }
        (log_abs, phase)
    }

    pub fn det(&self) -> Complex64 {
        let (l, ph) = self.log_det();
        ph * l.exp()
    }

    /// Estimate of `||A^{-1}||_1` (Hager–Higham).
    pub fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.n;
        let mut x = alloc::vec![Complex64::new(1.0 / n as f64, 0.0); n];
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            self.solve(&mut x);
            let y_norm: f64 = x.iter().map(|v| v.norm()).sum();
            if y_norm <= est {
                break;
            }
            est = y_norm;
            let mut z: Vec<Complex64> = x
                .iter()
                .map(|v| {
                    let r = v.norm();
                    if r == 0.0 { Complex64::new(1.0, 0.0) } else { v / r }
                })
                .collect();
            self.solve_adjoint(&mut z);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
            if j == last_j || zmax <= 0.0 {
                break;
            }
            last_j = j;
            x = alloc::vec![Complex64::zero(); n];
            x[j] = Complex64::new(1.0, 0.0);
        }
        // Alternating probe guards against the rare Hager underestimate.
        let mut alt: Vec<Complex64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                Complex64::new(s * (1.0 + i as f64 / (n.max(2) - 1) as f64), 0.0)
            })
            .collect();
        self.solve(&mut alt);
        let alt_est = 2.0 * alt.iter().map(|v| v.norm()).sum::<f64>() / (3.0 * n as f64);
        est.max(alt_est)
    }

    /// Estimated 1-norm condition number of the factored matrix.
    pub fn condition_estimate(&self) -> f64 {
        self.norm1 * self.inverse_norm1_estimate()
    }
}

/// Maximum absolute column sum.
pub fn norm1(n: usize, a: &[Complex64]) -> f64 {
    (0..n).map(|j| (0..n).map(|i| a[i * n + j].norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// `y = A x` for row-major `A`.
pub fn matvec(n: usize, a: &[Complex64], x: &[Complex64]) -> Vec<Complex64> {
    a.chunks_exact(n).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// `C = A B` for square row-major matrices.
pub fn matmul(n: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut c = alloc::vec![Complex64::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik.is_zero() {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

pub fn to_dmatrix(n: usize, a: &[Complex64]) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(n, n, a)
}

/// Smallest eigenvalue of the Hermitian part `(A + A^H) / 2`.
pub fn hermitian_part_min_eigenvalue(n: usize, a: &[Complex64]) -> f64 {
    let m = to_dmatrix(n, a);
    let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Singular values in descending order.
pub fn singular_values(n: usize, a: &[Complex64]) -> Vec<f64> {
    let mut s: Vec<f64> = to_dmatrix(n, a).singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Determinant of a small integer matrix by fraction-free Bareiss
/// elimination. Exact while intermediates fit in `i128`.
pub fn bareiss_det(n: usize, a: &[i128]) -> i128 {
    if n == 0 {
        return 1;
    }
    let mut m = a.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k * n + k] == 0 {
            match (k + 1..n).find(|&i| m[i * n + k] != 0) {
                Some(p) => {
                    for j in 0..n {
                        m.swap(k * n + j, p * n + j);
                    }
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i * n + j] = (m[i * n + j] * m[k * n + k] - m[i * n + k] * m[k * n + j]) / prev;
            }
        }
        prev = m[k * n + k];
    }
    sign * m[n * n - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample(n: usize) -> Vec<Complex64> {
        (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                let d = if i == j { 3.0 } else { 0.0 };
                c(d + ((i * 7 + j * 3) % 5) as f64 * 0.3, ((i + 2 * j) % 3) as f64 * 0.2 - 0.2)
            })
            .collect()
    }

    #[test]
    fn solve_and_adjoint_solve() {
        let n = 6;
        let a = sample(n);
        let lu = Lu::new(n, a.clone()).unwrap();
        let x: Vec<Complex64> = (0..n).map(|i| c(i as f64, 1.0 - i as f64)).collect();
        let mut b = matvec(n, &a, &x);
        lu.solve(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).norm() < 1e-12);
        }
        let ah: Vec<Complex64> = (0..n * n).map(|k| a[(k % n) * n + k / n].conj()).collect();
        let mut b = matvec(n, &ah, &x);
        lu.solve_adjoint(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn determinant_matches_nalgebra() {
        let n = 5;
        let a = sample(n);
        let d = Lu::new(n, a.clone()).unwrap().det();
        let e = to_dmatrix(n, &a).determinant();
        assert!((d - e).norm() < 1e-10 * e.norm());
    }

    #[test]
    fn condition_of_diagonal() {
        let n = 4;
        let mut a = alloc::vec![Complex64::zero(); n * n];
        for (i, d) in [1.0, 10.0, 0.1, 2.0].iter().enumerate() {
            a[i * n + i] = c(*d, 0.0);
        }
        let lu = Lu::new(n, a).unwrap();
        assert_relative_eq!(lu.condition_estimate(), 100.0, max_relative = 1e-12);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = alloc::vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)];
        assert!(Lu::new(2, a).is_err());
    }

    #[test]
    fn bareiss_small() {
        assert_eq!(bareiss_det(2, &[1, 1, 1, 2]), 1);
        assert_eq!(bareiss_det(3, &[2, 0, 1, 1, 3, 2, 1, 1, 2]), 6);
        assert_eq!(bareiss_det(3, &[2, 0, 1, 1, 3, 2, 1, 1, 1]), 0);
        assert_eq!(bareiss_det(2, &[0, 1, 1, 0]), -1);
    }
}
