//! Dense symmetric positive definite factorization.
//!
//! Matrices are square, row-major `Vec<f64>`. Only the lower triangle of the
//! input is read.

use crate::error::{Error, Result};

const BLOCK: usize = 64;

/// Dot product with four independent accumulators so the compiler can
/// vectorize it; the summation order is fixed, so results are reproducible.
#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = [0.0f64; 4];
    let xc = x.chunks_exact(4);
    let yc = y.chunks_exact(4);
    let (xr, yr) = (xc.remainder(), yc.remainder());
    for (a, b) in xc.zip(yc) {
        acc[0] += a[0] * b[0];
        acc[1] += a[1] * b[1];
        acc[2] += a[2] * b[2];
        acc[3] += a[3] * b[3];
    }
    let mut tail = 0.0;
    for (a, b) in xr.iter().zip(yr) {
        tail += a * b;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y = M x` for a dense row-major `n × n` matrix.
pub(crate) fn matvec(m: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    m.chunks_exact(n).map(|row| dot(row, x)).collect()
}

/// Lower Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Blocked right-looking factorization.
    pub fn factor(a: &[f64], n: usize) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "matrix has {} entries, expected {n}×{n}",
                a.len()
            )));
        }
        let mut l = a.to_vec();
        let mut kb = 0;
        while kb < n {
            let ke = (kb + BLOCK).min(n);
            // diagonal block
            for i in kb..ke {
                for j in kb..=i {
                    let d = dot(&l[i * n + kb..i * n + j], &l[j * n + kb..j * n + j]);
                    let v = l[i * n + j] - d;
                    if i == j {
                        if !(v > 0.0) || !v.is_finite() {
                            return Err(Error::SingularSystem(format!(
                                "non-positive pivot {v:e} at row {i}"
                            )));
                        }
                        l[i * n + i] = v.sqrt();
                    } else {
                        l[i * n + j] = v / l[j * n + j];
                    }
                }
            }
            // panel below the diagonal block
            for i in ke..n {
                for j in kb..ke {
                    let d = dot(&l[i * n + kb..i * n + j], &l[j * n + kb..j * n + j]);
                    l[i * n + j] = (l[i * n + j] - d) / l[j * n + j];
                }
            }
            // trailing update, lower triangle only, tiled over columns
            let mut jb = ke;
            while jb < n {
                let je = (jb + BLOCK).min(n);
                for i in jb..n {
                    let jmax = je.min(i + 1);
                    for j in jb..jmax {
                        let d = dot(&l[i * n + kb..i * n + ke], &l[j * n + kb..j * n + ke]);
                        l[i * n + j] -= d;
                    }
                }
                jb = je;
            }
            kb = ke;
        }
        // clear the strict upper triangle
        for i in 0..n {
            for v in &mut l[i * n + i + 1..(i + 1) * n] {
                *v = 0.0;
            }
        }
        Ok(Self { n, l })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let l = &self.l;
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            let d = dot(&l[i * n..i * n + i], &b[..i]);
            b[i] = (b[i] - d) / l[i * n + i];
        }
        for k in (0..n).rev() {
            let xk = b[k] / l[k * n + k];
            b[k] = xk;
            let row = &l[k * n..k * n + k];
            for (bi, lki) in b[..k].iter_mut().zip(row) {
                *bi -= lki * xk;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
