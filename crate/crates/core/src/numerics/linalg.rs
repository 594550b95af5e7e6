//! Factorizations needed by the detectors: thin Householder QR and a
//! Cholesky solve for Hermitian positive-definite systems.

use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Relative pivot threshold below which a column is treated as dependent.
pub const RANK_TOL: f64 = 1e-10;

/// Thin QR factorization `A = Q·R` of a tall matrix (rows ≥ cols).
#[derive(Debug, Clone)]
pub struct ThinQr {
    /// rows × cols with orthonormal columns.
    pub q: ComplexMatrix,
    /// cols × cols upper triangular.
    pub r: ComplexMatrix,
}

impl ThinQr {
    /// Householder QR. Fails with [`Error::SingularChannel`] when some
    /// `|R_kk|` falls below `RANK_TOL` times the largest one.
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        let (m, n) = (a.rows(), a.cols());
        if m < n {
            return Err(Error::arg(format!("thin QR needs rows >= cols, got {m}x{n}")));
        }
        let mut r = a.clone();
        let mut reflectors: Vec<Vec<Complex64>> = Vec::with_capacity(n);
        for k in 0..n {
            let norm_x = (k..m).map(|i| r[(i, k)].norm_sqr()).sum::<f64>().sqrt();
            let mut v: Vec<Complex64> = (k..m).map(|i| r[(i, k)]).collect();
            if norm_x == 0.0 {
                reflectors.push(Vec::new());
                continue;
            }
            let x0 = v[0];
            let phase = if x0.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                x0 / x0.norm()
            };
            let alpha = -phase * norm_x;
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            if vnorm2 == 0.0 {
                reflectors.push(Vec::new());
                continue;
            }
            for j in k..n {
                let dot: Complex64 = v.iter().enumerate().map(|(t, vi)| vi.conj() * r[(k + t, j)]).sum();
                let f = dot * (2.0 / vnorm2);
                for (t, vi) in v.iter().enumerate() {
                    r[(k + t, j)] -= vi * f;
                }
            }
            for i in k + 1..m {
                r[(i, k)] = Complex64::new(0.0, 0.0);
            }
            reflectors.push(v);
        }

        let rmat = ComplexMatrix::from_fn(n, n, |i, j| if j >= i { r[(i, j)] } else { Complex64::new(0.0, 0.0) });
        let diag_max = (0..n).map(|i| rmat[(i, i)].norm()).fold(0.0, f64::max);
        let diag_min = (0..n).map(|i| rmat[(i, i)].norm()).fold(f64::INFINITY, f64::min);
        if n > 0 && (diag_max == 0.0 || diag_min <= RANK_TOL * diag_max) {
            return Err(Error::SingularChannel { pivot: diag_min });
        }

        // Q = H_0 H_1 … H_{n-1} applied to the first n columns of I.
        let mut q = ComplexMatrix::from_fn(m, n, |i, j| {
            if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        for (k, v) in reflectors.iter().enumerate().rev() {
            if v.is_empty() {
                continue;
            }
            let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            for j in 0..n {
                let dot: Complex64 = v.iter().enumerate().map(|(t, vi)| vi.conj() * q[(k + t, j)]).sum();
                let f = dot * (2.0 / vnorm2);
                for (t, vi) in v.iter().enumerate() {
                    q[(k + t, j)] -= vi * f;
                }
            }
        }
        Ok(Self { q, r: rmat })
    }

    /// Least-squares solution of `A x ≈ b`.
    pub fn solve_least_squares(&self, b: &[Complex64]) -> Vec<Complex64> {
        let z = self.q.adjoint_mul_vec(b);
        back_substitute(&self.r, &z)
    }

    /// Diagonal of `(AᴴA)⁻¹ = R⁻¹R⁻ᴴ`, i.e. squared row norms of `R⁻¹`.
    pub fn gram_inverse_diag(&self) -> Vec<f64> {
        let n = self.r.cols();
        let rinv = upper_triangular_inverse(&self.r);
        (0..n)
            .map(|i| (0..n).map(|j| rinv[(i, j)].norm_sqr()).sum())
            .collect()
    }
}

/// Solves `R x = z` for upper-triangular `R`.
pub fn back_substitute(r: &ComplexMatrix, z: &[Complex64]) -> Vec<Complex64> {
    let n = r.cols();
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut acc = z[i];
        for j in i + 1..n {
            acc -= r[(i, j)] * x[j];
        }
        x[i] = acc / r[(i, i)];
    }
    x
}

fn upper_triangular_inverse(r: &ComplexMatrix) -> ComplexMatrix {
    let n = r.cols();
    let mut inv = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[j] = Complex64::new(1.0, 0.0);
        let col = back_substitute(r, &e);
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    inv
}

/// Solves `A x = b` for Hermitian positive-definite `A` via Cholesky.
pub fn solve_hpd(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = a.rows();
    if !a.is_square() || b.len() != n {
        return Err(Error::arg("solve_hpd: dimension mismatch"));
    }
    // Lower-triangular factor, A = L Lᴴ.
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NumericalDomain(format!(
                "matrix is not positive definite (pivot {d:e} at {j})"
            )));
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut acc = b[i];
        for k in 0..i {
            acc -= l[(i, k)] * y[k];
        }
        y[i] = acc / l[(i, i)];
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut acc = y[i];
        for k in i + 1..n {
            acc -= l[(k, i)].conj() * x[k];
        }
        x[i] = acc / l[(i, i)];
    }
    Ok(x)
}
