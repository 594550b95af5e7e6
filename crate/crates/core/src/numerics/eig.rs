//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.

use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Tolerance on `|A_ij − conj(A_ji)|` for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigenvalues below `-PSD_TOL` reject a matrix as not positive semidefinite.
pub const PSD_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 100;

/// `A = V · diag(lambdas) · Vᴴ` with eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct EigDecomposition {
    /// Unitary; column `k` pairs with `lambdas[k]`.
    pub vectors: ComplexMatrix,
    pub lambdas: Vec<f64>,
}

impl EigDecomposition {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.lambdas.len();
        let v = &self.vectors;
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * self.lambdas[k] * v[(j, k)].conj())
                .sum()
        })
    }

    /// The `k` leading eigenvectors as an `n × k` matrix.
    pub fn leading_vectors(&self, k: usize) -> ComplexMatrix {
        self.vectors.select_columns(&(0..k).collect::<Vec<_>>())
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The input is symmetrized as `(A + Aᴴ)/2` after the Hermitian check so
/// rounding-level asymmetry does not leak into the rotations.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<EigDecomposition> {
    if !a.is_square() {
        return Err(Error::arg("eigendecomposition of a non-square matrix"));
    }
    let scale = a.max_abs().max(1.0);
    if !a.is_hermitian(HERMITIAN_TOL * scale) {
        return Err(Error::arg(format!(
            "matrix is not Hermitian (defect {:e})",
            a.hermitian_defect()
        )));
    }
    let n = a.rows();
    let mut m = ComplexMatrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)].conj()));
    let mut v = ComplexMatrix::identity(n);

    let off = |m: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)].norm_sqr();
                }
            }
        }
        s
    };
    let total = m.frobenius_norm().powi(2);
    let target = (f64::EPSILON * f64::EPSILON) * total.max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        if off(&m) <= target {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                // Phase that makes the (p,q) entry real, then a real rotation.
                let e = apq / mag;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let ec = e.conj();

                // Columns: A ← A·U with U_pp=c, U_pq=s, U_qp=−s·ē, U_qq=c·ē.
                for i in 0..n {
                    let aip = m[(i, p)];
                    let aiq = m[(i, q)];
                    m[(i, p)] = aip * c - aiq * (s * ec);
                    m[(i, q)] = aip * s + aiq * (c * ec);
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c - viq * (s * ec);
                    v[(i, q)] = vip * s + viq * (c * ec);
                }
                // Rows: A ← Uᴴ·A.
                for j in 0..n {
                    let apj = m[(p, j)];
                    let aqj = m[(q, j)];
                    m[(p, j)] = apj * c - aqj * (s * e);
                    m[(q, j)] = apj * s + aqj * (c * e);
                }
                m[(p, q)] = Complex64::new(0.0, 0.0);
                m[(q, p)] = Complex64::new(0.0, 0.0);
                m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    // Stable sort keeps the original order on ties.
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap_or(std::cmp::Ordering::Equal));
    let lambdas = order.iter().map(|&i| diag[i]).collect();
    let vectors = v.select_columns(&order);
    Ok(EigDecomposition { vectors, lambdas })
}

/// Hermitian square root `S = V Λ^{1/2} Vᴴ` of a PSD matrix, so `S·Sᴴ = A`.
///
/// Eigenvalues in `[-PSD_TOL·‖A‖, 0)` are clamped to zero.
pub fn psd_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(a)?;
    psd_sqrt_from_eig(&eig, PSD_TOL * a.max_abs().max(1.0))
}

/// Square root from a precomputed decomposition; eigenvalues in `[-tol, 0)` clamp to zero.
pub(crate) fn psd_sqrt_from_eig(eig: &EigDecomposition, tol: f64) -> Result<ComplexMatrix> {
    let mut roots = Vec::with_capacity(eig.lambdas.len());
    for &l in &eig.lambdas {
        if l < -tol {
            return Err(Error::arg(format!("matrix is not PSD (eigenvalue {l:e})")));
        }
        roots.push(l.max(0.0).sqrt());
    }
    let n = roots.len();
    let v = &eig.vectors;
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| v[(i, k)] * roots[k] * v[(j, k)].conj()).sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(n: usize, entries: &[f64]) -> ComplexMatrix {
        let mut a = ComplexMatrix::zeros(n, n);
        let mut it = entries.iter().cycle();
        for i in 0..n {
            a[(i, i)] = c(*it.next().unwrap(), 0.0);
            for j in i + 1..n {
                let z = c(*it.next().unwrap(), *it.next().unwrap());
                a[(i, j)] = z;
                a[(j, i)] = z.conj();
            }
        }
        a
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let e = hermitian_eig(&ComplexMatrix::identity(3)).unwrap();
        assert_eq!(e.lambdas, vec![1.0, 1.0, 1.0]);
        let vhv = e.vectors.gram();
        assert!((&vhv - &ComplexMatrix::identity(3)).max_abs() < 1e-14);
    }

    #[test]
    fn diagonal_input_is_sorted_descending() {
        let e = hermitian_eig(&ComplexMatrix::from_diag(&[1.0, 4.0])).unwrap();
        assert_eq!(e.lambdas, vec![4.0, 1.0]);
    }

    #[test]
    fn psd_4x4_reconstructs() {
        let b = ComplexMatrix::from_fn(4, 4, |i, j| c((i as f64 - j as f64) * 0.37 + 0.1, (i * j) as f64 * 0.21 - 0.4));
        let a = b.gram();
        let e = hermitian_eig(&a).unwrap();
        assert!((&e.reconstruct() - &a).max_abs() <= 1e-10 * a.frobenius_norm());
        assert!(e.lambdas.windows(2).all(|w| w[0] >= w[1]));
        assert!(e.lambdas.iter().all(|&l| l > -1e-12));
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let mut a = ComplexMatrix::identity(2);
        a[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(hermitian_eig(&a), Err(Error::Argument(_))));
    }

    #[test]
    fn sqrt_of_diagonal() {
        let s = psd_sqrt(&ComplexMatrix::from_diag(&[4.0, 9.0])).unwrap();
        assert!((&s - &ComplexMatrix::from_diag(&[2.0, 3.0])).max_abs() < 1e-14);
        let s = psd_sqrt(&ComplexMatrix::identity(3)).unwrap();
        assert!((&s - &ComplexMatrix::identity(3)).max_abs() < 1e-14);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        assert!(psd_sqrt(&ComplexMatrix::from_diag(&[1.0, -0.5])).is_err());
    }

    #[test]
    fn sqrt_handles_rank_deficiency() {
        let a = ComplexMatrix::from_fn(3, 3, |_, _| c(1.0, 0.0));
        let s = psd_sqrt(&a).unwrap();
        assert!((&(&s * &s.adjoint()) - &a).max_abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn reconstruction_up_to_16x16(n in 1usize..=16, entries in proptest::collection::vec(-2.0f64..2.0, 64)) {
            let a = random_hermitian(n, &entries);
            let e = hermitian_eig(&a).unwrap();
            let err = (&e.reconstruct() - &a).max_abs();
            prop_assert!(err <= 1e-10 * a.frobenius_norm().max(1.0), "err {err:e}");
            let vhv = e.vectors.gram();
            prop_assert!((&vhv - &ComplexMatrix::identity(n)).max_abs() < 1e-10);
            prop_assert!(e.lambdas.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
