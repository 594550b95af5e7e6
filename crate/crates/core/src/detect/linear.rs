//! Zero-forcing, MMSE and zero-forcing decision-feedback receivers.

use num_complex::Complex64;

use super::{Detection, DetectionProblem};
use crate::error::{Error, Result};
use crate::numerics::{solve_hpd, ThinQr};

/// Unsliced ZF output `(HᴴH)⁻¹Hᴴy`, computed through a thin QR of `H`.
pub fn zf_equalize(p: &DetectionProblem<'_>) -> Result<Vec<Complex64>> {
    Ok(ThinQr::new(p.hc())?.solve_least_squares(p.y()))
}

/// Linear ZF followed by symbol-by-symbol slicing.
pub fn zf_detect(p: &DetectionProblem<'_>) -> Result<Detection> {
    let c = p.constellation();
    let raw = zf_equalize(p)?;
    Ok(Detection::from_indices(raw.iter().map(|&z| c.slice_index(z)).collect(), c))
}

/// Unsliced MMSE output `(HᴴH + (2σ²/E_s)·I)⁻¹Hᴴy`.
///
/// `2σ²` is the complex noise power under the per-dimension convention.
pub fn mmse_equalize(p: &DetectionProblem<'_>) -> Result<Vec<Complex64>> {
    let mut a = p.hc().gram();
    let reg = 2.0 * p.sigma2() / p.constellation().avg_energy();
    for i in 0..a.rows() {
        a[(i, i)] += reg;
    }
    let rhs = p.hc().adjoint_mul_vec(p.y());
    solve_hpd(&a, &rhs).map_err(|e| match e {
        // Only reachable when σ² = 0 and H is rank deficient.
        Error::NumericalDomain(_) => Error::SingularChannel { pivot: 0.0 },
        other => other,
    })
}

pub fn mmse_detect(p: &DetectionProblem<'_>) -> Result<Detection> {
    let c = p.constellation();
    let raw = mmse_equalize(p)?;
    Ok(Detection::from_indices(raw.iter().map(|&z| c.slice_index(z)).collect(), c))
}

/// ZF-DFE: back-substitution on `Qᴴy = R·s`, slicing each symbol before
/// it is fed back. Detection runs from the last symbol to the first.
pub fn zf_dfe_detect(p: &DetectionProblem<'_>) -> Result<Detection> {
    let c = p.constellation();
    let qr = ThinQr::new(p.hc())?;
    let z = qr.q.adjoint_mul_vec(p.y());
    let l = p.l();
    let mut decided = vec![Complex64::new(0.0, 0.0); l];
    let mut indices = vec![0; l];
    for i in (0..l).rev() {
        let mut acc = z[i];
        for j in i + 1..l {
            acc -= qr.r[(i, j)] * decided[j];
        }
        let k = c.slice_index(acc / qr.r[(i, i)]);
        indices[i] = k;
        decided[i] = c.point(k);
    }
    Ok(Detection::from_indices(indices, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::complex_gaussian;
    use crate::modulation::{Constellation, Scheme};
    use crate::numerics::ComplexMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_problem(rng: &mut impl Rng, n: usize, l: usize) -> (ComplexMatrix, Vec<Complex64>) {
        let hc = ComplexMatrix::from_fn(n, l, |_, _| complex_gaussian(rng, 0.5));
        let y = (0..n).map(|_| complex_gaussian(rng, 1.0)).collect();
        (hc, y)
    }

    #[test]
    fn hand_solved_normal_equations() {
        let one = c(1.0, 0.0);
        let z = c(0.0, 0.0);
        let hc = ComplexMatrix::from_row_major(3, 2, vec![one, z, one, one, z, one]).unwrap();
        let y = [c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)];
        let con = Constellation::new(Scheme::Qam, 4).unwrap();
        let p = DetectionProblem::new(&hc, &y, 1.0, &con).unwrap();
        // HᴴH = [[2,1],[1,2]], Hᴴy = [3,3], so ŝ = (1/3)[[2,−1],[−1,2]]·[3,3] = [1,1].
        let raw = zf_equalize(&p).unwrap();
        assert!((raw[0] - one).norm() < 1e-14 && (raw[1] - one).norm() < 1e-14);
    }

    #[test]
    fn zf_matches_explicit_normal_equations_and_residual_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let con = Constellation::new(Scheme::Qam, 16).unwrap();
        for _ in 0..200 {
            let l = rng.random_range(1..6);
            let n = l + rng.random_range(0..4);
            let (hc, y) = random_problem(&mut rng, n, l);
            let p = DetectionProblem::new(&hc, &y, 0.1, &con).unwrap();
            let raw = zf_equalize(&p).unwrap();
            let oracle = hc.gram().inverse().unwrap().mul_vec(&hc.adjoint_mul_vec(&y));
            for (a, b) in raw.iter().zip(&oracle) {
                assert!((a - b).norm() < 1e-10 * b.norm().max(1.0));
            }
            let r: Vec<Complex64> = y.iter().zip(hc.mul_vec(&raw)).map(|(a, b)| a - b).collect();
            for v in hc.adjoint_mul_vec(&r) {
                assert!(v.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn zf_rejects_rank_deficient_channels() {
        let con = Constellation::new(Scheme::Qam, 4).unwrap();
        let hc = ComplexMatrix::zeros(3, 2);
        let y = [c(1.0, 0.0); 3];
        let p = DetectionProblem::new(&hc, &y, 0.1, &con).unwrap();
        assert!(matches!(zf_detect(&p), Err(Error::SingularChannel { .. })));
        assert!(matches!(zf_dfe_detect(&p), Err(Error::SingularChannel { .. })));
        assert!(mmse_detect(&p).is_ok());
        let p0 = DetectionProblem::new(&hc, &y, 0.0, &con).unwrap();
        assert!(matches!(mmse_detect(&p0), Err(Error::SingularChannel { .. })));
    }

    #[test]
    fn mmse_tends_to_zf_and_shrinks_under_heavy_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let con = Constellation::new(Scheme::Qam, 4).unwrap();
        for _ in 0..50 {
            let (hc, y) = random_problem(&mut rng, 5, 3);
            let zf = zf_equalize(&DetectionProblem::new(&hc, &y, 0.0, &con).unwrap()).unwrap();
            let mmse = mmse_equalize(&DetectionProblem::new(&hc, &y, 1e-14, &con).unwrap()).unwrap();
            for (a, b) in zf.iter().zip(&mmse) {
                assert!((a - b).norm() < 1e-8);
            }
            let small = mmse_equalize(&DetectionProblem::new(&hc, &y, 1e6, &con).unwrap()).unwrap();
            let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();
            assert!(norm(&small) < 1e-4 * norm(&zf));
        }
    }

    #[test]
    fn dfe_with_one_symbol_is_zf() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let con = Constellation::new(Scheme::Psk, 8).unwrap();
        for _ in 0..200 {
            let (hc, y) = random_problem(&mut rng, 3, 1);
            let p = DetectionProblem::new(&hc, &y, 1.0, &con).unwrap();
            assert_eq!(zf_detect(&p).unwrap(), zf_dfe_detect(&p).unwrap());
        }
    }
}
