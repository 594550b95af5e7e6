//! Toeplitz space-time block codes.
//!
//! A block of `L` symbols is spread over `N = K + L − 1` channel uses by the
//! banded shift matrix `T(s, L, K)` and then beamformed onto `M` antennas by
//! a `K × M` transmission matrix `B`. At the receiver the same structure
//! reappears with the roles of symbols and channel swapped: the `N × L`
//! equivalent channel is `T(B·h, K, L)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, ComplexMatrix};

/// Smallest singular value `B` must exceed to count as full row rank.
pub const RANK_SINGULAR_VALUE_TOL: f64 = 1e-10;

/// The `(K + L − 1) × K` banded Toeplitz matrix generated by `alpha`
/// (length `L`): entry `(i, j)` is `alpha[i − j]` when `0 ≤ i − j < L`.
pub fn toeplitz_matrix(alpha: &[Complex64], l: usize, k: usize) -> Result<ComplexMatrix> {
    if alpha.is_empty() {
        return Err(Error::arg("Toeplitz generator must be non-empty"));
    }
    if alpha.len() != l {
        return Err(Error::arg(format!("generator has length {} but L = {l}", alpha.len())));
    }
    if k == 0 {
        return Err(Error::arg("Toeplitz matrix needs K >= 1 columns"));
    }
    Ok(ComplexMatrix::from_fn(k + l - 1, k, |i, j| {
        if i >= j && i - j < l {
            alpha[i - j]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// Code geometry `(M, K, L)` and transmission matrix `B` (`K × M`, rank `K`).
#[derive(Debug, Clone)]
pub struct ToeplitzCode {
    m: usize,
    k: usize,
    l: usize,
    b: ComplexMatrix,
}

impl ToeplitzCode {
    pub fn new(b: ComplexMatrix, l: usize) -> Result<Self> {
        let (k, m) = (b.rows(), b.cols());
        if k == 0 || m == 0 || l == 0 {
            return Err(Error::arg(format!("degenerate code geometry M={m}, K={k}, L={l}")));
        }
        if k > m {
            return Err(Error::arg(format!("K = {k} exceeds M = {m}")));
        }
        let bbh = &b * &b.adjoint();
        let smallest = hermitian_eig(&bbh)?.lambdas.last().copied().unwrap_or(0.0);
        if !(smallest.max(0.0).sqrt() > RANK_SINGULAR_VALUE_TOL) {
            return Err(Error::arg(format!(
                "transmission matrix is rank deficient (smallest singular value {:e})",
                smallest.max(0.0).sqrt()
            )));
        }
        Ok(Self { m, k, l, b })
    }

    /// `B = I_M`, the plain delay-diversity layout.
    pub fn identity(m: usize, l: usize) -> Result<Self> {
        Self::new(ComplexMatrix::identity(m), l)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// Channel uses per block, `K + L − 1`.
    pub fn n(&self) -> usize {
        self.k + self.l - 1
    }

    pub fn b(&self) -> &ComplexMatrix {
        &self.b
    }

    /// Transmit power `tr(BᴴB)`.
    pub fn power(&self) -> f64 {
        self.b.gram().trace().re
    }

    /// `T(s, L, K)·B`, the `N × M` codeword for symbol block `s`.
    pub fn encode(&self, s: &[Complex64]) -> Result<ComplexMatrix> {
        if s.len() != self.l {
            return Err(Error::arg(format!("block has {} symbols, code expects L = {}", s.len(), self.l)));
        }
        Ok(&toeplitz_matrix(s, self.l, self.k)? * &self.b)
    }

    /// Beamformed channel taps `B·h`.
    pub fn effective_taps(&self, h: &[Complex64]) -> Result<Vec<Complex64>> {
        if h.len() != self.m {
            return Err(Error::arg(format!("channel has {} taps, code expects M = {}", h.len(), self.m)));
        }
        Ok(self.b.mul_vec(h))
    }

    /// `T(B·h, K, L)`, the `N × L` matrix through which the receiver sees `s`.
    pub fn equivalent_channel(&self, h: &[Complex64]) -> Result<ComplexMatrix> {
        let taps = self.effective_taps(h)?;
        toeplitz_matrix(&taps, self.k, self.l)
    }

    /// Symbols per channel use, `L / (K + L − 1)`.
    pub fn symbol_rate(&self) -> f64 {
        self.l as f64 / self.n() as f64
    }

    /// Symbol rate as a reduced fraction `(numerator, denominator)`.
    pub fn symbol_rate_fraction(&self) -> (usize, usize) {
        let g = gcd(self.l, self.n());
        (self.l / g, self.n() / g)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::vec_norm;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn randc(rng: &mut impl Rng, n: usize) -> Vec<Complex64> {
        (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    #[test]
    fn two_by_two_example() {
        let s = [c(1.0, 2.0), c(-3.0, 0.5)];
        let t = toeplitz_matrix(&s, 2, 2).unwrap();
        let z = c(0.0, 0.0);
        let expect = ComplexMatrix::from_row_major(3, 2, vec![s[0], z, s[1], s[0], z, s[1]]).unwrap();
        assert_eq!(t, expect);

        let code = ToeplitzCode::identity(2, 2).unwrap();
        assert_eq!(code.encode(&s).unwrap(), expect);
        let h = [c(0.3, -0.1), c(0.7, 0.2)];
        let hc = code.equivalent_channel(&h).unwrap();
        let expect_h = ComplexMatrix::from_row_major(3, 2, vec![h[0], z, h[1], h[0], z, h[1]]).unwrap();
        assert_eq!(hc, expect_h);
        assert_eq!(code.symbol_rate_fraction(), (2, 3));
    }

    #[test]
    fn single_symbol_gives_scaled_identity() {
        let a = c(0.4, -2.0);
        let t = toeplitz_matrix(&[a], 1, 3).unwrap();
        assert_eq!(t, ComplexMatrix::identity(3).scale_complex(a));
    }

    #[test]
    fn columns_are_shifted_copies() {
        let alpha = [c(1.0, 0.0), c(2.0, 1.0), c(-1.0, 3.0)];
        let t = toeplitz_matrix(&alpha, 3, 2).unwrap();
        assert_eq!(t.rows(), 4);
        for i in 0..3 {
            assert_eq!(t[(i + 1, 1)], t[(i, 0)]);
        }
        assert_eq!(t[(0, 1)], c(0.0, 0.0));
        assert_eq!(t[(3, 0)], c(0.0, 0.0));
    }

    #[test]
    fn argument_checks() {
        assert!(toeplitz_matrix(&[], 0, 2).is_err());
        assert!(toeplitz_matrix(&[c(1.0, 0.0)], 2, 2).is_err());
        let code = ToeplitzCode::identity(3, 4).unwrap();
        assert!(code.encode(&[c(1.0, 0.0); 3]).is_err());
        assert!(code.equivalent_channel(&[c(1.0, 0.0); 2]).is_err());
        assert!(ToeplitzCode::new(ComplexMatrix::zeros(2, 3), 4).is_err());
        assert!(ToeplitzCode::new(ComplexMatrix::identity(3).select_columns(&[0, 1]).transpose().adjoint(), 4).is_err());
    }

    #[test]
    fn identity_basis_channel() {
        let code = ToeplitzCode::identity(3, 4).unwrap();
        let hc = code.equivalent_channel(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        // Only the leading tap is non-zero: the first L rows form I_L.
        for i in 0..hc.rows() {
            for j in 0..hc.cols() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert_eq!(hc[(i, j)], c(e, 0.0));
            }
        }
    }

    #[test]
    fn rates() {
        let code = ToeplitzCode::identity(4, 8).unwrap();
        assert!((code.symbol_rate() - 0.7273).abs() < 1e-4);
        assert_eq!(code.symbol_rate_fraction(), (8, 11));
        let mut last = 0.0;
        for l in 1..200 {
            let r = ToeplitzCode::identity(2, l).unwrap().symbol_rate();
            assert!(r > last && r < 1.0 || (l == 1 && r == 0.5));
            last = r;
        }
    }

    #[test]
    fn encode_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = ComplexMatrix::from_fn(2, 4, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let code = ToeplitzCode::new(b, 5).unwrap();
        let s1 = randc(&mut rng, 5);
        let s2 = randc(&mut rng, 5);
        let sum: Vec<_> = s1.iter().zip(&s2).map(|(a, b)| a + b).collect();
        let lhs = code.encode(&sum).unwrap();
        let rhs = &code.encode(&s1).unwrap() + &code.encode(&s2).unwrap();
        assert!((&lhs - &rhs).max_abs() < 1e-12);
        assert_eq!(code.encode(&[c(0.0, 0.0); 5]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn exchange_identity_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let m = rng.random_range(1..=8);
            let k = rng.random_range(1..=m);
            let l = rng.random_range(1..=16);
            let b = ComplexMatrix::from_fn(k, m, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let Ok(code) = ToeplitzCode::new(b, l) else { continue };
            let s = randc(&mut rng, l);
            let h = randc(&mut rng, m);
            let lhs = code.encode(&s).unwrap().mul_vec(&h);
            let rhs = code.equivalent_channel(&h).unwrap().mul_vec(&s);
            let diff: Vec<_> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
            assert!(vec_norm(&diff) <= 1e-12 * vec_norm(&lhs).max(1.0));
        }
    }

    #[test]
    fn gram_diagonal_is_squared_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let l = rng.random_range(1..10);
            let k = rng.random_range(1..6);
            let alpha = randc(&mut rng, l);
            let g = toeplitz_matrix(&alpha, l, k).unwrap().gram();
            let n2 = vec_norm(&alpha).powi(2);
            for i in 0..k {
                assert!((g[(i, i)].re - n2).abs() < 1e-12);
            }
        }
    }

    fn unit(v: Vec<Complex64>) -> Vec<Complex64> {
        let n = vec_norm(&v);
        v.into_iter().map(|z| z / n).collect()
    }

    #[test]
    fn determinant_sandwich_for_unit_generators() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut gauss = || -> f64 {
            // Box-Muller keeps this test free of rand_distr.
            let u: f64 = rng.random_range(f64::EPSILON..1.0);
            let v: f64 = rng.random();
            (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
        };
        for trial in 0..100_000 {
            let l = 1 + trial % 6;
            let k = 1 + (trial / 6) % 4;
            let alpha = unit((0..l).map(|_| c(gauss(), gauss())).collect());
            let t = toeplitz_matrix(&alpha, l, k).unwrap();
            let det = t.gram().det().re;
            assert!(det > 0.0 && det <= 1.0 + 1e-12, "det {det}");
            assert!(det >= alpha[0].norm_sqr().powi(k as i32) * (1.0 - 1e-12));
            // Largest-magnitude entry moved to the front.
            let mut sorted = alpha.clone();
            let imax = (0..l).max_by(|&a, &b| alpha[a].norm().total_cmp(&alpha[b].norm())).unwrap();
            sorted.swap(0, imax);
            let det2 = toeplitz_matrix(&sorted, l, k).unwrap().gram().det().re;
            assert!(det2 >= sorted[0].norm_sqr().powi(k as i32) * (1.0 - 1e-12));
        }
    }

    /// Every error vector between two 4-QAM blocks of length `l`.
    fn qam4_error_vectors(l: usize) -> Vec<Vec<Complex64>> {
        let diffs = [-2.0, 0.0, 2.0];
        let per: Vec<Complex64> = diffs.iter().flat_map(|&r| diffs.iter().map(move |&i| c(r, i))).collect();
        let mut out = vec![vec![]];
        for _ in 0..l {
            out = out
                .into_iter()
                .flat_map(|v| {
                    per.iter().map(move |&d| {
                        let mut w = v.clone();
                        w.push(d);
                        w
                    })
                })
                .collect();
        }
        out.retain(|v| v.iter().any(|z| z.norm() > 0.0));
        out
    }

    #[test]
    fn column_subset_determinant_bound() {
        let (m, l) = (3, 3);
        let dmin2: f64 = 4.0;
        for e in qam4_error_vectors(l) {
            let x = toeplitz_matrix(&e, l, m).unwrap();
            let neighbours = (vec_norm(&e) - 2.0).abs() < 1e-12;
            for mask in 1u32..(1 << m) {
                let cols: Vec<usize> = (0..m).filter(|j| mask >> j & 1 == 1).collect();
                let d = x.select_columns(&cols).gram().det().re;
                let bound = dmin2.powi(cols.len() as i32);
                assert!(d >= bound * (1.0 - 1e-12), "{d} < {bound}");
                assert_eq!((d - bound).abs() < 1e-9, neighbours, "e={e:?}, cols={cols:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn exchange_identity_prop(seed in any::<u64>(), m in 1usize..=8, l in 1usize..=16) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let code = ToeplitzCode::identity(m, l).unwrap();
            let s = randc(&mut rng, l);
            let h = randc(&mut rng, m);
            let lhs = code.encode(&s).unwrap().mul_vec(&h);
            let rhs = code.equivalent_channel(&h).unwrap().mul_vec(&s);
            for (a, b) in lhs.iter().zip(&rhs) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }
    }
}
