//! Closed-form error analysis.
//!
//! Per-realization ZF symbol error probabilities and their exponential
//! bounds, pairwise error probabilities under correlated Rayleigh fading,
//! diversity-multiplexing predictions, and sampling estimators for the
//! determinant constants of a structured matrix family.
//!
//! Throughout, `g` denotes the ZF noise enhancement `[(HᴴH)⁻¹]_ℓℓ` of the
//! symbol under study and `ρ = E_s/σ²` the symbol SNR.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::complex_gaussian;
use crate::error::{Error, Result};
use crate::modulation::Scheme;
use crate::numerics::{hermitian_eig, integrate_theta, psd_sqrt, q_function, q_squared, vec_norm, ComplexMatrix};
use crate::stbc::{toeplitz_matrix, ToeplitzCode};

/// Exponent constant and prefactor of the unified SEP bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConstants {
    pub scheme_index: usize,
    pub a: f64,
    /// `(μ − 1)/μ`.
    pub prefactor: f64,
}

impl SchemeConstants {
    pub fn new(scheme: Scheme, mu: usize) -> Result<Self> {
        scheme.validate_mu(mu)?;
        let m = mu as f64;
        let a = match scheme {
            Scheme::Qam => 3.0 / (4.0 * (m - 1.0)),
            Scheme::Pam => 3.0 / (2.0 * (m * m - 1.0)),
            Scheme::Psk => (PI / m).sin().powi(2) / 2.0,
        };
        Ok(Self {
            scheme_index: scheme.index(),
            a,
            prefactor: (m - 1.0) / m,
        })
    }
}

fn check_sep_args(rho: f64, g: f64) -> Result<()> {
    if !(rho >= 0.0) || rho.is_nan() {
        return Err(Error::arg(format!("SNR must be non-negative, got {rho}")));
    }
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::arg(format!("noise enhancement must be positive and finite, got {g}")));
    }
    Ok(())
}

/// Exact ZF symbol error probability for one channel realization.
pub fn sep_zf(scheme: Scheme, mu: usize, rho: f64, g: f64) -> Result<f64> {
    scheme.validate_mu(mu)?;
    check_sep_args(rho, g)?;
    let m = mu as f64;
    match scheme {
        Scheme::Qam => {
            let q = 1.0 - 1.0 / m.sqrt();
            let z = (3.0 * rho / (2.0 * (m - 1.0) * g)).sqrt();
            Ok(4.0 * q * q_function(z)? - 4.0 * q * q * q_squared(z)?)
        }
        Scheme::Pam => {
            let z = (3.0 * rho / ((m * m - 1.0) * g)).sqrt();
            Ok(2.0 * (m - 1.0) / m * q_function(z)?)
        }
        Scheme::Psk => {
            let c = rho * (PI / m).sin().powi(2) / (2.0 * g);
            let upper = (m - 1.0) * PI / m;
            Ok(integrate_theta(|t| (-c / t.sin().powi(2)).exp(), 0.0, upper)? / PI)
        }
    }
}

/// Square-QAM ZF SEP in single-integral form.
///
/// Substituting the integral forms of `Q` and `Q²` into the `Q`/`Q²`
/// expression gives weight `(4/π√μ)(1 − 1/√μ)` on `[0, π/4]` and
/// `(4/π)(1 − 1/√μ)` on `[π/4, π/2]`.
pub fn sep_qam_integral(mu: usize, rho: f64, g: f64) -> Result<f64> {
    Scheme::Qam.validate_mu(mu)?;
    check_sep_args(rho, g)?;
    let m = mu as f64;
    let q = 1.0 - 1.0 / m.sqrt();
    let c = 3.0 * rho / (4.0 * (m - 1.0) * g);
    let f = |t: f64| (-c / t.sin().powi(2)).exp();
    let low = integrate_theta(f, 0.0, FRAC_PI_4)?;
    // The upper panel stays away from θ = 0, so the graded rule is not needed there.
    let high = crate::numerics::integrate(f, FRAC_PI_4, FRAC_PI_2, crate::numerics::DEFAULT_POINTS)?;
    Ok(4.0 * q / (PI * m.sqrt()) * low + 4.0 * q / PI * high)
}

/// `(μ−1)/μ · exp(−a·ρ/g)`.
pub fn sep_upper_bound(scheme: Scheme, mu: usize, rho: f64, g: f64) -> Result<f64> {
    check_sep_args(rho, g)?;
    let k = SchemeConstants::new(scheme, mu)?;
    Ok(k.prefactor * (-k.a * rho / g).exp())
}

/// Fading-averaged bound `(μ−1)/μ · det(I + a·ρ·C₀·Σ)⁻¹`.
pub fn avg_sep_bound(scheme: Scheme, mu: usize, rho: f64, c0: f64, sigma: &ComplexMatrix) -> Result<f64> {
    if !(c0 > 0.0) || !c0.is_finite() {
        return Err(Error::arg(format!("C0 must be positive, got {c0}")));
    }
    if !(rho >= 0.0) {
        return Err(Error::arg(format!("SNR must be non-negative, got {rho}")));
    }
    let k = SchemeConstants::new(scheme, mu)?;
    let eig = hermitian_eig(sigma)?;
    if eig.lambdas.iter().any(|&l| l < -1e-10 * sigma.max_abs().max(1.0)) {
        return Err(Error::arg("covariance is not PSD"));
    }
    let det: f64 = eig.lambdas.iter().map(|&l| 1.0 + k.a * rho * c0 * l.max(0.0)).product();
    Ok(k.prefactor / det)
}

/// Eigenvalues of `Σ^{1/2}·X_Bᴴ(e)·X_B(e)·Σ^{1/2}`, which share the
/// determinant of `I + c·Σ·X_BᴴX_B` without its cancellation at large `c`.
fn pep_modes(code: &ToeplitzCode, sigma: &ComplexMatrix, e: &[Complex64], sigma2: f64) -> Result<Vec<f64>> {
    if e.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Err(Error::arg("error vector must be non-zero"));
    }
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::arg(format!("noise variance must be positive, got {sigma2}")));
    }
    if sigma.rows() != code.m() || sigma.cols() != code.m() {
        return Err(Error::arg(format!("covariance must be {0}x{0}", code.m())));
    }
    let x = code.encode(e)?;
    covariance_modes(sigma, &x.gram())
}

/// Eigenvalues of `Σ^{1/2}·G·Σ^{1/2}` for PSD `Σ` and `G`, clamped at zero.
pub fn covariance_modes(sigma: &ComplexMatrix, g: &ComplexMatrix) -> Result<Vec<f64>> {
    let root = psd_sqrt(sigma)?;
    let mut r = &(&root * g) * &root;
    let n = r.rows();
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (r[(i, j)] + r[(j, i)].conj());
            r[(i, j)] = avg;
            r[(j, i)] = avg.conj();
        }
        r[(i, i)] = Complex64::new(r[(i, i)].re, 0.0);
    }
    Ok(hermitian_eig(&r)?.lambdas.into_iter().map(|l| l.max(0.0)).collect())
}

/// `(1/π)∫₀^{π/2} ∏_k (1 + w_k/sin²θ)⁻¹ dθ` for `w_k ≥ 0`.
pub fn product_integral(w: &[f64]) -> Result<f64> {
    let f = |t: f64| {
        let s2 = t.sin().powi(2);
        w.iter().map(|&w| s2 / (s2 + w)).product::<f64>()
    };
    Ok(integrate_theta(f, 0.0, FRAC_PI_2)? / PI)
}

/// Exact average PEP `(1/π)∫₀^{π/2} det(I + Σ·X_BᴴX_B/(8σ²sin²θ))⁻¹ dθ`.
pub fn pep_exact(code: &ToeplitzCode, sigma: &ComplexMatrix, e: &[Complex64], sigma2: f64) -> Result<f64> {
    let c = 1.0 / (8.0 * sigma2);
    let w: Vec<f64> = pep_modes(code, sigma, e, sigma2)?.into_iter().map(|m| c * m).collect();
    product_integral(&w)
}

/// Chernoff bound `½·det(I + Σ·X_BᴴX_B/(8σ²))⁻¹`.
pub fn pep_chernoff(code: &ToeplitzCode, sigma: &ComplexMatrix, e: &[Complex64], sigma2: f64) -> Result<f64> {
    let c = 1.0 / (8.0 * sigma2);
    Ok(0.5 / pep_modes(code, sigma, e, sigma2)?.iter().map(|m| 1.0 + c * m).product::<f64>())
}

/// A family of matrices `H(h)` parameterized by a coefficient vector `h`.
pub trait MatrixFamily {
    /// Length of `h`.
    fn dim(&self) -> usize;
    fn build(&self, h: &[Complex64]) -> Result<ComplexMatrix>;
}

/// `T(h, L, K)` with `h` of length `L`.
#[derive(Debug, Clone, Copy)]
pub struct ToeplitzFamily {
    pub l: usize,
    pub k: usize,
}

impl MatrixFamily for ToeplitzFamily {
    fn dim(&self) -> usize {
        self.l
    }

    fn build(&self, h: &[Complex64]) -> Result<ComplexMatrix> {
        toeplitz_matrix(h, self.l, self.k)
    }
}

/// The equivalent channel `T(B·h, K, L)` of a code, with `h` of length `M`.
impl MatrixFamily for ToeplitzCode {
    fn dim(&self) -> usize {
        self.m()
    }

    fn build(&self, h: &[Complex64]) -> Result<ComplexMatrix> {
        self.equivalent_channel(h)
    }
}

/// One unit-norm draw from a family.
#[derive(Debug, Clone)]
pub struct ConstantSample {
    pub h: Vec<Complex64>,
    /// `det(HᴴH)`.
    pub det: f64,
    /// `det(H_ℓᴴH_ℓ)` with column `ℓ` removed, for each `ℓ`.
    pub leave_one_out: Vec<f64>,
}

impl ConstantSample {
    /// `1/[(HᴴH)⁻¹]_ℓℓ = det(HᴴH)/det(H_ℓᴴH_ℓ)`, minimized over `ℓ`.
    pub fn min_inverse_gram_diag_reciprocal(&self) -> f64 {
        self.leave_one_out.iter().map(|&d| self.det / d).fold(f64::INFINITY, f64::min)
    }
}

/// Draws `h` uniformly on the unit complex sphere and evaluates the family.
pub fn sample_family<F: MatrixFamily + ?Sized, R: Rng + ?Sized>(family: &F, rng: &mut R) -> Result<ConstantSample> {
    let h = loop {
        let w: Vec<Complex64> = (0..family.dim()).map(|_| complex_gaussian(rng, 0.5)).collect();
        let n = vec_norm(&w);
        if n > 0.0 {
            break w.into_iter().map(|z| z / n).collect::<Vec<_>>();
        }
    };
    let hm = family.build(&h)?;
    let k = hm.cols();
    let det = hm.gram().det().re;
    let leave_one_out = (0..k)
        .map(|l| {
            let keep: Vec<usize> = (0..k).filter(|&j| j != l).collect();
            hm.select_columns(&keep).gram().det().re
        })
        .collect();
    Ok(ConstantSample { h, det, leave_one_out })
}

/// Running extremes of the Gram determinant over unit-norm draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantEstimate {
    /// Smallest sampled `det(HᴴH)`; an upper bound on `C_min`.
    pub c_min_hat: f64,
    /// Largest sampled `det(HᴴH)`; a lower bound on `C_max`.
    pub c_max_hat: f64,
    /// `c_min_hat / max_ℓ max_h det(H_ℓᴴH_ℓ)`.
    pub c0_hat: f64,
    /// Smallest sampled `1/[(HᴴH)⁻¹]_ℓℓ`, the tightest constant the samples support.
    pub c0_direct: f64,
    pub samples: usize,
}

/// Smallest sample count [`estimate_constants`] accepts.
pub const MIN_CONSTANT_SAMPLES: usize = 1000;

/// Samples `samples` unit-norm coefficient vectors from a seeded generator.
pub fn estimate_constants<F: MatrixFamily + ?Sized>(family: &F, samples: usize, seed: u64) -> Result<ConstantEstimate> {
    if samples < MIN_CONSTANT_SAMPLES {
        return Err(Error::arg(format!("need at least {MIN_CONSTANT_SAMPLES} samples, got {samples}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c_min = f64::INFINITY;
    let mut c_max = 0.0f64;
    let mut loo_max: Vec<f64> = Vec::new();
    let mut c0_direct = f64::INFINITY;
    for _ in 0..samples {
        let s = sample_family(family, &mut rng)?;
        c_min = c_min.min(s.det);
        c_max = c_max.max(s.det);
        loo_max.resize(s.leave_one_out.len(), 0.0);
        for (m, d) in loo_max.iter_mut().zip(&s.leave_one_out) {
            *m = m.max(*d);
        }
        c0_direct = c0_direct.min(s.min_inverse_gram_diag_reciprocal());
    }
    let worst_loo = loo_max.iter().copied().fold(0.0, f64::max);
    Ok(ConstantEstimate {
        c_min_hat: c_min,
        c_max_hat: c_max,
        c0_hat: c_min / worst_loo,
        c0_direct,
        samples,
    })
}

/// Predicted diversity at multiplexing gain `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiversityPrediction {
    /// Achieved by the Toeplitz code with `K = M`.
    pub diversity: f64,
    /// Optimal tradeoff `M(1 − g)`.
    pub optimal: f64,
}

/// QAM: `M(1 − (N/L)·g)`; PAM and PSK: `M(1 − (2N/L)·g)`, with `N = L + M − 1`.
pub fn diversity_prediction(scheme: Scheme, m: usize, l: usize, g: f64) -> Result<DiversityPrediction> {
    if !(0.0..=1.0).contains(&g) {
        return Err(Error::arg(format!("multiplexing gain must lie in [0, 1], got {g}")));
    }
    if m == 0 || l == 0 {
        return Err(Error::arg("M and L must be positive"));
    }
    let (mf, lf) = (m as f64, l as f64);
    let ratio = (lf + mf - 1.0) / lf;
    let factor = match scheme {
        Scheme::Qam => ratio,
        Scheme::Pam | Scheme::Psk => 2.0 * ratio,
    };
    Ok(DiversityPrediction {
        diversity: mf * (1.0 - factor * g),
        optimal: mf * (1.0 - g),
    })
}

/// Diversity order `−10·d log₁₀(rate)/d SNR_dB` from a least-squares fit.
///
/// Points with a zero or non-finite rate are dropped.
pub fn diversity_slope_estimate(points: &[(f64, f64)]) -> Result<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, r)| x.is_finite() && *r > 0.0 && r.is_finite())
        .map(|&(x, r)| (x, r.log10()))
        .collect();
    if usable.len() < 3 {
        return Err(Error::arg(format!("slope needs at least 3 positive rates, got {}", usable.len())));
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::arg("slope needs at least two distinct SNR values"));
    }
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(-10.0 * sxy / sxx)
}
