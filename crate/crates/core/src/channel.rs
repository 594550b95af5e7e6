//! Correlated Rayleigh MISO channels, additive noise and SNR bookkeeping.
//!
//! Noise convention: `σ²` is the variance of each real dimension, so a
//! complex noise sample has total power `2σ²`. This is the normalization
//! under which the ZF error formulas in [`crate::analytics`] are exact.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::modulation::Scheme;
use crate::numerics::{hermitian_eig, integrate, psd_sqrt_from_eig, ComplexMatrix, EigDecomposition, HERMITIAN_TOL};

/// Quadrature order for the broadside correlation integral over `[0, 2π]`.
pub const CORRELATION_NODES: usize = 256;

/// Eigenvalues below `-COVARIANCE_PSD_TOL` reject a covariance matrix.
pub const COVARIANCE_PSD_TOL: f64 = 1e-10;

/// Broadside transmit correlation for a uniform linear array.
///
/// Entry `(m₁, m₂)` is `(1/2π)∫₀^{2π} exp(−j2π(m₁−m₂)Δ·r·sinθ) dθ` with
/// `r = d_t/ς` the element spacing in wavelengths and `Δ` the angle spread
/// in radians.
pub fn correlation_broadside(m: usize, spacing_ratio: f64, delta: f64) -> Result<ComplexMatrix> {
    if m == 0 {
        return Err(Error::arg("correlation matrix needs at least one antenna"));
    }
    if !(spacing_ratio > 0.0) || !spacing_ratio.is_finite() {
        return Err(Error::arg(format!("spacing ratio must be positive, got {spacing_ratio}")));
    }
    if !(0.0..std::f64::consts::PI).contains(&delta) {
        return Err(Error::arg(format!("angle spread must lie in [0, π), got {delta}")));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut lags = Vec::with_capacity(m);
    for d in 0..m {
        let w = two_pi * d as f64 * delta * spacing_ratio;
        let re = integrate(|t| (w * t.sin()).cos(), 0.0, two_pi, CORRELATION_NODES)? / two_pi;
        let im = integrate(|t| -(w * t.sin()).sin(), 0.0, two_pi, CORRELATION_NODES)? / two_pi;
        lags.push(Complex64::new(re, im));
    }
    Ok(ComplexMatrix::from_fn(m, m, |i, j| {
        if i >= j {
            lags[i - j]
        } else {
            lags[j - i].conj()
        }
    }))
}

/// Transmit covariance `Σ` with its eigendecomposition and coloring `Σ^{1/2}`.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    sigma: ComplexMatrix,
    coloring: ComplexMatrix,
    eig: EigDecomposition,
}

impl ChannelModel {
    pub fn new(sigma: ComplexMatrix) -> Result<Self> {
        if !sigma.is_square() || sigma.rows() == 0 {
            return Err(Error::arg("covariance must be a non-empty square matrix"));
        }
        if !sigma.is_hermitian(HERMITIAN_TOL * sigma.max_abs().max(1.0)) {
            return Err(Error::arg("covariance is not Hermitian"));
        }
        let eig = hermitian_eig(&sigma)?;
        let smallest = eig.lambdas.last().copied().unwrap_or(0.0);
        if smallest < -COVARIANCE_PSD_TOL * sigma.max_abs().max(1.0) {
            return Err(Error::arg(format!("covariance is not PSD (eigenvalue {smallest:e})")));
        }
        let coloring = psd_sqrt_from_eig(&eig, COVARIANCE_PSD_TOL * sigma.max_abs().max(1.0))?;
        Ok(Self { sigma, coloring, eig })
    }

    /// Independent unit-variance taps, `Σ = I_M`.
    pub fn iid(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::arg("channel needs at least one antenna"));
        }
        Self::new(ComplexMatrix::identity(m))
    }

    /// Broadside correlation with the angle spread given in degrees.
    pub fn broadside(m: usize, spacing_ratio: f64, delta_deg: f64) -> Result<Self> {
        Self::new(correlation_broadside(m, spacing_ratio, delta_deg.to_radians())?)
    }

    pub fn m(&self) -> usize {
        self.sigma.rows()
    }

    pub fn sigma(&self) -> &ComplexMatrix {
        &self.sigma
    }

    pub fn coloring(&self) -> &ComplexMatrix {
        &self.coloring
    }

    pub fn eig(&self) -> &EigDecomposition {
        &self.eig
    }
}

/// One `CN(0, 2·var)` sample, i.e. variance `var` per real dimension.
#[inline]
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = var.sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// `h = Σ^{1/2}·w` with `w` i.i.d. `CN(0, 1)`.
pub fn draw_channel<R: Rng + ?Sized>(model: &ChannelModel, rng: &mut R) -> Vec<Complex64> {
    let w: Vec<Complex64> = (0..model.m()).map(|_| complex_gaussian(rng, 0.5)).collect();
    model.coloring.mul_vec(&w)
}

/// `y = X·h + ξ` with `ξ` i.i.d. complex Gaussian of variance `σ²` per real dimension.
pub fn transmit<R: Rng + ?Sized>(x: &ComplexMatrix, h: &[Complex64], sigma2: f64, rng: &mut R) -> Result<Vec<Complex64>> {
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::arg(format!("noise variance must be finite and non-negative, got {sigma2}")));
    }
    if h.len() != x.cols() {
        return Err(Error::arg(format!("X has {} columns but h has {} entries", x.cols(), h.len())));
    }
    let mut y = x.mul_vec(h);
    if sigma2 > 0.0 {
        for v in &mut y {
            *v += complex_gaussian(rng, sigma2);
        }
    }
    Ok(y)
}

/// SNR quantities for one noise level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPoint {
    /// 1 for QAM, 2 for PAM, 3 for PSK.
    pub scheme_index: usize,
    /// `ρ_i = E_s / σ²`.
    pub symbol_snr: f64,
    /// `E_s·M·L / (N·σ²)`.
    pub block_snr: f64,
    pub noise_var: f64,
}

/// Symbol and block SNR of a `μ`-ary scheme sent as `L` symbols over `N` uses of `M` antennas.
pub fn block_snr(scheme: Scheme, mu: usize, m: usize, l: usize, n: usize, sigma2: f64) -> Result<SnrPoint> {
    scheme.validate_mu(mu)?;
    if m == 0 || l == 0 || n == 0 {
        return Err(Error::arg("block geometry must be positive"));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::arg(format!("noise variance must be positive, got {sigma2}")));
    }
    let es = scheme.avg_energy(mu);
    Ok(SnrPoint {
        scheme_index: scheme.index(),
        symbol_snr: es / sigma2,
        block_snr: es * (m * l) as f64 / (n as f64 * sigma2),
        noise_var: sigma2,
    })
}
