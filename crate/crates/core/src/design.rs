//! Transmission-matrix design for ML reception over a correlated channel.
//!
//! With `Σ = VΛVᴴ` and `B = Γ·V_Kᴴ`, the worst-case pairwise error
//! probability (a single-symbol error of size `d_min`) is
//!
//! ```text
//! G(λ, x, ε) = (1/π) ∫₀^{π/2} ∏_k (1 + ε·λ_k·x_k / sin²θ)⁻¹ dθ,   ε = d²_min / (8σ²)
//! ```
//!
//! with `x_k = γ_k²`. [`optimize_exact`] minimizes `G` over the power
//! simplex; [`optimize_waterfill`] maximizes the Chernoff product
//! `∏(1 + ε·λ_k·x_k)` in closed form.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::analytics::{covariance_modes, product_integral};
use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, integrate_theta, ComplexMatrix, EigDecomposition};

/// Iteration cap of the projected-gradient solver.
pub const MAX_ITERATIONS: usize = 10_000;
/// Stopping threshold on the projected-gradient norm.
pub const STATIONARITY_TOL: f64 = 1e-9;
/// Powers below this count as zero when reading off `K`.
pub const ACTIVE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Identity,
    Waterfill,
    Exact,
}

impl Method {
    pub fn token(self) -> &'static str {
        match self {
            Method::Identity => "identity",
            Method::Waterfill => "waterfill",
            Method::Exact => "exact",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Method::Identity),
            "waterfill" => Ok(Method::Waterfill),
            "exact" => Ok(Method::Exact),
            other => Err(Error::arg(format!("unknown design method `{other}` (expected identity, waterfill or exact)"))),
        }
    }
}

/// A designed `K × M` transmission matrix.
#[derive(Debug, Clone)]
pub struct BeamformerDesign {
    pub method: Method,
    /// Per-row amplitudes `γ_k`, all positive.
    pub gammas: Vec<f64>,
    pub b: ComplexMatrix,
    /// `G` at the design, when a covariance was involved.
    pub objective: Option<f64>,
    /// `½·∏(1 + ε·λ_k·γ_k²)⁻¹` at the design, when a covariance was involved.
    pub chernoff: Option<f64>,
}

impl BeamformerDesign {
    pub fn k(&self) -> usize {
        self.gammas.len()
    }

    pub fn gamma_sq(&self) -> Vec<f64> {
        self.gammas.iter().map(|g| g * g).collect()
    }

    /// `tr(BᴴB) = Σγ_k²`.
    pub fn power(&self) -> f64 {
        self.gammas.iter().map(|g| g * g).sum()
    }
}

fn check_objective_args(lambdas: &[f64], gamma_sq: &[f64], eps: f64) -> Result<()> {
    if lambdas.len() != gamma_sq.len() {
        return Err(Error::arg(format!("{} eigenvalues but {} powers", lambdas.len(), gamma_sq.len())));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::arg(format!("ε must be positive, got {eps}")));
    }
    if let Some(x) = gamma_sq.iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::arg(format!("powers must be non-negative, got {x}")));
    }
    if let Some(l) = lambdas.iter().find(|l| !(**l >= 0.0)) {
        return Err(Error::arg(format!("eigenvalues must be non-negative, got {l}")));
    }
    Ok(())
}

/// `G(λ, γ², ε)` by graded quadrature.
pub fn g_objective(lambdas: &[f64], gamma_sq: &[f64], eps: f64) -> Result<f64> {
    check_objective_args(lambdas, gamma_sq, eps)?;
    let w: Vec<f64> = lambdas.iter().zip(gamma_sq).map(|(l, x)| eps * l * x).collect();
    product_integral(&w)
}

/// `∂G/∂x_k`, differentiating under the integral sign.
pub fn g_gradient(lambdas: &[f64], gamma_sq: &[f64], eps: f64) -> Result<Vec<f64>> {
    check_objective_args(lambdas, gamma_sq, eps)?;
    let w: Vec<f64> = lambdas.iter().zip(gamma_sq).map(|(l, x)| eps * l * x).collect();
    (0..w.len())
        .map(|k| {
            let a = eps * lambdas[k];
            let f = |t: f64| {
                let s2 = t.sin().powi(2);
                let prod: f64 = w.iter().map(|&w| s2 / (s2 + w)).product();
                -prod * a / (s2 + w[k])
            };
            Ok(integrate_theta(f, 0.0, FRAC_PI_2)? / PI)
        })
        .collect()
}

/// Chernoff product `∏(1 + ε·λ_k·x_k)⁻¹`.
pub fn chernoff_product(lambdas: &[f64], gamma_sq: &[f64], eps: f64) -> Result<f64> {
    check_objective_args(lambdas, gamma_sq, eps)?;
    Ok(lambdas.iter().zip(gamma_sq).map(|(l, x)| 1.0 / (1.0 + eps * l * x)).product())
}

/// Worst-case PEP `(1/π)∫₀^{π/2} det(I + ε·Σ·BᴴB/sin²θ)⁻¹ dθ` of an arbitrary `B`.
pub fn worst_case_pep(b: &ComplexMatrix, sigma: &ComplexMatrix, eps: f64) -> Result<f64> {
    if b.cols() != sigma.rows() || !sigma.is_square() {
        return Err(Error::arg("B and Σ dimensions disagree"));
    }
    let w: Vec<f64> = covariance_modes(sigma, &b.gram())?.into_iter().map(|m| eps * m).collect();
    product_integral(&w)
}

/// Euclidean projection onto `{x ≥ 0, Σx ≤ 1}`.
pub fn project_power_simplex(v: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= 1.0 {
        return clipped;
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumulative += uj;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

fn design_inputs(sigma: &ComplexMatrix, d_min: f64, sigma2: f64) -> Result<(EigDecomposition, f64)> {
    if !(d_min > 0.0) || !d_min.is_finite() {
        return Err(Error::arg(format!("d_min must be positive, got {d_min}")));
    }
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::arg(format!("noise variance must be positive, got {sigma2}")));
    }
    let eig = hermitian_eig(sigma)?;
    let top = eig.lambdas.first().copied().unwrap_or(0.0);
    if !(top > 0.0) {
        return Err(Error::arg("covariance must be non-zero"));
    }
    if eig.lambdas.iter().any(|&l| l < -1e-10 * top.max(1.0)) {
        return Err(Error::arg("covariance is not PSD"));
    }
    Ok((eig, d_min * d_min / (8.0 * sigma2)))
}

fn assemble(method: Method, eig: &EigDecomposition, active: &[usize], x: &[f64], eps: f64) -> Result<BeamformerDesign> {
    let gammas: Vec<f64> = active.iter().map(|&k| x[k].sqrt()).collect();
    let m = eig.lambdas.len();
    let b = ComplexMatrix::from_fn(active.len(), m, |r, c| eig.vectors[(c, active[r])].conj() * gammas[r]);
    let lambdas: Vec<f64> = active.iter().map(|&k| eig.lambdas[k].max(0.0)).collect();
    let xs: Vec<f64> = active.iter().map(|&k| x[k]).collect();
    Ok(BeamformerDesign {
        method,
        objective: Some(g_objective(&lambdas, &xs, eps)?),
        chernoff: Some(0.5 * chernoff_product(&lambdas, &xs, eps)?),
        gammas,
        b,
    })
}

/// Minimizes `G` over `x ≥ 0, Σx ≤ 1` and returns `B_op = Γ_op·V_Kᴴ`.
///
/// The iteration is a spectral projected gradient on `log G`, which has
/// the same stationary points as `G` but is well scaled at every SNR.
pub fn optimize_exact(sigma: &ComplexMatrix, d_min: f64, sigma2: f64) -> Result<BeamformerDesign> {
    let (eig, eps) = design_inputs(sigma, d_min, sigma2)?;
    let lambdas: Vec<f64> = eig.lambdas.iter().map(|l| l.max(0.0)).collect();
    let x = minimize_g(&lambdas, eps)?;
    let active: Vec<usize> = (0..x.len()).filter(|&k| x[k] >= ACTIVE_TOL).collect();
    assemble(Method::Exact, &eig, &active, &x, eps)
}

/// Stationary point of `log G(λ, ·, ε)` on the power simplex.
pub fn minimize_g(lambdas: &[f64], eps: f64) -> Result<Vec<f64>> {
    let n = lambdas.len();
    let value_grad = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let g = g_objective(lambdas, x, eps)?;
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::NumericalDomain(format!("objective is {g:e}; the covariance scale is out of range")));
        }
        let grad = g_gradient(lambdas, x, eps)?;
        Ok((g.ln(), grad.into_iter().map(|d| d / g).collect()))
    };
    let stationarity = |x: &[f64], grad: &[f64]| -> f64 {
        let step: Vec<f64> = x.iter().zip(grad).map(|(a, b)| a - b).collect();
        project_power_simplex(&step)
            .iter()
            .zip(x)
            .map(|(p, a)| (p - a).powi(2))
            .sum::<f64>()
            .sqrt()
    };

    let mut x = vec![1.0 / n as f64; n];
    let (mut f, mut grad) = value_grad(&x)?;
    let mut alpha = 1.0;
    let mut residual = stationarity(&x, &grad);
    for _ in 0..MAX_ITERATIONS {
        if residual < STATIONARITY_TOL {
            return Ok(x);
        }
        let trial: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a - alpha * g).collect();
        let d: Vec<f64> = project_power_simplex(&trial).iter().zip(&x).map(|(p, a)| p - a).collect();
        let slope: f64 = d.iter().zip(&grad).map(|(a, b)| a * b).sum();
        // Armijo backtracking along the projected direction.
        let mut t = 1.0;
        let (x_new, f_new, grad_new) = loop {
            let cand: Vec<f64> = x.iter().zip(&d).map(|(a, b)| (a + t * b).max(0.0)).collect();
            let (fc, gc) = value_grad(&cand)?;
            if fc <= f + 1e-4 * t * slope || t < 1e-20 {
                break (cand, fc, gc);
            }
            t *= 0.5;
        };
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = grad_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|a| a * a).sum();
        // Barzilai-Borwein step for the next iteration.
        alpha = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { 1.0 };
        x = x_new;
        f = f_new;
        grad = grad_new;
        residual = stationarity(&x, &grad);
    }
    if residual < STATIONARITY_TOL {
        return Ok(x);
    }
    Err(Error::Convergence {
        iterations: MAX_ITERATIONS,
        residual,
        best: x,
    })
}

/// Water-filling over the eigenmodes of `Σ`.
///
/// With `c = 8σ²/d²_min`, mode `k ≤ M₀` receives
/// `γ̃_k² = (1/M₀)(1 + c·Σ_{ℓ≤M₀} 1/λ_ℓ) − c/λ_k`, where `M₀` is the largest
/// count for which every such term is positive. Zero-eigenvalue modes never
/// receive power.
pub fn optimize_waterfill(sigma: &ComplexMatrix, d_min: f64, sigma2: f64) -> Result<BeamformerDesign> {
    let (eig, eps) = design_inputs(sigma, d_min, sigma2)?;
    let c = 1.0 / eps;
    let top = eig.lambdas[0];
    let usable = eig.lambdas.iter().take_while(|&&l| l > 1e-12 * top).count();
    let mut x = vec![0.0; eig.lambdas.len()];
    for m0 in (1..=usable).rev() {
        let inv_sum: f64 = eig.lambdas[..m0].iter().map(|l| 1.0 / l).sum();
        let level = (1.0 + c * inv_sum) / m0 as f64;
        let powers: Vec<f64> = eig.lambdas[..m0].iter().map(|l| level - c / l).collect();
        if powers.iter().all(|&p| p > 0.0) {
            x[..m0].copy_from_slice(&powers);
            let active: Vec<usize> = (0..m0).collect();
            return assemble(Method::Waterfill, &eig, &active, &x, eps);
        }
    }
    unreachable!("a single mode always receives positive power")
}

/// `(1/√K)·[I_K | 0]`, which has unit power.
pub fn identity_beamformer(m: usize, k: usize) -> Result<BeamformerDesign> {
    if k == 0 || k > m {
        return Err(Error::arg(format!("identity beamformer needs 1 <= K <= M, got K={k}, M={m}")));
    }
    let g = 1.0 / (k as f64).sqrt();
    let b = ComplexMatrix::from_fn(k, m, |i, j| Complex64::new(if i == j { g } else { 0.0 }, 0.0));
    Ok(BeamformerDesign {
        method: Method::Identity,
        gammas: vec![g; k],
        b,
        objective: None,
        chernoff: None,
    })
}
