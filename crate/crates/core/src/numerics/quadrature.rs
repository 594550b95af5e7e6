//! Gauss-Legendre quadrature.
//!
//! [`integrate`] is the plain fixed-order rule. [`integrate_theta`] is the
//! rule used for every `θ`-integral in the crate: integrands of the form
//! `exp(−c/sin²θ)` or `∏(1 + c_k/sin²θ)⁻¹` develop a boundary layer of
//! width `~√c` at `θ = 0`, which a single fixed-order rule resolves poorly
//! when `c` is small. Dyadic panels toward the lower endpoint fix that.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};

/// Node count of the rule applied on each dyadic panel of [`integrate_theta`].
pub const THETA_PANEL_NODES: usize = 16;
/// Number of dyadic refinements toward the lower endpoint.
pub const THETA_LEVELS: usize = 24;
/// Default order for [`integrate`] when callers have no preference.
pub const DEFAULT_POINTS: usize = 128;

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Shared cached rule of order `n`.
    pub fn cached(n: usize) -> &'static GaussLegendre {
        static CACHE: OnceLock<Mutex<HashMap<usize, &'static GaussLegendre>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard.entry(n).or_insert_with(|| Box::leak(Box::new(GaussLegendre::new(n))))
    }

    fn apply(&self, f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Gauss-Legendre approximation of `∫_a^b f` with `points` nodes.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, points: usize) -> Result<f64> {
    check_interval(a, b, points)?;
    let rule = GaussLegendre::cached(points);
    let mut bad = None;
    let v = rule.apply(
        &mut |x| {
            let y = f(x);
            if !y.is_finite() && bad.is_none() {
                bad = Some(x);
            }
            y
        },
        a,
        b,
    );
    match bad {
        Some(x) => Err(Error::NumericalDomain(format!("integrand is not finite at {x}"))),
        None => Ok(v),
    }
}

/// `∫_a^b f` on dyadic panels `[a, a+h/2^L], …, [a+h/4, a+h/2], [a+h/2, b]`
/// with a 16-point rule each.
pub fn integrate_theta(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    check_interval(a, b, THETA_PANEL_NODES)?;
    let rule = GaussLegendre::cached(THETA_PANEL_NODES);
    let h = b - a;
    let mut bad = None;
    let mut g = |x: f64| {
        let y = f(x);
        if !y.is_finite() && bad.is_none() {
            bad = Some(x);
        }
        y
    };
    let mut total = 0.0;
    let mut lo = a;
    for level in (0..=THETA_LEVELS).rev() {
        let hi = a + h * 0.5f64.powi(level as i32);
        let hi = if level == 0 { b } else { hi };
        total += rule.apply(&mut g, lo, hi);
        lo = hi;
    }
    match bad {
        Some(x) => Err(Error::NumericalDomain(format!("integrand is not finite at {x}"))),
        None => Ok(total),
    }
}

fn check_interval(a: f64, b: f64, points: usize) -> Result<()> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::arg(format!("integration interval [{a}, {b}] is empty or invalid")));
    }
    if points == 0 {
        return Err(Error::arg("quadrature needs at least one node"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn constant_integrand() {
        let v = integrate(|_| 1.0, 0.0, FRAC_PI_2, 64).unwrap();
        assert!((v - FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn sin_squared() {
        let v = integrate(|t| t.sin().powi(2), 0.0, FRAC_PI_2, 64).unwrap();
        assert!((v - FRAC_PI_4).abs() < 1e-14);
    }

    #[test]
    fn doubling_order_is_self_consistent() {
        let f = |t: f64| (-1.0 / (2.0 * t.sin().powi(2))).exp();
        let a = integrate(f, 0.0, FRAC_PI_2, 64).unwrap();
        let b = integrate(f, 0.0, FRAC_PI_2, 128).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn weights_sum_to_two_and_polynomials_are_exact() {
        for n in [1, 2, 5, 16, 64, 128, 129] {
            let r = GaussLegendre::new(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}: {s}");
            // Degree 2n-1 is integrated exactly.
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            let approx: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((approx - exact).abs() < 1e-12);
            let even = (2 * n - 2) as i32;
            let approx: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(even)).sum();
            assert!((approx - 2.0 / (even as f64 + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_in_the_integrand() {
        let f = |t: f64| t.cos();
        let g = |t: f64| (t * 3.0).sin() + t * t;
        let lhs = integrate(|t| 2.0 * f(t) - 0.5 * g(t), 0.0, 1.3, 128).unwrap();
        let rhs = 2.0 * integrate(f, 0.0, 1.3, 128).unwrap() - 0.5 * integrate(g, 0.0, 1.3, 128).unwrap();
        assert!((lhs - rhs).abs() < 1e-13);
    }

    #[test]
    fn monotone_in_the_integrand() {
        let f = |t: f64| (-0.3 / t.sin().powi(2)).exp();
        let g = |t: f64| f(t) + 1e-3 * t;
        assert!(integrate(f, 0.0, FRAC_PI_2, 128).unwrap() <= integrate(g, 0.0, FRAC_PI_2, 128).unwrap() + 1e-12);
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(matches!(integrate(|_| f64::NAN, 0.0, 1.0, 8), Err(Error::NumericalDomain(_))));
        assert!(matches!(integrate(|_| 1.0, 1.0, 1.0, 8), Err(Error::Argument(_))));
        assert!(matches!(integrate_theta(|_| f64::INFINITY, 0.0, 1.0), Err(Error::NumericalDomain(_))));
    }

    #[test]
    fn graded_rule_resolves_the_boundary_layer() {
        // Reference: composite midpoint rule on a very fine grid.
        let c = 1e-6;
        let f = |t: f64| (-c / t.sin().powi(2)).exp();
        let graded = integrate_theta(f, 0.0, FRAC_PI_2).unwrap();
        let n = 2_000_000;
        let h = FRAC_PI_2 / n as f64;
        let mut fine = 0.0;
        for i in 0..n {
            fine += f((i as f64 + 0.5) * h) * h;
        }
        assert!((graded - fine).abs() < 1e-9, "{graded} vs {fine}");
    }
}
