//! Gaussian tail probabilities in Craig's finite-range form.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use super::quadrature::integrate_theta;
use crate::error::{Error, Result};

fn craig(z: f64, upper: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(Error::arg(format!("Q-function argument must be >= 0, got {z}")));
    }
    if z == 0.0 {
        return Ok(upper / PI);
    }
    let half_z2 = 0.5 * z * z;
    let v = integrate_theta(
        |t| {
            let s = t.sin();
            if s == 0.0 {
                0.0
            } else {
                (-half_z2 / (s * s)).exp()
            }
        },
        0.0,
        upper,
    )?;
    Ok(v / PI)
}

/// `Q(z) = (1/π) ∫_0^{π/2} exp(−z²/(2 sin²θ)) dθ` for `z ≥ 0`.
pub fn q_function(z: f64) -> Result<f64> {
    craig(z, FRAC_PI_2)
}

/// `Q²(z) = (1/π) ∫_0^{π/4} exp(−z²/(2 sin²θ)) dθ` for `z ≥ 0`.
pub fn q_squared(z: f64) -> Result<f64> {
    craig(z, FRAC_PI_4)
}
