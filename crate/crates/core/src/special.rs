//! Modified Bessel functions of the first kind (orders 0 and 1) and the
//! Laguerre function of degree one half.
//!
//! The Bessel routines switch from the power series to the large-argument
//! asymptotic expansion at `|z| = 15`. Both branches are accurate to about
//! `1e-13` relative at the switch point; the exponentially scaled forms
//! (`*_scaled`, i.e. `e^{-|z|} I(z)`) are what the Laguerre function needs to
//! stay finite for large Rician K-factors.

use crate::error::{invalid, Result};

const ASYMPTOTIC_THRESHOLD: f64 = 15.0;
const MAX_TERMS: usize = 500;

/// `e^{-|z|} I_0(z)`.
pub fn bessel_i0_scaled(z: f64) -> f64 {
    let a = z.abs();
    if a < ASYMPTOTIC_THRESHOLD {
        series_scaled(0, a)
    } else {
        asymptotic_scaled(0, a)
    }
}

/// `e^{-|z|} I_1(z)`.
pub fn bessel_i1_scaled(z: f64) -> f64 {
    let a = z.abs();
    let v = if a < ASYMPTOTIC_THRESHOLD {
        series_scaled(1, a)
    } else {
        asymptotic_scaled(1, a)
    };
    v.copysign(z)
}

pub fn bessel_i0(z: f64) -> f64 {
    bessel_i0_scaled(z) * z.abs().exp()
}

pub fn bessel_i1(z: f64) -> f64 {
    bessel_i1_scaled(z) * z.abs().exp()
}

/// `I_1(κ) / I_0(κ)`, the mean resultant length of a von Mises law.
pub fn bessel_ratio_i1_i0(kappa: f64) -> f64 {
    bessel_i1_scaled(kappa) / bessel_i0_scaled(kappa)
}

/// Power series `Σ (z/2)^{2k+ν} / (k! (k+ν)!)`, scaled by `e^{-z}`. `z ≥ 0`.
pub(crate) fn series_scaled(order: u32, z: f64) -> f64 {
    let half = 0.5 * z;
    let q = half * half;
    // k = 0 term: (z/2)^ν / ν!
    let mut term = if order == 0 { 1.0 } else { half };
    let mut sum = term;
    for k in 1..MAX_TERMS {
        let k = k as f64;
        term *= q / (k * (k + order as f64));
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum * (-z).exp()
}

/// Hankel asymptotic expansion `e^{-z} I_ν(z) ~ (2πz)^{-1/2} Σ (-1)^k a_k(ν) z^{-k}`.
/// Summation stops at the smallest term. `z > 0`.
pub(crate) fn asymptotic_scaled(order: u32, z: f64) -> f64 {
    let mu = 4.0 * (order as f64).powi(2);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..MAX_TERMS {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (8.0 * k as f64 * z);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * z).sqrt()
}

/// Laguerre function of degree 1/2 for nonpositive arguments,
/// `L_{1/2}(x) = e^{x/2} [ (1 - x) I_0(-x/2) - x I_1(-x/2) ]`.
///
/// Rejects `x > 0`; positive arguments never occur in the Rician moments.
pub fn laguerre_half(x: f64) -> Result<f64> {
    if !x.is_finite() || x > 0.0 {
        return Err(invalid("x", format!("laguerre_half needs finite x <= 0, got {x}")));
    }
    let z = -0.5 * x;
    // e^{x/2} I_ν(-x/2) = e^{-z} I_ν(z): exactly the scaled Bessel values.
    Ok((1.0 - x) * bessel_i0_scaled(z) - x * bessel_i1_scaled(z))
}
