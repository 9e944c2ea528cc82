//! Scalar special functions and adaptive quadrature.
//!
//! `ln_gamma` and `erf` wrap the musl-derived kernels from `libm`; the
//! modified Bessel function of the second kind and the Gauss-Kronrod
//! integrator are implemented here because the fading densities need
//! real (non-integer) orders and semi-infinite ranges.

mod bessel;
mod quadrature;

pub use bessel::{bessel_k, bessel_k_scaled, ln_bessel_k};
pub use quadrature::{integrate, integrate_fallible, Estimate, QuadratureSpec};

use crate::error::{Error, Result};

/// Natural log of the Gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            func: "ln_gamma",
            arg: x,
            expected: "x > 0",
        });
    }
    Ok(libm::lgamma(x))
}

/// Error function. Odd by construction: the kernel evaluates on `|x|` and
/// restores the sign.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}
