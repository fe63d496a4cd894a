//! Complex scalars and Bessel functions of the first kind.
//!
//! The circular-wave benchmark solution is `J_ξ(kr)e^{iξθ}`, so the crate
//! needs `J_ξ` and its derivative for low orders over the argument range
//! covered by wavenumbers up to k = 100 on unit-scale domains.

use thiserror::Error;

/// Complex scalar used throughout the crate.
pub type Cplx = num_complex::Complex<f64>;

/// Imaginary unit.
pub const I: Cplx = Cplx::new(0.0, 1.0);

/// Largest Bessel order accepted by the public entry points.
pub const MAX_ORDER: u32 = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecFunError {
    #[error("bessel_j is only evaluated for x >= 0, got {0}")]
    NegativeArgument(f64),
    #[error("bessel order {0} unsupported (max {MAX_ORDER})")]
    UnsupportedOrder(u32),
}

/// Bessel function of the first kind `J_order(x)` for `order <= 5`,
/// `x >= 0`. Absolute error below 1e-12 for x in [0, 300].
///
/// Ascending series for small arguments, backward (Miller) recurrence with
/// normalization otherwise. The series is cut earlier than strictly needed
/// for convergence because its alternating terms start cancelling ~4 digits
/// near x = 15, which would eat into the error budget.
pub fn bessel_j(order: u32, x: f64) -> Result<f64, SpecFunError> {
    if order > MAX_ORDER {
        return Err(SpecFunError::UnsupportedOrder(order));
    }
    Ok(bessel_j_unchecked(order, x)?)
}

/// Derivative `J_order'(x)` via `J_0' = -J_1` and
/// `J_ν' = (J_{ν-1} - J_{ν+1})/2`.
pub fn bessel_j_prime(order: u32, x: f64) -> Result<f64, SpecFunError> {
    if order > MAX_ORDER {
        return Err(SpecFunError::UnsupportedOrder(order));
    }
    if order == 0 {
        return Ok(-bessel_j_unchecked(1, x)?);
    }
    let lower = bessel_j_unchecked(order - 1, x)?;
    let upper = bessel_j_unchecked(order + 1, x)?;
    Ok(0.5 * (lower - upper))
}

const SERIES_CUTOFF: f64 = 9.0;

// Internal evaluation, orders up to MAX_ORDER + 1 (for the derivative identity).
fn bessel_j_unchecked(order: u32, x: f64) -> Result<f64, SpecFunError> {
    if x < 0.0 {
        return Err(SpecFunError::NegativeArgument(x));
    }
    if x < SERIES_CUTOFF {
        Ok(series_j(order, x))
    } else {
        Ok(miller_j(order, x))
    }
}

/// Ascending power series J_ν(x) = Σ_m (-1)^m (x/2)^{ν+2m} / (m! (ν+m)!).
fn series_j(order: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    // leading term (x/2)^ν / ν!
    let mut term = 1.0;
    for m in 1..=order {
        term *= half / m as f64;
    }
    let q = half * half;
    let mut sum = term;
    for m in 1..80 {
        term *= -q / (m as f64 * (m + order) as f64);
        sum += term;
        if term.abs() <= 1e-18 * sum.abs().max(1e-30) {
            break;
        }
    }
    sum
}

/// Backward recurrence with normalization J_0 + 2 Σ J_{2m} = 1.
fn miller_j(order: u32, x: f64) -> f64 {
    // Start high enough above both x and the order that the seeded tail is
    // negligible after recurring down.
    let start = (x + 10.0 * x.cbrt() + 30.0).ceil() as u32;
    let start = (start + start % 2).max(order + 20); // even
    let mut jp = 0.0f64; // J_{m+1}, unnormalized
    let mut jc = 1e-30f64; // J_m, unnormalized
    let mut norm = 0.0f64;
    let mut result = 0.0f64;
    for m in (0..=start).rev() {
        let jm = (2.0 * (m + 1) as f64 / x) * jc - jp;
        jp = jc;
        jc = jm;
        if m == order {
            result = jc;
        }
        if m % 2 == 0 {
            norm += if m == 0 { jc } else { 2.0 * jc };
        }
        if jc.abs() > 1e250 {
            jp /= 1e250;
            jc /= 1e250;
            norm /= 1e250;
            result /= 1e250;
        }
    }
    result / norm
}
