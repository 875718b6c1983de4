//! Poisson kernels of the ball and half-space, and the discrete harmonic
//! extension `v ↦ Pv` from a sphere grid to a ball grid.

mod covariance;
mod operator;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ball_volume, check_dim};

pub use operator::{
    build_operator, Normalization, OperatorMode, OperatorOptions, PoissonOperator, DEFAULT_MEMORY_BUDGET,
};
pub use covariance::{
    covariance_discrepancy, covariance_discrepancy_at, halfspace_to_ball, CovarianceReport, FAR_PANEL, STANDARD_PANEL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Ball,
    Halfspace,
}

/// Poisson kernel with boundary-touch checks.
///
/// Ball: `P(η, ξ) = (1 - |ξ|²) / (n ω_n |ξ - η|ⁿ)`.
/// Half-space: `P(y', x) = 2 x_n / (n ω_n (|x' - y'|² + x_n²)^{n/2})`, with
/// `boundary_pt` given either as `y' ∈ ℝ^{n-1}` or as `(y', 0) ∈ ℝⁿ`.
pub fn poisson_kernel(domain: Domain, boundary_pt: &[f64], interior_pt: &[f64], n: usize) -> Result<f64> {
    check_dim(n, interior_pt.len())?;
    match domain {
        Domain::Ball => {
            check_dim(n, boundary_pt.len())?;
            let d2: f64 = boundary_pt.iter().zip(interior_pt).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2.sqrt() < 1e-14 {
                return Err(Error::BoundaryTouch(d2.sqrt()));
            }
            let r2: f64 = interior_pt.iter().map(|x| x * x).sum();
            if r2 >= 1.0 {
                return Err(Error::BoundaryTouch(1.0 - r2.sqrt()));
            }
            Ok(ball_kernel_d2(d2, r2, n))
        }
        Domain::Halfspace => {
            if boundary_pt.len() != n - 1 && boundary_pt.len() != n {
                return Err(Error::DimensionMismatch { expected: n - 1, found: boundary_pt.len() });
            }
            let xn = interior_pt[n - 1];
            if xn <= 0.0 {
                return Err(Error::BoundaryTouch(xn));
            }
            Ok(halfspace_kernel(&boundary_pt[..n - 1], interior_pt, n))
        }
    }
}

#[inline]
fn pow_half_n(d2: f64, n: usize) -> f64 {
    match n {
        2 => d2,
        3 => d2 * d2.sqrt(),
        4 => d2 * d2,
        _ => d2.powf(n as f64 / 2.0),
    }
}

#[inline]
fn ball_kernel_d2(d2: f64, r2: f64, n: usize) -> f64 {
    (1.0 - r2) / (n as f64 * ball_volume(n) * pow_half_n(d2, n))
}

/// Unchecked ball kernel.
#[inline]
pub fn ball_kernel(eta: &[f64], xi: &[f64], n: usize) -> f64 {
    let mut d2 = 0.0;
    let mut r2 = 0.0;
    for (a, b) in eta.iter().zip(xi) {
        d2 += (a - b) * (a - b);
        r2 += b * b;
    }
    ball_kernel_d2(d2, r2, n)
}

/// Unchecked half-space kernel; `yprime` has `n - 1` coordinates.
#[inline]
pub fn halfspace_kernel(yprime: &[f64], x: &[f64], n: usize) -> f64 {
    let xn = x[n - 1];
    let mut d2 = xn * xn;
    for (a, b) in yprime.iter().zip(&x[..n - 1]) {
        d2 += (a - b) * (a - b);
    }
    2.0 * xn / (n as f64 * ball_volume(n) * pow_half_n(d2, n))
}
