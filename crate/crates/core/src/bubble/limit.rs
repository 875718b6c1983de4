//! Residual of the half-space limit equation
//! `K φ(x')^{n/(n-2)} = ∫_{ℝⁿ₊} P(x', y) Pφ(y)^{(n+2)/(n-2)} dy` in three
//! dimensions.
//!
//! In spherical coordinates `y = (x', 0) + ρθ` the kernel times the volume
//! element is `(2/(nω_n)) θ_n dρ dθ`, so the right side is an integral of the
//! extension along rays over the upper hemisphere of directions, truncated at
//! `ρ = R` with an explicit bound on the remainder.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ball_volume;
use crate::geometry::gauss::{composite, gauss_legendre_on};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitResidual {
    /// `max |K̂ φ³ - RHS| / φ³` over the test points.
    pub residual: f64,
    /// `RHS(0)/φ(0)³`.
    pub k_hat: f64,
    pub per_point: Vec<f64>,
    /// Largest truncation bound relative to the computed right side.
    pub tail_ratio: f64,
}

fn ray_edges(lambda: f64, d0: f64, r_max: f64) -> Vec<f64> {
    let mut e = vec![0.0, r_max];
    let mut h = lambda / 64.0;
    while h < r_max {
        e.push(h);
        if d0 > 0.0 {
            e.push(d0 - h);
            e.push(d0 + h);
        }
        h *= 2.0;
    }
    if d0 > 0.0 {
        e.push(d0);
    }
    e.retain(|&x| (0.0..=r_max).contains(&x));
    e.sort_by(f64::total_cmp);
    e.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    e
}

struct Rhs {
    value: f64,
    tail: f64,
}

fn rhs_at(extension: &(dyn Fn(&[f64]) -> f64 + Sync), decay: f64, scale: f64, x: &[f64], order: usize) -> Rhs {
    let d0 = (x[0] * x[0] + x[1] * x[1]).sqrt();
    let r_max = 20.0 * scale.max(1.0) + 2.0 * d0 + 2.0;
    let (rs, rw) = composite(&ray_edges(scale, d0, r_max), order);
    let (al, aw) = composite(&[0.0, FRAC_PI_2 / 2.0, 3.0 * FRAC_PI_2 / 4.0, FRAC_PI_2], order);
    // azimuth panels start at the direction toward the origin
    let b0 = if d0 > 0.0 { (-x[1]).atan2(-x[0]) } else { 0.0 };
    let (be, bw) = gauss_legendre_on(4 * order, -PI, PI);
    let value: f64 = al
        .par_iter()
        .zip(&aw)
        .map(|(&a, &wa)| {
            let (sa, ca) = a.sin_cos();
            let mut s = 0.0;
            for (&b, &wb) in be.iter().zip(&bw) {
                let (sb, cb) = (b + b0).sin_cos();
                let dir = [sa * cb, sa * sb, ca];
                let mut ray = 0.0;
                for (&r, &wr) in rs.iter().zip(&rw) {
                    let y = [x[0] + r * dir[0], x[1] + r * dir[1], r * dir[2]];
                    ray += wr * extension(&y).powi(5);
                }
                s += wb * ray;
            }
            wa * sa * ca * s
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    let c = 2.0 / (3.0 * ball_volume(3));
    // Pφ(y) ≤ decay/|y| and |y| ≥ ρ - |x'| along every ray
    let tail = c * PI * decay.powi(5) * (r_max - d0).powi(-4) / 4.0;
    Rhs { value: c * value, tail }
}

/// Residual for the bubble `φ(x') = (λ/(λ²+|x'|²))^{1/2}` with its exact
/// extension `Pφ(y) = (λ/((y₃+λ)²+|y'|²))^{1/2}`.
pub fn limit_equation_residual(lambda: f64, test_points: &[Vec<f64>]) -> Result<LimitResidual> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameters(format!("lambda = {lambda} must be positive")));
    }
    let profile = move |x: &[f64]| (lambda / (lambda * lambda + x[0] * x[0] + x[1] * x[1])).sqrt();
    let extension =
        move |y: &[f64]| (lambda / ((y[2] + lambda) * (y[2] + lambda) + y[0] * y[0] + y[1] * y[1])).sqrt();
    limit_equation_residual_with(&profile, &extension, lambda.sqrt(), lambda, test_points, 12)
}

/// Residual where the left side uses `profile` and the right side uses
/// `extension`, a harmonic function on `ℝ³₊` bounded by `decay/|y|`.
/// `scale` sets the panel refinement of the ray integrals.
pub fn limit_equation_residual_with(
    profile: &dyn Fn(&[f64]) -> f64,
    extension: &(dyn Fn(&[f64]) -> f64 + Sync),
    decay: f64,
    scale: f64,
    test_points: &[Vec<f64>],
    order: usize,
) -> Result<LimitResidual> {
    for x in test_points {
        if x.len() != 2 {
            return Err(Error::UnsupportedDimension(x.len() + 1));
        }
        if x[0] * x[0] + x[1] * x[1] > 4.0 + 1e-12 {
            return Err(Error::InvalidParameters(format!("test point {x:?} outside |x'| <= 2")));
        }
    }
    let origin = rhs_at(extension, decay, scale, &[0.0, 0.0], order);
    let k_hat = origin.value / profile(&[0.0, 0.0]).powi(3);
    let mut per_point = Vec::with_capacity(test_points.len());
    let mut tail_ratio = origin.tail / origin.value;
    for x in test_points {
        let r = rhs_at(extension, decay, scale, x, order);
        let lhs = profile(x).powi(3);
        tail_ratio = tail_ratio.max(r.tail / r.value);
        per_point.push((k_hat * lhs - r.value).abs() / lhs);
    }
    if tail_ratio > 5e-3 {
        return Err(Error::TruncationInsufficient { tail: tail_ratio, value: origin.value });
    }
    let residual = per_point.iter().cloned().fold(0.0, f64::max);
    Ok(LimitResidual { residual, k_hat, per_point, tail_ratio })
}
