//! Half-space Poisson integrals of radial data supported on `|x'| ≥ 1`
//! (three dimensions).
//!
//! The exterior of the unit disk is mapped to the punctured disk by
//! `x' = t/|t|²`. With `τ = |t|`, data `h(|x'|)` and
//! `D = 1 - 2 t·y' + τ²|y|²`, the extension becomes
//! `(1/2π) y₃ ∫_{|t|<1} h(1/τ) D^{-3/2} dτ dθ`, and the angular integral is
//! a complete elliptic integral of the second kind.

use std::f64::consts::PI;

use crate::geometry::gauss::{composite, geometric_edges};

/// `E(m) = ∫₀^{π/2} √(1 - m sin²θ) dθ` by the arithmetic–geometric mean.
pub fn complete_elliptic_e(m: f64) -> f64 {
    if m >= 1.0 {
        return 1.0;
    }
    let mut a = 1.0;
    let mut b = (1.0 - m).sqrt();
    let mut sum = 0.5 * m;
    let mut pow = 0.5;
    for _ in 0..40 {
        let c = 0.5 * (a - b);
        if c.abs() < 1e-17 {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
        pow *= 2.0;
        sum += pow * c * c;
    }
    let k = PI / (2.0 * a);
    k * (1.0 - sum)
}

/// `∫₀^{2π} (a - b cos θ)^{-3/2} dθ` for `a > b ≥ 0`.
pub fn ring_integral(a: f64, b: f64) -> f64 {
    let m = 2.0 * b / (a + b);
    4.0 * complete_elliptic_e(m) / ((a - b) * (a + b).sqrt())
}

/// Nodes and weights in `τ ∈ (0, 1)`, refined geometrically toward 0 around
/// `scale` and toward 1.
#[derive(Debug, Clone)]
pub struct ExteriorRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl ExteriorRule {
    pub fn new(scale: f64, order: usize) -> Self {
        let mut edges = geometric_edges(scale.min(0.5), 0.5, 6, 2.0);
        let mut e = 0.25;
        while e > 1e-7 {
            edges.push(1.0 - e);
            e *= 0.5;
        }
        edges.push(1.0);
        let (nodes, weights) = composite(&edges, order);
        ExteriorRule { nodes, weights }
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Half-space Poisson extension at `y ∈ ℝ³₊` of the radial datum `h` on
/// `|x'| ≥ 1`, where `h_tau(τ) = h(1/τ)`.
pub fn exterior_extension(h_tau: impl Fn(f64) -> f64, rule: &ExteriorRule, y: &[f64]) -> f64 {
    let rho = (y[0] * y[0] + y[1] * y[1]).sqrt();
    let r2 = rho * rho + y[2] * y[2];
    let mut s = 0.0;
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let a = 1.0 + t * t * r2;
        let b = 2.0 * t * rho;
        s += w * h_tau(t) * ring_integral(a, b);
    }
    y[2] * s / (2.0 * PI)
}
