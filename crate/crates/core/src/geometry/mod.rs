//! Quadrature grids on `∂B₁` and `B₁`, stereographic charts and Möbius maps.

mod csv_io;
pub mod gauss;
mod grid;
mod mobius;

use std::f64::consts::PI;

pub use csv_io::{parse_grid_csv, write_grid_csv, NodeTable};
pub use grid::{
    expected_ball_weight, expected_sphere_weight, make_ball_grid, make_sphere_grid, BallGrid,
    GridTag, SphereGrid,
};
pub use mobius::{conformal_pullback, stereographic_inverse, stereographic_lift, MobiusMap, PulledBack};

use crate::error::{Error, Result};

/// Volume `ω_n` of the unit ball in `ℝⁿ`.
pub fn ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * ball_volume(n - 2),
    }
}

/// Surface area `n·ω_n` of the unit sphere `∂B₁ ⊂ ℝⁿ`.
pub fn sphere_area(n: usize) -> f64 {
    n as f64 * ball_volume(n)
}

pub fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}
