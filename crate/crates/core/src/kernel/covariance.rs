//! Cross-check of the chart covariance `Pu(x) = (√2/|x+e_n|)^{n-2} Pv(F(x))`
//! for the glued trial function in three dimensions: the ball side is the
//! discrete extension, the half-space side is `W₁` plus the exterior
//! quadrature of `w₂`.

use serde::{Deserialize, Serialize};

use super::{build_operator, OperatorMode};
use crate::bubble::{beta_of_lambda, exterior_extension, glued_trial_field, halfspace_forms_eval, ExteriorRule, HalfspaceForm};
use crate::error::{Error, Result};
use crate::field::BoundaryField;
use crate::geometry::{make_ball_grid, make_sphere_grid};

/// Half-space test points whose ball images lie in `|ξ| ≤ 0.5`.
pub const STANDARD_PANEL: [[f64; 3]; 6] =
    [[0.0, 0.0, 0.5], [0.0, 0.0, 1.0], [0.0, 0.0, 2.0], [0.5, 0.0, 0.5], [0.3, 0.4, 1.0], [1.0, 0.0, 1.0]];

/// Half-space test points far from the chart pole, imaged near `-e_n`.
pub const FAR_PANEL: [[f64; 3]; 3] = [[0.0, 0.0, 4.0], [1.0, 0.0, 4.0], [0.0, 2.0, 5.0]];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub lambda: f64,
    pub resolution: usize,
    pub max_abs: f64,
    pub ball_side: Vec<f64>,
    pub halfspace_side: Vec<f64>,
}

/// Ball-model image `F(x) = 2(x+e_n)/|x+e_n|² - e_n` of a half-space point.
pub fn halfspace_to_ball(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut y = x.to_vec();
    y[n - 1] += 1.0;
    let r2: f64 = y.iter().map(|a| a * a).sum();
    let mut out: Vec<f64> = y.iter().map(|a| 2.0 * a / r2).collect();
    out[n - 1] -= 1.0;
    out
}

/// Maximum discrepancy over the standard panel at sphere resolution 16.
pub fn covariance_discrepancy(lambda: f64) -> Result<f64> {
    Ok(covariance_discrepancy_at(lambda, 16, &STANDARD_PANEL)?.max_abs)
}

pub fn covariance_discrepancy_at(lambda: f64, resolution: usize, points: &[[f64; 3]]) -> Result<CovarianceReport> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidParameters(format!("lambda = {lambda} must lie in (0, 1]")));
    }
    let sphere = make_sphere_grid(3, resolution)?;
    let ball = make_ball_grid(&sphere, 4, 1.0)?;
    let op = build_operator(&sphere, &ball, OperatorMode::MatrixFree, true)?;
    let v = if lambda == 1.0 {
        BoundaryField::constant(&sphere, 1.0)
    } else {
        glued_trial_field(beta_of_lambda(lambda), &[0.0, 0.0, 1.0], &sphere)?
    };
    let images: Vec<f64> = points.iter().flat_map(|x| halfspace_to_ball(x)).collect();
    let ball_side = op.extend_at(&v, &images)?;

    let sq2 = 2f64.sqrt();
    let h_tau = move |t: f64| {
        sq2 * t * ((lambda / (t * t + lambda * lambda)).sqrt() - (lambda / (lambda * lambda * t * t + 1.0)).sqrt())
    };
    let rule = ExteriorRule::new(lambda, 16);
    let halfspace_side: Vec<f64> = points
        .iter()
        .map(|x| {
            let pu = halfspace_forms_eval(lambda, HalfspaceForm::HarmonicW1, x) + exterior_extension(h_tau, &rule, x);
            let r = (x[0] * x[0] + x[1] * x[1] + (x[2] + 1.0) * (x[2] + 1.0)).sqrt();
            r / sq2 * pu
        })
        .collect();
    let max_abs = ball_side.iter().zip(&halfspace_side).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(CovarianceReport { lambda, resolution, max_abs, ball_side, halfspace_side })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_images() {
        assert_eq!(halfspace_to_ball(&[0.0, 0.0, 1.0]), vec![0.0, 0.0, 0.0]);
        let p = halfspace_to_ball(&[0.5, 0.0, 0.5]);
        assert!((p[0] - 0.4).abs() < 1e-15 && (p[2] - 0.2).abs() < 1e-15);
    }
}
