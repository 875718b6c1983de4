//! Energy `E(λ) = ∫_{B₁} |P v_β|⁶` of the glued trial function in three
//! dimensions, and the power-law fit of `E/2 - ω₃`.
//!
//! Through the stereographic chart centred at the first cap the energy equals
//! `∫_{ℝ³₊} (W₁ + W₂)⁶`, and the antipodal map becomes the inversion
//! `y ↦ (-y', y₃)/|y|²`, which swaps the upper half-ball with its exterior.
//! Hence `E = 2 ∫_{B₁⁺} (W₁ + W₂)⁶`, and since `∫_{ℝ³₊} W₁⁶ = ω₃`,
//! `E/2 - ω₃ = ∫_{B₁⁺} ((W₁+W₂)⁶ - W₁⁶) - ∫_{ℝ³₊ \ B₁⁺} W₁⁶`.
//! Both integrals are axisymmetric and bounded, so no truncation is involved.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::halfspace::{exterior_extension, ExteriorRule};
use crate::error::{Error, Result};
use crate::geometry::ball_volume;
use crate::geometry::gauss::{composite, gauss_legendre_on, geometric_edges};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialControls {
    /// Gauss points per panel in every direction.
    pub order: usize,
    /// Repeat at a coarser order and fail when the deficits differ by more than 1%.
    pub check: bool,
}

impl Default for TrialControls {
    fn default() -> Self {
        TrialControls { order: 10, check: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialEnergy {
    pub lambda: f64,
    /// `E(λ)`.
    pub energy: f64,
    /// `E(λ) - 2ω₃`.
    pub deficit: f64,
    pub resolution: usize,
}

fn w1_sixth(lambda: f64, r: f64, cpsi: f64) -> f64 {
    let d = r * r + 2.0 * r * lambda * cpsi + lambda * lambda;
    8.0 * (lambda / d).powi(3)
}

fn half_deficit(lambda: f64, order: usize) -> f64 {
    let sq2 = 2f64.sqrt();
    let h_tau = move |t: f64| {
        sq2 * t * ((lambda / (t * t + lambda * lambda)).sqrt() - (lambda / (lambda * lambda * t * t + 1.0)).sqrt())
    };
    let rule = ExteriorRule::new(lambda, order);

    let mut r_edges = geometric_edges(lambda, 0.5, 10, 2.0);
    let mut e = 0.25;
    while e > 1e-6 {
        r_edges.push(1.0 - e);
        e *= 0.5;
    }
    r_edges.push(1.0);
    let (rs, rw) = composite(&r_edges, order);

    let mut psi_edges = vec![0.0, FRAC_PI_2 / 2.0];
    let mut e = FRAC_PI_2 / 4.0;
    while e > 1e-6 {
        psi_edges.push(FRAC_PI_2 - e);
        e *= 0.5;
    }
    psi_edges.push(FRAC_PI_2);
    let (ps, pw) = composite(&psi_edges, order);
    let trig: Vec<(f64, f64)> = ps.iter().map(|p| (p.sin(), p.cos())).collect();

    let inner: f64 = rs
        .par_iter()
        .zip(&rw)
        .map(|(&r, &wr)| {
            let mut s = 0.0;
            for (&(sp, cp), &wp) in trig.iter().zip(&pw) {
                let y = [r * sp, 0.0, r * cp];
                let w2 = exterior_extension(&h_tau, &rule, &y);
                let a = w1_sixth(lambda, r, cp).powf(1.0 / 6.0);
                let b = a + w2;
                // (a + w)⁶ - a⁶ without cancellation
                let diff = w2 * (b.powi(5) + b.powi(4) * a + b.powi(3) * a * a + b * b * a.powi(3) + b * a.powi(4) + a.powi(5));
                s += wp * sp * diff;
            }
            wr * r * r * s
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();

    // exterior of the half-ball, with R = 1/s
    let (ss, sw) = gauss_legendre_on(4 * order, 0.0, 1.0);
    let (qs, qw) = gauss_legendre_on(4 * order, 0.0, FRAC_PI_2);
    let mut outer = 0.0;
    for (&s, &ws) in ss.iter().zip(&sw) {
        for (&q, &wq) in qs.iter().zip(&qw) {
            let c = q.cos();
            let d = 1.0 + 2.0 * lambda * s * c + lambda * lambda * s * s;
            outer += ws * wq * 8.0 * lambda.powi(3) * s * s * q.sin() / d.powi(3);
        }
    }
    2.0 * PI * (inner - outer)
}

/// `E(λ)` for `0.001 ≤ λ ≤ 0.5`, n = 3.
pub fn trial_energy(lambda: f64, controls: TrialControls) -> Result<TrialEnergy> {
    if !(0.001..=0.5).contains(&lambda) {
        return Err(Error::InvalidParameters(format!("trial energy needs 0.001 <= lambda <= 0.5, got {lambda}")));
    }
    if controls.order < 4 {
        return Err(Error::InvalidOrder(controls.order));
    }
    let fine = half_deficit(lambda, controls.order);
    if controls.check {
        let coarse = half_deficit(lambda, controls.order / 2 + 1);
        let rel = (fine - coarse).abs() / fine.abs().max(f64::MIN_POSITIVE);
        if rel > 1e-2 {
            return Err(Error::ResolutionInsufficient { coarse, fine, rel_diff: rel });
        }
    }
    let omega = ball_volume(3);
    Ok(TrialEnergy { lambda, energy: 2.0 * (omega + fine), deficit: 2.0 * fine, resolution: controls.order })
}

/// CSV with header `lambda,E,deficit,resolution`.
pub fn trial_energy_csv(rows: &[TrialEnergy]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["lambda", "E", "deficit", "resolution"]).expect("in-memory write");
    for r in rows {
        w.write_record([
            format!("{:.17e}", r.lambda),
            format!("{:.17e}", r.energy),
            format!("{:.17e}", r.deficit),
            r.resolution.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    /// `A` in `E/2 = ω_n + A λ^γ`.
    pub coefficient: f64,
    /// Fitted `γ`.
    pub exponent: f64,
}

/// Least-squares fit of `log(E/2 - ω_n)` against `log λ` over `(λ, E)` samples.
pub fn fit_expansion(n: usize, samples: &[(f64, f64)]) -> Result<Expansion> {
    if samples.len() < 4 {
        return Err(Error::InvalidParameters(format!("need at least 4 samples, got {}", samples.len())));
    }
    let omega = ball_volume(n);
    let mut pts = Vec::with_capacity(samples.len());
    for &(l, e) in samples {
        if !(l > 0.0 && l <= 0.2) {
            return Err(Error::InvalidParameters(format!("fit samples need 0 < lambda <= 0.2, got {l}")));
        }
        let d = e / 2.0 - omega;
        if !(d > 0.0) {
            return Err(Error::NonpositiveDeficit(l, e));
        }
        pts.push((l.ln(), d.ln()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidParameters("fit samples need at least two distinct lambdas".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    Ok(Expansion { coefficient: intercept.exp(), exponent: slope })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_exact_power_law() {
        let w = ball_volume(3);
        let s: Vec<(f64, f64)> = [0.05, 0.075, 0.1, 0.15].iter().map(|&l| (l, 2.0 * (w + 7.0 * l * l))).collect();
        let f = fit_expansion(3, &s).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-10);
        assert!((f.coefficient - 7.0).abs() < 1e-10);
    }

    #[test]
    fn fit_errors() {
        let w = ball_volume(3);
        let flat: Vec<(f64, f64)> = [0.05, 0.075, 0.1, 0.15].iter().map(|&l| (l, 2.0 * w)).collect();
        assert!(matches!(fit_expansion(3, &flat), Err(Error::NonpositiveDeficit(..))));
        assert!(fit_expansion(3, &flat[..3]).is_err());
        let wide: Vec<(f64, f64)> = [0.05, 0.1, 0.15, 0.3].iter().map(|&l| (l, 2.0 * w + l)).collect();
        assert!(fit_expansion(3, &wide).is_err());
    }

    #[test]
    fn energy_domain() {
        assert!(trial_energy(0.0005, TrialControls::default()).is_err());
        assert!(trial_energy(0.6, TrialControls::default()).is_err());
    }

    #[test]
    fn csv_header() {
        let row = TrialEnergy { lambda: 0.1, energy: 8.5, deficit: 0.1, resolution: 10 };
        let text = trial_energy_csv(&[row]);
        assert!(text.starts_with("lambda,E,deficit,resolution\n"));
        assert_eq!(text.lines().count(), 2);
    }
}
