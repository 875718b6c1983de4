//! The sharp constant, Rayleigh quotient, subcritical energies, the
//! solvability threshold and the two-dimensional Carleman deficit.

mod scalar;

use serde::{Deserialize, Serialize};

pub use scalar::ScalarField;

use crate::error::{Error, Result};
use crate::field::BoundaryField;
use crate::geometry::{ball_volume, check_dim, sphere_area};
use crate::kernel::PoissonOperator;

/// `S(n) = n^{-(n-2)/(2(n-1))} ω_n^{-(n-2)/(2n(n-1))}`.
pub fn sharp_constant(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    let nf = n as f64;
    Ok(nf.powf(-(nf - 2.0) / (2.0 * (nf - 1.0))) * ball_volume(n).powf(-(nf - 2.0) / (2.0 * nf * (nf - 1.0))))
}

/// Interior exponent `2n/(n-2)`.
pub fn interior_exponent(n: usize) -> f64 {
    2.0 * n as f64 / (n as f64 - 2.0)
}

/// Critical boundary exponent `2(n-1)/(n-2)`.
pub fn critical_boundary_exponent(n: usize) -> f64 {
    2.0 * (n as f64 - 1.0) / (n as f64 - 2.0)
}

/// Admissible subcritical range `[n/(n-2), (n+2)/(n-2))` for `p`.
pub fn exponent_range(n: usize) -> (f64, f64) {
    let nf = n as f64;
    (nf / (nf - 2.0), (nf + 2.0) / (nf - 2.0))
}

pub fn check_exponent(n: usize, p: f64) -> Result<()> {
    let (lo, hi) = exponent_range(n);
    if p.is_finite() && p >= lo && p < hi {
        Ok(())
    } else {
        Err(Error::ExponentOutOfRange { p, lo, hi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `∫_{B₁} |Pv|^{2n/(n-2)}`.
    pub numerator: f64,
    /// `∫_{∂B₁} K |v|^{p+1}`.
    pub denominator: f64,
    pub exponent: f64,
    /// `I[v]`, present only at the critical exponent.
    pub quotient: Option<f64>,
    /// Numerator after rescaling `v` so that the denominator is 1.
    pub value: f64,
}

fn energy(op: &PoissonOperator, v: &BoundaryField, k: &BoundaryField, p: f64) -> Result<EnergyReport> {
    let n = op.dim();
    let sphere = op.source();
    k.check(sphere)?;
    v.check(sphere)?;
    let q = interior_exponent(n);
    let denominator: f64 =
        v.values().iter().zip(k.values()).zip(sphere.weights()).map(|((x, kk), w)| w * kk * x.abs().powf(p + 1.0)).sum();
    if !(denominator > 0.0) {
        return Err(Error::ZeroField);
    }
    let pv = op.extend(v)?;
    let numerator = pv.integrate(op.target(), |x| x.abs().powf(q))?;
    let value = numerator / denominator.powf(q / (p + 1.0));
    let critical = (p + 1.0 - critical_boundary_exponent(n)).abs() < 1e-12;
    let quotient = critical.then(|| numerator / denominator.powf(n as f64 / (n as f64 - 1.0)));
    Ok(EnergyReport { numerator, denominator, exponent: p, quotient, value })
}

/// `I[v] = ∫|Pv|^{2n/(n-2)} / (∫K|v|^{2(n-1)/(n-2)})^{n/(n-1)}`.
pub fn rayleigh(op: &PoissonOperator, v: &BoundaryField, k: &ScalarField) -> Result<EnergyReport> {
    let n = op.dim();
    if n < 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    let kv = k.register(op.source())?;
    energy(op, v, &kv, critical_boundary_exponent(n) - 1.0)
}

/// Energy of `v` rescaled to `∫K|v|^{p+1} = 1`.
pub fn subcritical_report(op: &PoissonOperator, v: &BoundaryField, k: &ScalarField, p: f64) -> Result<EnergyReport> {
    check_exponent(op.dim(), p)?;
    let kv = k.register(op.source())?;
    energy(op, v, &kv, p)
}

/// Same as [`subcritical_report`] with `K` already sampled on the source grid.
pub fn subcritical_report_sampled(
    op: &PoissonOperator,
    v: &BoundaryField,
    k: &BoundaryField,
    p: f64,
) -> Result<EnergyReport> {
    check_exponent(op.dim(), p)?;
    energy(op, v, k, p)
}

/// Value of the constant field under `∫|v|^{p+1} = 1` with `K ≡ 1`:
/// `ω_n (nω_n)^{-2n/((n-2)(p+1))}`.
pub fn constant_field_value(n: usize, p: f64) -> f64 {
    ball_volume(n) * sphere_area(n).powf(-interior_exponent(n) / (p + 1.0))
}

/// `S(n)^{2n/(n-2)} / ((min K)^{n/(n-1)} 2^{1/(n-1)})`.
pub fn threshold(n: usize, k: &ScalarField, grid: Option<&crate::geometry::SphereGrid>) -> Result<f64> {
    check_dim(n, k.dim())?;
    let s = sharp_constant(n)?;
    let nf = n as f64;
    let kmin = k.min_value(grid)?;
    Ok(s.powf(interior_exponent(n)) / (kmin.powf(nf / (nf - 1.0)) * 2f64.powf(1.0 / (nf - 1.0))))
}

/// `(1/4π)(∫_{∂B₁} e^v)² − ∫_{B₁} e^{2Pv}` on a planar grid.
pub fn carleman_deficit(op: &PoissonOperator, v: &BoundaryField) -> Result<f64> {
    check_dim(2, op.dim())?;
    let boundary = v.integrate(op.source(), f64::exp)?;
    let pv = op.extend(v)?;
    let interior = pv.integrate(op.target(), |x| (2.0 * x).exp())?;
    Ok(boundary * boundary / (4.0 * std::f64::consts::PI) - interior)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_ball_grid, make_sphere_grid};
    use crate::kernel::{build_operator, OperatorMode};
    use std::f64::consts::PI;

    fn op3(res: usize) -> PoissonOperator {
        let s = make_sphere_grid(3, res).unwrap();
        let b = make_ball_grid(&s, res, 2.0).unwrap();
        build_operator(&s, &b, OperatorMode::MatrixFree, true).unwrap()
    }

    #[test]
    fn sharp_constant_values() {
        let s3 = sharp_constant(3).unwrap();
        assert!((s3 - 3f64.powf(-0.25) * (4.0 * PI / 3.0).powf(-1.0 / 12.0)).abs() < 1e-15);
        assert!((s3 - 0.674340).abs() < 1e-6);
        let s4 = sharp_constant(4).unwrap();
        assert!((s4 - 4f64.powf(-1.0 / 3.0) * (PI * PI / 2.0).powf(-1.0 / 12.0)).abs() < 1e-15);
        for n in 3..8 {
            let nf = n as f64;
            let lhs = sharp_constant(n).unwrap().powf(2.0 * nf / (nf - 2.0));
            let rhs = nf.powf(-nf / (nf - 1.0)) * ball_volume(n).powf(-1.0 / (nf - 1.0));
            assert!((lhs - rhs).abs() < 1e-14 * rhs);
        }
        assert!((s3.powi(6) - 1.0 / (3.0 * (4.0 * PI).sqrt())).abs() < 1e-15);
        assert!(matches!(sharp_constant(2), Err(Error::UnsupportedDimension(2))));
    }

    #[test]
    fn constant_field_is_extremal() {
        let op = op3(8);
        let k = ScalarField::constant(3, 1.0);
        let a = rayleigh(&op, &BoundaryField::constant(op.source(), 1.0), &k).unwrap();
        let b = rayleigh(&op, &BoundaryField::constant(op.source(), 7.3), &k).unwrap();
        let s6 = sharp_constant(3).unwrap().powi(6);
        assert!((a.quotient.unwrap() - s6).abs() < 1e-12);
        assert!((a.quotient.unwrap() - b.quotient.unwrap()).abs() < 1e-12 * s6);
        assert!((a.value - b.value).abs() < 1e-12 * s6);
        assert!(matches!(rayleigh(&op, &BoundaryField::constant(op.source(), 0.0), &k), Err(Error::ZeroField)));
    }

    #[test]
    fn subcritical_constant_value() {
        let op = op3(8);
        let k = ScalarField::constant(3, 1.0);
        for p in [3.0, 3.5, 4.2] {
            let r = subcritical_report(&op, &BoundaryField::constant(op.source(), 2.0), &k, p).unwrap();
            assert!((r.value - constant_field_value(3, p)).abs() < 1e-12 * r.value);
        }
        let r = subcritical_report(&op, &BoundaryField::constant(op.source(), 1.0), &k, 3.0).unwrap();
        assert!((r.value - r.quotient.unwrap()).abs() < 1e-14);
        assert!(matches!(subcritical_report(&op, &BoundaryField::constant(op.source(), 1.0), &k, 1.7), Err(Error::ExponentOutOfRange { .. })));
        assert!(subcritical_report(&op, &BoundaryField::constant(op.source(), 1.0), &k, 5.0).is_err());
    }

    #[test]
    fn threshold_values() {
        let s6 = sharp_constant(3).unwrap().powi(6);
        let t1 = threshold(3, &ScalarField::constant(3, 1.0), None).unwrap();
        assert!((t1 - s6 / 2f64.sqrt()).abs() < 1e-15);
        assert!((t1 - 0.0664904).abs() < 1e-7);
        let t2 = threshold(3, &ScalarField::constant(3, 2.0), None).unwrap();
        assert!((t2 - t1 / 2f64.powf(1.5)).abs() < 1e-15);
        assert!(t1 < s6);
    }

    #[test]
    fn registration_checks() {
        let g = make_sphere_grid(3, 8).unwrap();
        let bad = ScalarField::new(3, "x1", true, |x| (x[0] + 2.0, vec![1.0, 0.0, 0.0]));
        assert!(matches!(bad.register(&g), Err(Error::InvalidParameters(_))));
        let neg = ScalarField::new(3, "x3", false, |x| (x[2], vec![0.0, 0.0, 1.0]));
        assert!(matches!(neg.register(&g), Err(Error::NonPositiveField { .. })));
        assert!(ScalarField::zn2_plus_1(3).register(&g).is_ok());
        let unregistered = ScalarField::new(3, "k", true, |x| (x[2] * x[2] + 0.5, vec![0.0, 0.0, 2.0 * x[2]]));
        assert!(unregistered.min_value(None).is_err());
        assert!(unregistered.min_value(Some(&g)).unwrap() >= 0.5);
    }

    #[test]
    fn carleman() {
        let s = make_sphere_grid(2, 64).unwrap();
        let b = make_ball_grid(&s, 32, 2.0).unwrap();
        let op = build_operator(&s, &b, OperatorMode::MatrixFree, true).unwrap();
        for c in [0.0, 1.3, -0.7] {
            let d = carleman_deficit(&op, &BoundaryField::constant(&s, c)).unwrap();
            assert!(d.abs() < 1e-10, "{c}: {d}");
        }
        assert!(carleman_deficit(&op3(8), &BoundaryField::constant(op3(8).source(), 0.0)).is_err());
    }
}
