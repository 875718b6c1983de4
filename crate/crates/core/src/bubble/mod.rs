//! Spherical-cap bubbles, the glued antipodal trial function, their
//! half-space chart forms, and the energy of the glued trial function.

mod halfspace;
mod limit;
mod trial;

use serde::{Deserialize, Serialize};

pub use halfspace::{complete_elliptic_e, exterior_extension, ring_integral, ExteriorRule};
pub use limit::{limit_equation_residual, limit_equation_residual_with, LimitResidual};
pub use trial::{fit_expansion, trial_energy, trial_energy_csv, Expansion, TrialControls, TrialEnergy};

use crate::error::{Error, Result};
use crate::field::{BoundaryField, SphereFunction};
use crate::functional::ScalarField;
use crate::geometry::{dot, norm2, SphereGrid};

/// `λ(β) = √((β-1)/(β+1))`.
pub fn lambda_of_beta(beta: f64) -> f64 {
    ((beta - 1.0) / (beta + 1.0)).sqrt()
}

/// `β(λ) = (1+λ²)/(1-λ²)`, the inverse of [`lambda_of_beta`].
pub fn beta_of_lambda(lambda: f64) -> f64 {
    (1.0 + lambda * lambda) / (1.0 - lambda * lambda)
}

fn unit(center: &[f64]) -> Result<Vec<f64>> {
    let r = norm2(center).sqrt();
    if (r - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameters(format!("center has norm {r}, expected 1")));
    }
    Ok(center.to_vec())
}

/// `v(ξ) = (√(β²-1)/(β - cos r))^{(n-2)/2}` on the closed hemisphere
/// `r = d(ξ, center) ≤ π/2`, zero beyond.
#[derive(Debug, Clone, PartialEq)]
pub struct CapBubble {
    beta: f64,
    center: Vec<f64>,
}

impl CapBubble {
    pub fn new(beta: f64, center: &[f64]) -> Result<Self> {
        if !(beta > 1.0 && beta.is_finite()) {
            return Err(Error::InvalidParameters(format!("beta = {beta} must exceed 1")));
        }
        Ok(CapBubble { beta, center: unit(center)? })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn lambda(&self) -> f64 {
        lambda_of_beta(self.beta)
    }
    pub fn center(&self) -> &[f64] {
        &self.center
    }
    pub fn dim(&self) -> usize {
        self.center.len()
    }
}

/// Value of the cap bubble at `xi`.
pub fn cap_bubble_eval(b: &CapBubble, xi: &[f64]) -> f64 {
    let c = dot(xi, &b.center);
    if c < 0.0 {
        return 0.0;
    }
    let a = (b.dim() as f64 - 2.0) / 2.0;
    ((b.beta * b.beta - 1.0).sqrt() / (b.beta - c)).powf(a)
}

impl SphereFunction for CapBubble {
    fn eval(&self, xi: &[f64]) -> f64 {
        cap_bubble_eval(self, xi)
    }
}

/// `v_β = v_{1,β} + v_{2,β}` with caps at `ξ₁` and `-ξ₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct GluedTrial {
    first: CapBubble,
    second: CapBubble,
}

impl GluedTrial {
    pub fn new(beta: f64, center: &[f64]) -> Result<Self> {
        let first = CapBubble::new(beta, center)?;
        let minus: Vec<f64> = first.center.iter().map(|x| -x).collect();
        let second = CapBubble { beta, center: minus };
        Ok(GluedTrial { first, second })
    }

    pub fn from_lambda(lambda: f64, center: &[f64]) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidParameters(format!("lambda = {lambda} must lie in (0, 1)")));
        }
        GluedTrial::new(beta_of_lambda(lambda), center)
    }

    pub fn beta(&self) -> f64 {
        self.first.beta
    }
    pub fn lambda(&self) -> f64 {
        self.first.lambda()
    }
    pub fn caps(&self) -> (&CapBubble, &CapBubble) {
        (&self.first, &self.second)
    }
}

impl SphereFunction for GluedTrial {
    fn eval(&self, xi: &[f64]) -> f64 {
        // The two hemispheres overlap only on the equator, where the caps
        // agree; taking one value there keeps the field exactly even.
        let c = dot(xi, &self.first.center);
        let cap = if c >= 0.0 { &self.first } else { &self.second };
        let a = (self.first.dim() as f64 - 2.0) / 2.0;
        let beta = cap.beta;
        ((beta * beta - 1.0).sqrt() / (beta - c.abs())).powf(a)
    }
}

/// Samples the glued trial function on `sphere`, exactly antipodally even.
pub fn glued_trial_field(beta: f64, center: &[f64], sphere: &SphereGrid) -> Result<BoundaryField> {
    crate::geometry::check_dim(sphere.dim(), center.len())?;
    let g = GluedTrial::new(beta, center)?;
    let mut values = vec![0.0; sphere.len()];
    let anti = sphere.antipode();
    for i in 0..sphere.len() {
        let j = anti[i];
        if j > i {
            let v = g.eval(sphere.node(i));
            values[i] = v;
            values[j] = v;
        } else if j == i {
            values[i] = g.eval(sphere.node(i));
        }
    }
    BoundaryField::from_values(sphere, values)
}

/// The chart forms of the trial function near the pole `e_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfspaceForm {
    /// `u_{1,λ}`: the near cap, cut off at `|y'| = 1`.
    U1,
    /// `w_{1,λ}`: the full bubble.
    W1,
    /// `w_{2,λ}`: the far cap minus the bubble tail on `|y'| ≥ 1`.
    W2,
    /// `W_{1,λ}`: harmonic extension of `w_{1,λ}`, at a point of `ℝⁿ₊`.
    HarmonicW1,
}

/// Evaluates one of the chart forms. `point` lies in `ℝ^{n-1}` for the
/// boundary forms and in `ℝⁿ` (last coordinate `≥ 0`) for `HarmonicW1`; the
/// dimension `n` is inferred accordingly.
pub fn halfspace_forms_eval(lambda: f64, which: HalfspaceForm, point: &[f64]) -> f64 {
    let (n, rho2) = match which {
        HalfspaceForm::HarmonicW1 => (point.len(), 0.0),
        _ => (point.len() + 1, norm2(point)),
    };
    let a = (n as f64 - 2.0) / 2.0;
    let c = 2f64.powf(a);
    let near = |r2: f64| c * (lambda / (lambda * lambda + r2)).powf(a);
    let far = |r2: f64| c * (lambda / (1.0 + lambda * lambda * r2)).powf(a);
    match which {
        HalfspaceForm::U1 => {
            if rho2 <= 1.0 {
                near(rho2)
            } else {
                0.0
            }
        }
        HalfspaceForm::W1 => near(rho2),
        HalfspaceForm::W2 => {
            if rho2 >= 1.0 {
                (far(rho2) - near(rho2)).max(0.0)
            } else {
                0.0
            }
        }
        HalfspaceForm::HarmonicW1 => {
            let yn = point[n - 1];
            let d = (yn + lambda) * (yn + lambda) + norm2(&point[..n - 1]);
            c * (lambda / d).powf(a)
        }
    }
}

/// `K(ξ) = K₀ + δ min(|ξ-ξ₁|, |ξ+ξ₁|)^q`.
pub fn make_flat_k(k0: f64, delta: f64, q: f64, center: &[f64]) -> Result<ScalarField> {
    let n = center.len();
    if !(k0 > 0.0 && k0.is_finite()) || !(delta >= 0.0 && delta.is_finite()) || !(q > n as f64 - 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameters(format!(
            "flat K needs K0 > 0, delta >= 0, q > n-1; got K0 = {k0}, delta = {delta}, q = {q}"
        )));
    }
    let c = unit(center)?;
    let label = format!("flat(K0={k0}, delta={delta}, q={q})");
    let min_point = c.clone();
    let field = ScalarField::new(n, label, true, move |x| {
        let s = if dot(x, &c) >= 0.0 { 1.0 } else { -1.0 };
        let d: Vec<f64> = x.iter().zip(&c).map(|(a, b)| a - s * b).collect();
        let r = norm2(&d).sqrt();
        let value = k0 + delta * r.powf(q);
        let grad = if r > 0.0 { d.iter().map(|di| delta * q * r.powf(q - 2.0) * di).collect() } else { vec![0.0; n] };
        (value, grad)
    });
    Ok(field.with_minimum(k0, min_point))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_sphere_grid, sphere_area};

    const E3: [f64; 3] = [0.0, 0.0, 1.0];

    #[test]
    fn cap_values() {
        let b = CapBubble::new(5.0 / 3.0, &E3).unwrap();
        assert!((b.lambda() - 0.5).abs() < 1e-15);
        assert!((cap_bubble_eval(&b, &E3) - 2f64.sqrt()).abs() < 1e-14);
        assert!((cap_bubble_eval(&b, &[1.0, 0.0, 0.0]) - 0.8f64.sqrt()).abs() < 1e-15);
        assert_eq!(cap_bubble_eval(&b, &[0.0, 0.6, -0.8]), 0.0);
        assert!(CapBubble::new(1.0, &E3).is_err());
        assert!(CapBubble::new(2.0, &[0.0, 0.0, 2.0]).is_err());
    }

    #[test]
    fn duality_round_trip() {
        let mut prev = 0.0;
        for k in 1..200 {
            let beta = 1.0 + 0.05 * k as f64;
            let l = lambda_of_beta(beta);
            assert!(l > prev);
            prev = l;
            assert!((beta_of_lambda(l) - beta).abs() < 1e-14 * beta.max(1.0) * 20.0);
        }
        for k in 1..100 {
            let l = k as f64 / 100.0;
            assert!((lambda_of_beta(beta_of_lambda(l)) - l).abs() < 1e-14);
        }
        assert!(lambda_of_beta(1.0 + 1e-12) < 1e-5);
    }

    #[test]
    fn glued_field_properties() {
        let g = make_sphere_grid(3, 16).unwrap();
        let beta = 5.0 / 3.0;
        let v = glued_trial_field(beta, &E3, &g).unwrap();
        let anti = g.antipode();
        for i in 0..g.len() {
            assert_eq!(v.values()[i], v.values()[anti[i]]);
        }
        let gt = GluedTrial::new(beta, &E3).unwrap();
        let top = gt.eval(&E3);
        assert_eq!(top, gt.eval(&[0.0, 0.0, -1.0]));
        assert!((top - 0.5f64.powf(-0.5)).abs() < 1e-14);
        let cap = CapBubble::new(beta, &E3).unwrap();
        let whole = v.integrate(&g, |x| x.powi(4)).unwrap();
        let one = g.integrate(|x| cap_bubble_eval(&cap, x).powi(4));
        assert!((whole - 2.0 * one).abs() < 1e-12 * whole);
        assert!(v.values().iter().all(|&x| x > 0.0 && x <= top));
    }

    #[test]
    fn full_cap_norm_matches_chart() {
        // L⁴ mass of one cap equals the chart integral of u₁⁴ over the unit disk.
        let l: f64 = 0.5;
        let cap = CapBubble::new(beta_of_lambda(l), &E3).unwrap();
        let g = make_sphere_grid(3, 64).unwrap();
        let q = g.integrate(|x| cap_bubble_eval(&cap, x).powi(4));
        // ∫_{|y|≤1} 4λ²/(λ²+ρ²)² dy = 4πλ²·(1/λ² - 1/(λ²+1))
        let exact = 4.0 * std::f64::consts::PI * l * l * (1.0 / (l * l) - 1.0 / (l * l + 1.0));
        assert!((q - exact).abs() < 5e-3 * exact, "{q} {exact}");
        assert!(q < sphere_area(3));
    }

    #[test]
    fn halfspace_forms() {
        assert!((halfspace_forms_eval(0.5, HalfspaceForm::HarmonicW1, &[0.0, 0.0, 0.0]) - 2.0).abs() < 1e-15);
        assert!(halfspace_forms_eval(0.3, HalfspaceForm::W2, &[0.6, 0.8]).abs() < 1e-15);
        for k in 1..10 {
            let l = k as f64 / 10.0;
            for j in 0..200 {
                let r = 1.0 + j as f64 * 0.5;
                assert!(halfspace_forms_eval(l, HalfspaceForm::W2, &[r, 0.0]) >= 0.0);
                let far = 2f64.sqrt() * (l / (1.0 + l * l * r * r)).sqrt();
                let near = 2f64.sqrt() * (l / (l * l + r * r)).sqrt();
                assert!(far - near >= 0.0);
            }
        }
        let y = [0.3, -0.2];
        assert_eq!(halfspace_forms_eval(0.2, HalfspaceForm::U1, &y), halfspace_forms_eval(0.2, HalfspaceForm::W1, &y));
        assert_eq!(halfspace_forms_eval(0.2, HalfspaceForm::U1, &[2.0, 0.0]), 0.0);
        let w1 = halfspace_forms_eval(0.2, HalfspaceForm::W1, &[0.4, 0.1]);
        let big_w1 = halfspace_forms_eval(0.2, HalfspaceForm::HarmonicW1, &[0.4, 0.1, 0.0]);
        assert!((w1 - big_w1).abs() < 1e-15);
    }

    #[test]
    fn chart_forms_match_caps() {
        // u(x') = (2/(1+|x'|²))^{(n-2)/2} v(F(x')) reproduces u₁ + u₂.
        let l = 0.3;
        let g = GluedTrial::from_lambda(l, &E3).unwrap();
        for &(a, b) in &[(0.1, 0.2), (0.5, -0.7), (1.5, 0.3), (4.0, 2.0)] {
            let x = [a, b];
            let r2: f64 = a * a + b * b;
            let xi = crate::geometry::stereographic_lift(&x);
            let u = (2.0 / (1.0 + r2)).sqrt() * g.eval(&xi);
            let expected = if r2 <= 1.0 {
                halfspace_forms_eval(l, HalfspaceForm::U1, &x)
            } else {
                halfspace_forms_eval(l, HalfspaceForm::W1, &x) + halfspace_forms_eval(l, HalfspaceForm::W2, &x)
            };
            assert!((u - expected).abs() < 1e-13, "{u} {expected}");
        }
    }

    #[test]
    fn flat_k() {
        let k = make_flat_k(1.0, 0.0, 3.0, &E3).unwrap();
        let g = make_sphere_grid(3, 16).unwrap();
        assert!(g.nodes().all(|x| k.value(x) == 1.0));
        let k = make_flat_k(1.0, 0.1, 3.0, &E3).unwrap();
        assert_eq!(k.value(&E3), 1.0);
        assert_eq!(k.value(&[0.0, 0.0, -1.0]), 1.0);
        let mut worst: f64 = 0.0;
        for x in g.nodes().filter(|x| x[2] >= 0.0) {
            let d = ((x[0]).powi(2) + x[1].powi(2) + (x[2] - 1.0).powi(2)).sqrt();
            worst = worst.max((k.value(x) - 1.0) / d.powi(3));
        }
        assert!(worst <= 0.1 + 1e-12);
        assert!(k.register(&g).is_ok());
        assert!(make_flat_k(1.0, 0.1, 2.0, &E3).is_err());
        assert!(make_flat_k(0.0, 0.1, 3.0, &E3).is_err());
        // gradient by central differences along a tangent direction
        let p = [0.6, 0.0, 0.8];
        let t = [0.8, 0.0, -0.6];
        let h = 1e-6;
        let f = |s: f64| {
            let q: Vec<f64> = p.iter().zip(&t).map(|(a, b)| a * s.cos() + b * s.sin()).collect();
            k.value(&q)
        };
        let fd = (f(h) - f(-h)) / (2.0 * h);
        let gr = k.gradient(&p);
        assert!((fd - dot(&gr, &t)).abs() < 1e-7);
    }
}
