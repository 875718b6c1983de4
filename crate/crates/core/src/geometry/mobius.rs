//! Stereographic chart and conformal transformations of the unit sphere.
//!
//! The chart is `F(x') = (2x', 1 - |x'|²) / (1 + |x'|²)`, which sends the
//! origin to `e_n` and the point at infinity to `-e_n`.

use crate::error::{Error, Result};
use crate::field::{BoundaryField, SphereFunction};
use crate::geometry::{check_dim, dot, norm2, SphereGrid};

/// Inverse stereographic projection `ℝ^{n-1} → ∂B₁`.
pub fn stereographic_lift(xprime: &[f64]) -> Vec<f64> {
    let r2 = norm2(xprime);
    let d = 1.0 + r2;
    let mut out: Vec<f64> = xprime.iter().map(|x| 2.0 * x / d).collect();
    out.push((1.0 - r2) / d);
    out
}

/// Stereographic projection `∂B₁ \ {-e_n} → ℝ^{n-1}`.
pub fn stereographic_inverse(xi: &[f64]) -> Result<Vec<f64>> {
    let n = xi.len();
    let d = 1.0 + xi[n - 1];
    if d.abs() < 1e-14 {
        return Err(Error::PoleSingularity(d));
    }
    Ok(xi[..n - 1].iter().map(|x| x / d).collect())
}

/// A conformal transformation of `∂B₁`:
/// `T = R ∘ Q ∘ F ∘ (x' ↦ λx' + t) ∘ F⁻¹ ∘ Qᵀ`, where `Q` is the reflection
/// carrying `e_n` to the chart pole.
#[derive(Debug, Clone, PartialEq)]
pub struct MobiusMap {
    n: usize,
    pole: Vec<f64>,
    translation: Vec<f64>,
    scale: f64,
    rotation: Vec<f64>,
    inverted: bool,
}

impl MobiusMap {
    pub fn new(pole: &[f64], translation: &[f64], scale: f64, rotation: &[f64]) -> Result<Self> {
        let n = pole.len();
        if !(2..=3).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        check_dim(n - 1, translation.len())?;
        check_dim(n * n, rotation.len())?;
        let pn = norm2(pole).sqrt();
        if (pn - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameters(format!("pole has norm {pn}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameters(format!("dilation scale {scale}")));
        }
        for i in 0..n {
            for j in 0..n {
                let g: f64 = (0..n).map(|k| rotation[k * n + i] * rotation[k * n + j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (g - want).abs() > 1e-10 {
                    return Err(Error::InvalidParameters("rotation is not orthogonal".into()));
                }
            }
        }
        Ok(MobiusMap {
            n,
            pole: pole.to_vec(),
            translation: translation.to_vec(),
            scale,
            rotation: rotation.to_vec(),
            inverted: false,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut pole = vec![0.0; n];
        pole[n - 1] = 1.0;
        MobiusMap {
            n,
            pole,
            translation: vec![0.0; n - 1],
            scale: 1.0,
            rotation: identity_matrix(n),
            inverted: false,
        }
    }

    /// Pure dilation by `scale` in the chart centred at `pole`.
    pub fn dilation(pole: &[f64], scale: f64) -> Result<Self> {
        let n = pole.len();
        Self::new(pole, &vec![0.0; n.saturating_sub(1)], scale, &identity_matrix(n))
    }

    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }
    pub fn pole(&self) -> &[f64] {
        &self.pole
    }

    pub fn is_identity(&self) -> bool {
        self.scale == 1.0 && self.translation.iter().all(|&t| t == 0.0) && self.rotation == identity_matrix(self.n)
    }

    pub fn inverse(&self) -> Self {
        MobiusMap { inverted: !self.inverted, ..self.clone() }
    }

    /// Image of `eta` together with the linear conformal factor at `eta`.
    pub fn apply_with_factor(&self, eta: &[f64]) -> (Vec<f64>, f64) {
        if self.is_identity() {
            return (eta.to_vec(), 1.0);
        }
        if self.inverted {
            let img = self.backward(eta);
            let (_, s) = self.forward(&img);
            (img, 1.0 / s)
        } else {
            self.forward(eta)
        }
    }

    pub fn apply(&self, eta: &[f64]) -> Vec<f64> {
        self.apply_with_factor(eta).0
    }

    /// Area-element Jacobian `J = s^{n-1}`.
    pub fn jacobian(&self, eta: &[f64]) -> f64 {
        self.apply_with_factor(eta).1.powi(self.n as i32 - 1)
    }

    pub fn apply_inverse(&self, zeta: &[f64]) -> Vec<f64> {
        self.inverse().apply(zeta)
    }

    fn forward(&self, eta: &[f64]) -> (Vec<f64>, f64) {
        let n = self.n;
        let z = self.reflect(eta);
        let denom = 1.0 + z[n - 1];
        if denom.abs() < 1e-14 {
            let minus_pole: Vec<f64> = self.pole.iter().map(|p| -p).collect();
            return (self.rotate(&minus_pole), 1.0 / self.scale);
        }
        let x: Vec<f64> = z[..n - 1].iter().map(|v| v / denom).collect();
        let y: Vec<f64> = x.iter().zip(&self.translation).map(|(a, t)| self.scale * a + t).collect();
        let s = self.scale * (1.0 + norm2(&x)) / (1.0 + norm2(&y));
        let img = self.rotate(&self.reflect(&stereographic_lift(&y)));
        (img, s)
    }

    fn backward(&self, zeta: &[f64]) -> Vec<f64> {
        let n = self.n;
        let z = self.reflect(&self.rotate_t(zeta));
        let denom = 1.0 + z[n - 1];
        if denom.abs() < 1e-14 {
            return self.pole.iter().map(|p| -p).collect();
        }
        let y: Vec<f64> = z[..n - 1].iter().map(|v| v / denom).collect();
        let x: Vec<f64> = y.iter().zip(&self.translation).map(|(a, t)| (a - t) / self.scale).collect();
        self.reflect(&stereographic_lift(&x))
    }

    // Householder reflection swapping e_n and the pole (symmetric, so Q = Qᵀ).
    fn reflect(&self, p: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut u = self.pole.iter().map(|x| -x).collect::<Vec<_>>();
        u[n - 1] += 1.0;
        let uu = norm2(&u);
        if uu < 1e-30 {
            return p.to_vec();
        }
        let c = 2.0 * dot(&u, p) / uu;
        p.iter().zip(&u).map(|(x, ui)| x - c * ui).collect()
    }

    fn rotate(&self, p: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n).map(|i| (0..n).map(|j| self.rotation[i * n + j] * p[j]).sum()).collect()
    }

    fn rotate_t(&self, p: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n).map(|i| (0..n).map(|j| self.rotation[j * n + i] * p[j]).sum()).collect()
    }
}

pub(crate) fn identity_matrix(n: usize) -> Vec<f64> {
    (0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }).collect()
}

/// `v` transplanted by `map`: `η ↦ J(η)^{(n-2)/(2(n-1))} v(T η)`. This is the
/// weighting under which the `L^{2(n-1)/(n-2)}(∂B₁)` norm is invariant.
#[derive(Debug, Clone)]
pub struct PulledBack<'a, F: ?Sized> {
    pub field: &'a F,
    pub map: &'a MobiusMap,
}

impl<F: SphereFunction + ?Sized> SphereFunction for PulledBack<'_, F> {
    fn eval(&self, eta: &[f64]) -> f64 {
        let (img, s) = self.map.apply_with_factor(eta);
        let a = (self.map.n as f64 - 2.0) / 2.0;
        s.powf(a) * self.field.eval(&img)
    }
}

/// Samples the conformal pullback of `v` under `map` on `grid`.
///
/// `v` must be evaluable off the grid, since `T η` is generally not a node.
pub fn conformal_pullback<F: SphereFunction + ?Sized>(
    v: &F,
    map: &MobiusMap,
    grid: &SphereGrid,
) -> Result<BoundaryField> {
    check_dim(grid.dim(), map.dim())?;
    let pb = PulledBack { field: v, map };
    Ok(BoundaryField::sample(grid, |p| pb.eval(p)))
}
