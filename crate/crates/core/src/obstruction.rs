//! Conformal Killing fields of the round sphere and the Kazdan–Warner
//! pairing `∫ (∇_X K) v^{2(n-1)/(n-2)} ds`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::BoundaryField;
use crate::functional::{critical_boundary_exponent, ScalarField};
use crate::geometry::{check_dim, dot, SphereGrid};

/// Relative tolerance of the obstruction flag.
pub const DEFAULT_KW_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KillingKind {
    Rotation,
    Essential,
    Mixed,
}

/// `X(ξ) = Aξ + a - (a·ξ)ξ` with `A` skew.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KillingField {
    pub label: String,
    n: usize,
    /// Row-major `n × n`.
    skew: Vec<f64>,
    shift: Vec<f64>,
}

impl KillingField {
    /// Infinitesimal rotation in the `(i, j)` plane, `e_i ∧ e_j`.
    pub fn rotation(n: usize, i: usize, j: usize) -> Result<Self> {
        if i >= n || j >= n || i == j {
            return Err(Error::InvalidParameters(format!("rotation plane ({i}, {j}) in dimension {n}")));
        }
        let mut skew = vec![0.0; n * n];
        skew[i * n + j] = -1.0;
        skew[j * n + i] = 1.0;
        Ok(KillingField { label: format!("rot_{}{}", i + 1, j + 1), n, skew, shift: vec![0.0; n] })
    }

    pub fn from_skew(skew: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        let n = (skew.len() as f64).sqrt().round() as usize;
        if n * n != skew.len() {
            return Err(Error::InvalidParameters("skew matrix must be square".into()));
        }
        for i in 0..n {
            for j in 0..n {
                if skew[i * n + j] != -skew[j * n + i] {
                    return Err(Error::InvalidParameters("matrix is not skew".into()));
                }
            }
        }
        Ok(KillingField { label: label.into(), n, skew, shift: vec![0.0; n] })
    }

    pub fn essential(a: &[f64], label: impl Into<String>) -> Self {
        let n = a.len();
        KillingField { label: label.into(), n, skew: vec![0.0; n * n], shift: a.to_vec() }
    }

    /// `Σ c_k X_k`.
    pub fn combination(fields: &[KillingField], coeffs: &[f64]) -> Result<Self> {
        let first = fields.first().ok_or_else(|| Error::InvalidParameters("empty combination".into()))?;
        if fields.len() != coeffs.len() {
            return Err(Error::InvalidParameters("one coefficient per field".into()));
        }
        let n = first.n;
        let mut skew = vec![0.0; n * n];
        let mut shift = vec![0.0; n];
        for (f, &c) in fields.iter().zip(coeffs) {
            check_dim(n, f.n)?;
            skew.iter_mut().zip(&f.skew).for_each(|(s, x)| *s += c * x);
            shift.iter_mut().zip(&f.shift).for_each(|(s, x)| *s += c * x);
        }
        Ok(KillingField { label: "combination".into(), n, skew, shift })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> KillingKind {
        let rot = self.skew.iter().any(|&x| x != 0.0);
        let ess = self.shift.iter().any(|&x| x != 0.0);
        match (rot, ess) {
            (true, false) => KillingKind::Rotation,
            (false, true) => KillingKind::Essential,
            _ => KillingKind::Mixed,
        }
    }

    pub fn apply(&self, xi: &[f64]) -> Vec<f64> {
        let n = self.n;
        let ax = dot(&self.shift, xi);
        (0..n).map(|i| dot(&self.skew[i * n..(i + 1) * n], xi) + self.shift[i] - ax * xi[i]).collect()
    }
}

/// The `n(n-1)/2` elementary rotations followed by the `n` essential fields
/// `e_k - (e_k·ξ)ξ`.
pub fn killing_basis(n: usize) -> Result<Vec<KillingField>> {
    if !(2..=3).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    let mut out = Vec::with_capacity(n * (n - 1) / 2 + n);
    for i in 0..n {
        for j in i + 1..n {
            out.push(KillingField::rotation(n, i, j)?);
        }
    }
    for k in 0..n {
        let mut a = vec![0.0; n];
        a[k] = 1.0;
        out.push(KillingField::essential(&a, format!("ess_{}", k + 1)));
    }
    Ok(out)
}

fn boundary_power(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    Ok(critical_boundary_exponent(n))
}

/// `Σ_j w_j (∇K(ξ_j)·X(ξ_j)) v_j^{2(n-1)/(n-2)}`; needs `n ≥ 3`.
pub fn kw_pairing(k: &ScalarField, v: &BoundaryField, x: &KillingField, sphere: &SphereGrid) -> Result<f64> {
    v.check(sphere)?;
    let n = sphere.dim();
    check_dim(n, k.dim())?;
    check_dim(n, x.dim())?;
    let e = boundary_power(n)?;
    if let Some((index, &value)) = v.values().iter().enumerate().find(|(_, &x)| x < 0.0) {
        return Err(Error::NonPositiveField { index, value });
    }
    Ok((0..sphere.len())
        .map(|j| {
            let xi = sphere.node(j);
            sphere.weights()[j] * dot(&k.gradient(xi), &x.apply(xi)) * v.values()[j].powf(e)
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KWReport {
    pub pairings: Vec<Pairing>,
    pub max_abs: f64,
    /// `1e-6 · max|∇K| · ∫ v^{2(n-1)/(n-2)}`.
    pub tolerance: f64,
    pub flag: bool,
}

pub fn kw_report(k: &ScalarField, v: &BoundaryField, sphere: &SphereGrid) -> Result<KWReport> {
    kw_report_with(k, v, sphere, DEFAULT_KW_TOLERANCE)
}

pub fn kw_report_with(k: &ScalarField, v: &BoundaryField, sphere: &SphereGrid, rel_tol: f64) -> Result<KWReport> {
    let e = boundary_power(sphere.dim())?;
    let pairings = killing_basis(sphere.dim())?
        .into_iter()
        .map(|x| Ok(Pairing { value: kw_pairing(k, v, &x, sphere)?, label: x.label }))
        .collect::<Result<Vec<_>>>()?;
    let max_abs = pairings.iter().map(|p| p.value.abs()).fold(0.0, f64::max);
    let tolerance = rel_tol * k.max_gradient(sphere) * v.integrate(sphere, |x| x.powf(e))?;
    Ok(KWReport { pairings, max_abs, tolerance, flag: max_abs > tolerance })
}
