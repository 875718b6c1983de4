use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{BoundaryField, SphereFunction};
use crate::geometry::{norm2, stereographic_lift, SphereGrid};

/// Radius of the chart disc on which rescaled profiles are sampled.
pub const PROFILE_RADIUS: f64 = 4.0;
/// Lattice spacing of the profile grid.
pub const PROFILE_STEP: f64 = 0.1;
/// Fits use profile samples with `|x'| ≤ FIT_RADIUS`.
pub const FIT_RADIUS: f64 = 2.0;
/// Fitted scales at or above this mark a non-concentrated profile.
pub const FLAT_SCALE: f64 = 1e2;

const SCALE_BOUNDS: (f64, f64) = (1e-3, 1e3);
const AMPLITUDE_BOUNDS: (f64, f64) = (1e-3, 1e3);

/// `x' ↦ (2/(1+|x'|²))^{(n-2)/2} f(F(x'))`, the chart representative of a
/// boundary function (chart origin at `e_n`).
pub fn chart_function<'a, F: SphereFunction + ?Sized>(n: usize, f: &'a F) -> impl Fn(&[f64]) -> f64 + 'a {
    let a = (n as f64 - 2.0) / 2.0;
    move |x: &[f64]| (2.0 / (1.0 + norm2(x))).powf(a) * f.eval(&stereographic_lift(x))
}

/// [`chart_function`] of a grid field, interpolated between nodes.
pub fn chart_of_field<'a>(v: &'a BoundaryField, grid: &'a SphereGrid) -> Result<impl Fn(&[f64]) -> f64 + 'a> {
    v.check(grid)?;
    let n = grid.dim();
    let a = (n as f64 - 2.0) / 2.0;
    Ok(move |x: &[f64]| {
        let u = grid.interpolate(v.values(), &stereographic_lift(x)).unwrap_or(f64::NAN);
        (2.0 / (1.0 + norm2(x))).powf(a) * u
    })
}

/// `φ(x') = u(0)^{-1} u(σx')` with `σ = u(0)^{p-(n+2)/(n-2)}`, sampled on the
/// lattice `PROFILE_STEP·ℤ^{n-1}` inside `|x'| ≤ PROFILE_RADIUS`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupProfile {
    /// Chart dimension `n - 1`.
    pub chart_dim: usize,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub center_value: f64,
    pub sigma: f64,
    /// `u(0) < 0.99 max u` over the sampled points.
    pub center_not_peak: bool,
}

impl BlowupProfile {
    pub fn dim(&self) -> usize {
        self.chart_dim + 1
    }

    /// Build a profile from samples already taken on some set of chart points.
    pub fn from_samples(points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        let chart_dim = points.first().map_or(0, |p| p.len());
        if !(1..=2).contains(&chart_dim) {
            return Err(Error::UnsupportedDimension(chart_dim + 1));
        }
        if points.len() != values.len() || points.iter().any(|p| p.len() != chart_dim) {
            return Err(Error::InvalidParameters("profile points and values do not match".into()));
        }
        Ok(BlowupProfile { chart_dim, points, values, center_value: 1.0, sigma: 1.0, center_not_peak: false })
    }
}

fn profile_lattice(chart_dim: usize) -> Vec<Vec<f64>> {
    let k = (PROFILE_RADIUS / PROFILE_STEP).round() as i64;
    let coords: Vec<f64> = (-k..=k).map(|i| i as f64 * PROFILE_STEP).collect();
    match chart_dim {
        1 => coords.iter().map(|&x| vec![x]).collect(),
        _ => coords
            .iter()
            .flat_map(|&x| coords.iter().map(move |&y| vec![x, y]))
            .filter(|p| norm2(p) <= PROFILE_RADIUS * PROFILE_RADIUS + 1e-12)
            .collect(),
    }
}

pub fn blowup_rescale<U: Fn(&[f64]) -> f64 + ?Sized>(u: &U, chart_dim: usize, p: f64) -> Result<BlowupProfile> {
    if !(1..=2).contains(&chart_dim) {
        return Err(Error::UnsupportedDimension(chart_dim + 1));
    }
    let n = (chart_dim + 1) as f64;
    let origin = vec![0.0; chart_dim];
    let u0 = u(&origin);
    if !(u0 > 0.0 && u0.is_finite()) {
        return Err(Error::NonPositiveField { index: 0, value: u0 });
    }
    let sigma = u0.powf(p - (n + 2.0) / (n - 2.0));
    let points = profile_lattice(chart_dim);
    let mut peak = u0;
    let values = points
        .iter()
        .map(|x| {
            if x.iter().all(|&c| c == 0.0) {
                return 1.0;
            }
            let y: Vec<f64> = x.iter().map(|c| sigma * c).collect();
            let uy = u(&y);
            peak = peak.max(uy);
            uy / u0
        })
        .collect();
    Ok(BlowupProfile { chart_dim, points, values, center_value: u0, sigma, center_not_peak: u0 < 0.99 * peak })
}

/// Best fit `a (1 + |x'|²/s²)^{-(n-2)/2}` to a profile on `|x'| ≤ FIT_RADIUS`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleFit {
    pub scale: f64,
    pub amplitude: f64,
    pub sup_distance: f64,
    pub non_concentrated: bool,
}

/// Least squares in `(a, s)`: for fixed `s` the optimal `a` is linear, and the
/// remaining one-dimensional problem in `log s` is solved by a bracketed scan
/// followed by golden-section refinement.
pub fn bubble_distance(profile: &BlowupProfile) -> Result<BubbleFit> {
    let e = (profile.dim() as f64 - 2.0) / 2.0;
    let (r2, f): (Vec<f64>, Vec<f64>) = profile
        .points
        .iter()
        .zip(&profile.values)
        .filter(|(x, _)| norm2(x) <= FIT_RADIUS * FIT_RADIUS + 1e-12)
        .map(|(x, &v)| (norm2(x), v))
        .unzip();
    if f.is_empty() || f.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameters("profile has no finite samples in the fit disc".into()));
    }
    let basis = |s: f64| -> Vec<f64> { r2.iter().map(|&r| (1.0 + r / (s * s)).powf(-e)).collect() };
    let solve = |t: f64| -> (f64, f64) {
        let g = basis(t.exp());
        let gg: f64 = g.iter().map(|x| x * x).sum();
        let a = g.iter().zip(&f).map(|(x, y)| x * y).sum::<f64>() / gg;
        let sse = g.iter().zip(&f).map(|(x, y)| (a * x - y).powi(2)).sum();
        (a, sse)
    };
    let (lo, hi) = (SCALE_BOUNDS.0.ln(), SCALE_BOUNDS.1.ln());
    let steps = 240;
    let h = (hi - lo) / steps as f64;
    let best = (0..=steps)
        .map(|k| lo + k as f64 * h)
        .min_by(|&x, &y| solve(x).1.total_cmp(&solve(y).1))
        .unwrap_or(lo);
    let (mut a, mut b) = ((best - h).max(lo), (best + h).min(hi));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (solve(c).1, solve(d).1);
    while b - a > 1e-13 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = solve(c).1;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = solve(d).1;
        }
    }
    let t = 0.5 * (a + b);
    let scale = t.exp();
    let (amplitude, _) = solve(t);
    if !(amplitude >= AMPLITUDE_BOUNDS.0 && amplitude <= AMPLITUDE_BOUNDS.1) {
        return Err(Error::FitFailure { amplitude, scale });
    }
    let sup_distance = basis(scale).iter().zip(&f).map(|(g, y)| (amplitude * g - y).abs()).fold(0.0, f64::max);
    Ok(BubbleFit { scale, amplitude, sup_distance, non_concentrated: scale >= FLAT_SCALE })
}
