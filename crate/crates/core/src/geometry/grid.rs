//! Antipodally closed quadrature grids on the unit sphere and ball.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::gauss::{gauss_legendre, gauss_legendre_on};
use crate::geometry::{ball_volume, sphere_area};

/// Identity of a node set, used to reject fields sampled on another grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridTag {
    pub n: usize,
    pub len: usize,
    pub id: u64,
}

fn mix(mut h: u64, x: u64) -> u64 {
    h ^= x.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(h << 6).wrapping_add(h >> 2);
    h
}

fn content_id(nodes: &[f64], weights: &[f64]) -> u64 {
    nodes
        .iter()
        .chain(weights)
        .fold(0xcbf2_9ce4_8422_2325, |h, v| mix(h, v.to_bits()))
}

/// Quadrature on the unit sphere `∂B₁ ⊂ ℝⁿ`.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    n: usize,
    resolution: Option<usize>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    antipode: Vec<usize>,
    tag: GridTag,
}

/// Sphere grid for `n ∈ {2, 3}`.
///
/// `n = 2`: `resolution` equally spaced angles at half-step offsets.
/// `n = 3`: Gauss–Legendre in the polar cosine (`resolution` latitudes) times
/// `2·resolution` equally spaced azimuths.
pub fn make_sphere_grid(n: usize, resolution: usize) -> Result<SphereGrid> {
    if !(2..=3).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    if resolution < 4 || resolution % 2 != 0 {
        return Err(Error::InvalidResolution(resolution));
    }
    let (nodes, weights, antipode) = if n == 2 {
        circle_nodes(resolution)
    } else {
        s2_nodes(resolution)
    };
    let id = mix(mix(0x5151, n as u64), resolution as u64);
    let tag = GridTag { n, len: weights.len(), id };
    Ok(SphereGrid { n, resolution: Some(resolution), nodes, weights, antipode, tag })
}

fn circle_nodes(m: usize) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let half = m / 2;
    let mut nodes = vec![0.0; 2 * m];
    for j in 0..half {
        let t = 2.0 * PI * (j as f64 + 0.5) / m as f64;
        let (s, c) = t.sin_cos();
        nodes[2 * j] = c;
        nodes[2 * j + 1] = s;
        nodes[2 * (j + half)] = -c;
        nodes[2 * (j + half) + 1] = -s;
    }
    let weights = vec![2.0 * PI / m as f64; m];
    let antipode = (0..m).map(|j| (j + half) % m).collect();
    (nodes, weights, antipode)
}

fn s2_nodes(m: usize) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let (z, a) = gauss_legendre(m);
    let naz = 2 * m;
    let count = m * naz;
    let mut nodes = vec![0.0; 3 * count];
    let mut weights = vec![0.0; count];
    let mut antipode = vec![0; count];
    let dphi = 2.0 * PI / naz as f64;
    for k in 0..m {
        let st = (1.0 - z[k] * z[k]).sqrt();
        for j in 0..naz {
            let idx = k * naz + j;
            let anti = (m - 1 - k) * naz + (j + m) % naz;
            antipode[idx] = anti;
            weights[idx] = a[k] * dphi;
            if k < m / 2 {
                let (s, c) = ((j as f64 + 0.5) * dphi).sin_cos();
                let p = [st * c, st * s, z[k]];
                nodes[3 * idx..3 * idx + 3].copy_from_slice(&p);
                nodes[3 * anti..3 * anti + 3].copy_from_slice(&[-p[0], -p[1], -p[2]]);
            }
        }
    }
    (nodes, weights, antipode)
}

impl SphereGrid {
    /// Builds a grid from an explicit node table, pairing antipodes by search.
    pub fn from_nodes(n: usize, nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if !(2..=3).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        let len = weights.len();
        if nodes.len() != n * len || len == 0 {
            return Err(Error::GridCsv(format!("{} coordinates for {len} weights", nodes.len())));
        }
        for (i, p) in nodes.chunks_exact(n).enumerate() {
            let r = norm(p);
            if !r.is_finite() || (r - 1.0).abs() > 1e-12 {
                return Err(Error::GridCsv(format!("node {i} has norm {r}")));
            }
        }
        if let Some((i, &w)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::GridCsv(format!("weight {i} = {w} is not positive")));
        }
        let antipode = pair_antipodes(n, &nodes, &weights)?;
        let tag = GridTag { n, len, id: content_id(&nodes, &weights) };
        Ok(SphereGrid { n, resolution: None, nodes, weights, antipode, tag })
    }

    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn resolution(&self) -> Option<usize> {
        self.resolution
    }
    pub fn len(&self) -> usize {
        self.weights.len()
    }
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[self.n * i..self.n * (i + 1)]
    }
    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.nodes.chunks_exact(self.n)
    }
    pub fn flat_nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn antipode(&self) -> &[usize] {
        &self.antipode
    }
    pub fn tag(&self) -> GridTag {
        self.tag
    }

    /// Highest total polynomial degree integrated exactly (product rules only).
    pub fn design_order(&self) -> Option<usize> {
        self.resolution.map(|m| if self.n == 2 { m - 1 } else { 2 * m - 1 })
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.nodes().zip(&self.weights).map(|(p, &w)| w * f(p)).sum()
    }

    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        self.nodes().map(f).collect()
    }

    /// Piecewise-linear interpolation of nodal `values` at `xi`: linear in
    /// the angle for `n = 2`; linear in azimuth and polar cosine for `n = 3`,
    /// held constant beyond the outermost latitudes. Only available for
    /// grids built by [`make_sphere_grid`].
    pub fn interpolate(&self, values: &[f64], xi: &[f64]) -> Result<f64> {
        let m = self.resolution.ok_or_else(|| {
            Error::GridMismatch("interpolation needs a grid built by make_sphere_grid".into())
        })?;
        if values.len() != self.len() {
            return Err(Error::GridMismatch(format!("{} values for {} nodes", values.len(), self.len())));
        }
        let lerp = |a: f64, b: f64, t: f64| a + t * (b - a);
        let az = |x: f64, y: f64, count: usize| {
            let phi = y.atan2(x).rem_euclid(2.0 * PI);
            let u = phi / (2.0 * PI / count as f64) - 0.5;
            let j0 = u.floor();
            let t = u - j0;
            let j0 = (j0 as i64).rem_euclid(count as i64) as usize;
            (j0, (j0 + 1) % count, t)
        };
        if self.n == 2 {
            let (j0, j1, t) = az(xi[0], xi[1], m);
            return Ok(lerp(values[j0], values[j1], t));
        }
        let naz = 2 * m;
        let zs: Vec<f64> = (0..m).map(|k| self.node(k * naz)[2]).collect();
        let (j0, j1, t) = az(xi[0], xi[1], naz);
        let row = |k: usize| lerp(values[k * naz + j0], values[k * naz + j1], t);
        let z = xi[2];
        if z <= zs[0] {
            return Ok(row(0));
        }
        if z >= zs[m - 1] {
            return Ok(row(m - 1));
        }
        let k = zs.partition_point(|&zk| zk <= z) - 1;
        let s = (z - zs[k]) / (zs[k + 1] - zs[k]);
        Ok(lerp(row(k), row(k + 1), s))
    }
}

/// Quadrature on the open unit ball, built shell by shell from a sphere grid.
#[derive(Debug, Clone)]
pub struct BallGrid {
    n: usize,
    sphere: SphereGrid,
    radii: Vec<f64>,
    radial_weights: Vec<f64>,
    grading: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    tag: GridTag,
}

fn graded_radius(u: f64, grading: f64) -> (f64, f64) {
    let m = grading.floor();
    let f = grading - m;
    let um = u.powi(m as i32);
    let r = 1.0 - um * ((1.0 - f) + f * u);
    let dr = m * u.powi(m as i32 - 1) * (1.0 - f) + (m + 1.0) * f * um;
    (r, dr)
}

/// Ball grid with `radial_order` shells on the sphere grid `sphere`.
///
/// Shell radii are `r = 1 - u^m ((1 - f) + f u)` with `u = 1 - s` for Gauss
/// nodes `s` on `[0, 1]`, where `m = ⌊grading⌋` and `f` is the fractional
/// part; for integer grading this is `1 - (1 - s)^grading`. `grading > 1`
/// pushes shells toward `|ξ| = 1`. The map is polynomial in `s`, so the
/// `r^{n-1}` and `dr/ds` Jacobians keep the total measure exact.
pub fn make_ball_grid(sphere: &SphereGrid, radial_order: usize, grading: f64) -> Result<BallGrid> {
    if radial_order < 4 {
        return Err(Error::InvalidOrder(radial_order));
    }
    if !(grading.is_finite() && grading >= 1.0) {
        return Err(Error::InvalidGrading(grading));
    }
    let n = sphere.dim();
    let (s, a) = gauss_legendre_on(radial_order, 0.0, 1.0);
    let mut radii = Vec::with_capacity(radial_order);
    let mut radial_weights = Vec::with_capacity(radial_order);
    for (&sk, &ak) in s.iter().zip(&a) {
        let u = 1.0 - sk;
        let (r, dr) = graded_radius(u, grading);
        radii.push(r);
        radial_weights.push(ak * dr * r.powi(n as i32 - 1));
    }
    let m = sphere.len();
    let mut nodes = Vec::with_capacity(n * m * radial_order);
    let mut weights = Vec::with_capacity(m * radial_order);
    for (&r, &rw) in radii.iter().zip(&radial_weights) {
        for (p, &w) in sphere.nodes().zip(sphere.weights()) {
            nodes.extend(p.iter().map(|x| r * x));
            weights.push(rw * w);
        }
    }
    let id = mix(mix(mix(sphere.tag.id, 0xba11), radial_order as u64), grading.to_bits());
    let tag = GridTag { n, len: weights.len(), id };
    Ok(BallGrid {
        n,
        sphere: sphere.clone(),
        radii,
        radial_weights,
        grading,
        nodes,
        weights,
        tag,
    })
}

impl BallGrid {
    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn len(&self) -> usize {
        self.weights.len()
    }
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
    pub fn sphere(&self) -> &SphereGrid {
        &self.sphere
    }
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }
    pub fn radial_weights(&self) -> &[f64] {
        &self.radial_weights
    }
    pub fn grading(&self) -> f64 {
        self.grading
    }
    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[self.n * i..self.n * (i + 1)]
    }
    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.nodes.chunks_exact(self.n)
    }
    pub fn flat_nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn tag(&self) -> GridTag {
        self.tag
    }
    /// Shell index and sphere-node index of a ball node.
    pub fn shell_of(&self, i: usize) -> (usize, usize) {
        (i / self.sphere.len(), i % self.sphere.len())
    }
    /// Ball-node index of the antipode of node `i`.
    pub fn antipode(&self, i: usize) -> usize {
        let (k, j) = self.shell_of(i);
        k * self.sphere.len() + self.sphere.antipode()[j]
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.nodes().zip(&self.weights).map(|(p, &w)| w * f(p)).sum()
    }
}

fn pair_antipodes(n: usize, nodes: &[f64], weights: &[f64]) -> Result<Vec<usize>> {
    let len = weights.len();
    let mut order: Vec<usize> = (0..len).collect();
    order.sort_by(|&a, &b| nodes[n * a].total_cmp(&nodes[n * b]));
    let firsts: Vec<f64> = order.iter().map(|&i| nodes[n * i]).collect();
    let mut antipode = vec![usize::MAX; len];
    for i in 0..len {
        let p = &nodes[n * i..n * i + n];
        let target = -p[0];
        let start = firsts.partition_point(|&x| x < target - 1e-12);
        let found = order[start..]
            .iter()
            .take_while(|&&j| nodes[n * j] <= target + 1e-12)
            .find(|&&j| {
                j != i
                    && (0..n).all(|c| (nodes[n * j + c] + p[c]).abs() <= 1e-12)
                    && (weights[j] - weights[i]).abs() <= 1e-12 * weights[i]
            });
        match found {
            Some(&j) => antipode[i] = j,
            None => return Err(Error::GridCsv(format!("node {i} has no antipodal partner"))),
        }
    }
    if (0..len).any(|i| antipode[antipode[i]] != i) {
        return Err(Error::GridCsv("antipodal pairing is not an involution".into()));
    }
    Ok(antipode)
}

pub(crate) fn norm(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Total weight a sphere grid of dimension `n` should carry.
pub fn expected_sphere_weight(n: usize) -> f64 {
    sphere_area(n)
}

/// Total weight a ball grid of dimension `n` should carry.
pub fn expected_ball_weight(n: usize) -> f64 {
    ball_volume(n)
}
