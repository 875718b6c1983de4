//! Gauss–Legendre rules.
//!
//! Nodes are roots of the Legendre polynomial `P_m`, found by Newton iteration
//! from the Tricomi initial guess. The returned rule is mirrored so that
//! `x[m-1-k] == -x[k]` holds bitwise, which the antipodal grids rely on.

use std::f64::consts::PI;

/// Nodes and weights on `[-1, 1]`, ordered increasingly.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "gauss_legendre needs at least one node");
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let half = m.div_ceil(2);
    for i in 0..half {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, z);
        dp = if d.is_finite() { d } else { dp };
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        // z is the i-th largest root
        x[m - 1 - i] = z;
        x[i] = -z;
        w[m - 1 - i] = weight;
        w[i] = weight;
    }
    if m % 2 == 1 {
        x[m / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(m: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let (p, pm1) = if m == 1 { (z, 1.0) } else { (p1, p0) };
    let d = m as f64 * (z * p - pm1) / (z * z - 1.0);
    (p, d)
}

/// Gauss–Legendre rule mapped affinely onto `[a, b]`.
pub fn gauss_legendre_on(m: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(m);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|&t| mid + half * t).collect(),
        w.iter().map(|&t| half * t).collect(),
    )
}

/// Composite rule: `m` Gauss points on each consecutive panel of `edges`.
pub fn composite(edges: &[f64], m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(m * edges.len().saturating_sub(1));
    let mut ws = Vec::with_capacity(xs.capacity());
    for pair in edges.windows(2) {
        let (x, w) = gauss_legendre_on(m, pair[0], pair[1]);
        xs.extend(x);
        ws.extend(w);
    }
    (xs, ws)
}

/// Panel edges on `[0, top]` refined geometrically toward 0 around `scale`:
/// `0, scale/2^levels, ..., scale, 2 scale, 4 scale, ...` clipped to `top`.
pub fn geometric_edges(scale: f64, top: f64, levels_below: usize, ratio: f64) -> Vec<f64> {
    let mut edges = vec![0.0];
    let mut e = scale / ratio.powi(levels_below as i32);
    while e < top {
        edges.push(e);
        e *= ratio;
    }
    edges.push(top);
    edges
}
