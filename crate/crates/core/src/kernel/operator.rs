use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ball_kernel;
use crate::error::{Error, Result};
use crate::field::{BoundaryField, InteriorField};
use crate::geometry::{check_dim, BallGrid, SphereGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OperatorMode {
    #[default]
    MatrixFree,
    Cached,
}

/// How the raw quadrature entries `P(η_j, ξ_i) w_j` are adjusted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    None,
    /// Every row sums to 1, so constants extend exactly.
    #[default]
    Rows,
    /// Rows sum to 1 and `P*1 = 1/n` at every boundary node (Sinkhorn
    /// scaling), so constants are exact critical points of the discrete
    /// energies.
    Balanced,
    /// As `Balanced`, and every row also reproduces linear functions,
    /// `Σ_j M_ij η_j = ξ_i`. Rows are exponentially tilted,
    /// `M_ij ∝ P_ij w_j b_j e^{μ_i·η_j}`, so entries stay positive. Linear
    /// functions are the infinitesimal conformal directions at the constant,
    /// so the discrete trace and Carleman functionals are exactly flat along
    /// them to second order.
    Moments,
}

/// Bytes a cached operator may occupy unless configured otherwise.
pub const DEFAULT_MEMORY_BUDGET: usize = 512 * 1024 * 1024;

#[derive(Debug, Clone, Copy)]
pub struct OperatorOptions {
    pub mode: OperatorMode,
    pub normalization: Normalization,
    pub memory_budget: usize,
}

impl Default for OperatorOptions {
    fn default() -> Self {
        OperatorOptions { mode: OperatorMode::MatrixFree, normalization: Normalization::Rows, memory_budget: DEFAULT_MEMORY_BUDGET }
    }
}

impl OperatorOptions {
    pub fn new(mode: OperatorMode, normalization: Normalization) -> Self {
        OperatorOptions { mode, normalization, ..Default::default() }
    }
}

/// Discrete Poisson extension with entries
/// `M_ij = P(η_j, ξ_i) w_j b_j exp(μ_i·η_j - L_i)`; the column scales `b`,
/// tilts `μ` and row log-normalizers `L` are fixed by the [`Normalization`]
/// (`μ = 0` except under `Moments`).
#[derive(Debug, Clone)]
pub struct PoissonOperator {
    source: SphereGrid,
    target: BallGrid,
    options: OperatorOptions,
    log_norm: Vec<f64>,
    col_scale: Vec<f64>,
    tilt: Option<Vec<f64>>,
    raw_row_sums: Vec<f64>,
    cache: Option<Vec<f64>>,
}

pub fn build_operator(
    sphere: &SphereGrid,
    ball: &BallGrid,
    mode: OperatorMode,
    row_normalized: bool,
) -> Result<PoissonOperator> {
    let normalization = if row_normalized { Normalization::Rows } else { Normalization::None };
    PoissonOperator::build(sphere, ball, OperatorOptions::new(mode, normalization))
}

const COLUMN_BLOCK: usize = 64;
const ROW_BLOCK: usize = 256;
const MAX_SCALING_SWEEPS: usize = 500;
const SCALING_TOLERANCE: f64 = 1e-15;
const MAX_NEWTON: usize = 100;
const TILT_TOLERANCE: f64 = 2e-16;
const TILT_FLOOR: f64 = 1e-13;
const MAX_TILT_STEP: f64 = 20.0;
const ANDERSON_DEPTH: usize = 5;
const STAGNATION_SWEEPS: usize = 8;

fn raw_row(sphere: &SphereGrid, xi: &[f64], out: &mut [f64]) {
    let n = sphere.dim();
    for ((o, eta), &w) in out.iter_mut().zip(sphere.flat_nodes().chunks_exact(n)).zip(sphere.weights()) {
        *o = ball_kernel(eta, xi, n) * w;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Tilted weights `p_j ∝ exp(logs_j + μ·η_j)` written to `p`; returns
/// `(log Z, mean, covariance)`.
fn tilt_eval(logs: &[f64], nodes: &[f64], mu: &[f64], p: &mut [f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let n = mu.len();
    let mut smax = f64::MIN;
    for ((pj, l), eta) in p.iter_mut().zip(logs).zip(nodes.chunks_exact(n)) {
        *pj = l + dot(eta, mu);
        smax = smax.max(*pj);
    }
    let mut z = 0.0;
    for pj in p.iter_mut() {
        *pj = (*pj - smax).exp();
        z += *pj;
    }
    let mut mean = vec![0.0; n];
    for (pj, eta) in p.iter_mut().zip(nodes.chunks_exact(n)) {
        *pj /= z;
        for a in 0..n {
            mean[a] += *pj * eta[a];
        }
    }
    // centred, so rows close to a point mass keep a meaningful covariance
    let mut cov = vec![0.0; n * n];
    let mut d = vec![0.0; n];
    for (pj, eta) in p.iter().zip(nodes.chunks_exact(n)) {
        for a in 0..n {
            d[a] = eta[a] - mean[a];
            for b in 0..=a {
                cov[a * n + b] += pj * d[a] * d[b];
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            cov[b * n + a] = cov[a * n + b];
        }
    }
    (smax + z.ln(), mean, cov)
}

/// Solve `Σ_j p_j η_j = ξ` for `p_j ∝ exp(logs_j + μ·η_j)` by damped Newton
/// on the convex dual `log Z(μ) - μ·ξ`, starting from the given `μ`. On return
/// `p` holds the weights at the final `μ`; the log-normalizer is returned.
fn tilt_row(logs: &[f64], nodes: &[f64], xi: &[f64], mu: &mut [f64], p: &mut [f64]) -> f64 {
    let n = xi.len();
    let (mut lz, mut mean, mut cov) = tilt_eval(logs, nodes, mu, p);
    let mut last = f64::MAX;
    for _ in 0..MAX_NEWTON {
        let g: Vec<f64> = mean.iter().zip(xi).map(|(m, x)| m - x).collect();
        let gmax = g.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if gmax <= TILT_TOLERANCE || (gmax >= last && gmax <= TILT_FLOOR) {
            break;
        }
        last = gmax;
        let step = capped_step(solve_spd(&cov, &g, n), &g, gmax);
        let f0 = lz - dot(xi, mu);
        let slope = -dot(&g, &step);
        let flat = -slope <= 64.0 * f64::EPSILON * (1.0 + f0.abs());
        let mut t = 1.0;
        let mut accepted = None;
        // near the roundoff floor only the full step is tried
        let t_min = if gmax <= TILT_FLOOR { 0.5 } else { 1e-10 };
        while t > t_min {
            let trial: Vec<f64> = mu.iter().zip(&step).map(|(m, s)| m - t * s).collect();
            let eval = tilt_eval(logs, nodes, &trial, p);
            // f64::max drops NaN, so non-finite trials are rejected explicitly
            if !(eval.0.is_finite() && eval.1.iter().all(|m| m.is_finite())) {
                t *= 0.5;
                continue;
            }
            let gnew = eval.1.iter().zip(xi).fold(0.0f64, |a, (m, x)| a.max((m - x).abs()));
            // descent on the dual; the gradient test decides once the predicted
            // decrease is below the roundoff of the dual value
            if eval.0 - dot(xi, &trial) <= f0 + 1e-4 * t * slope || (flat && gnew < gmax) {
                accepted = Some((trial, eval));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, eval)) => {
                mu.copy_from_slice(&trial);
                (lz, mean, cov) = eval;
            }
            None => {
                lz = tilt_eval(logs, nodes, mu, p).0;
                break;
            }
        }
    }
    lz
}

/// Rows that are numerically a point mass have a zero covariance; their
/// Newton step is limited to `MAX_TILT_STEP` and falls back to the gradient.
fn capped_step(step: Vec<f64>, g: &[f64], gmax: f64) -> Vec<f64> {
    let size = step.iter().fold(0.0f64, |a, x| if x.is_finite() { a.max(x.abs()) } else { f64::INFINITY });
    if size.is_finite() && size <= MAX_TILT_STEP {
        step
    } else if size.is_finite() {
        step.iter().map(|x| x * MAX_TILT_STEP / size).collect()
    } else {
        g.iter().map(|x| x * MAX_TILT_STEP / gmax).collect()
    }
}

fn solve_spd(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let scale = (0..n).map(|i| a[i * n + i]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut m: Vec<f64> = a.to_vec();
    for i in 0..n {
        m[i * n + i] += 1e-14 * scale;
    }
    let mut x = b.to_vec();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| m[i * n + c].abs().total_cmp(&m[j * n + c].abs())).unwrap_or(c);
        if piv != c {
            for k in 0..n {
                m.swap(c * n + k, piv * n + k);
            }
            x.swap(c, piv);
        }
        let d = m[c * n + c];
        for r in c + 1..n {
            let f = m[r * n + c] / d;
            for k in c..n {
                m[r * n + k] -= f * m[c * n + k];
            }
            x[r] -= f * x[c];
        }
    }
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|k| m[c * n + k] * x[k]).sum();
        x[c] = (x[c] - s) / m[c * n + c];
    }
    x
}

struct Scaling {
    log_norm: Vec<f64>,
    col_scale: Vec<f64>,
    tilt: Option<Vec<f64>>,
}

/// One pass over all rows with fixed log column scales: normalize (and tilt)
/// every row, and return `Σ_i W_i M_ij / b_j` for the next column update.
/// `log_raw` is the cached `ln(P_ij w_j)` when available. Partial column sums
/// are formed per fixed block of rows and added in block order, so the result
/// does not depend on the thread count.
fn row_pass(
    sphere: &SphereGrid,
    ball: &BallGrid,
    log_raw: Option<&[f64]>,
    log_b: &[f64],
    tilt: Option<&mut Vec<f64>>,
    log_norm: &mut [f64],
) -> Vec<f64> {
    let n = sphere.dim();
    let m = sphere.len();
    let nodes = sphere.flat_nodes();
    let tilted = tilt.is_some();
    let mut none = Vec::new();
    let mu_all = tilt.unwrap_or(&mut none);
    let blocks: Vec<(usize, &mut [f64], &mut [f64])> = if tilted {
        log_norm
            .chunks_mut(ROW_BLOCK)
            .zip(mu_all.chunks_mut(ROW_BLOCK * n))
            .enumerate()
            .map(|(k, (l, mu))| (k, l, mu))
            .collect()
    } else {
        log_norm.chunks_mut(ROW_BLOCK).enumerate().map(|(k, l)| (k, l, &mut [][..])).collect()
    };
    let partials: Vec<Vec<f64>> = blocks
        .into_par_iter()
        .map(|(blk, lnorm, mus)| {
            let mut acc = vec![0.0; m];
            let mut logs = vec![0.0; m];
            let mut p = vec![0.0; m];
            let zero = vec![0.0; n];
            for (k, ln) in lnorm.iter_mut().enumerate() {
                let i = blk * ROW_BLOCK + k;
                let xi = ball.node(i);
                match log_raw {
                    Some(c) => logs.copy_from_slice(&c[i * m..(i + 1) * m]),
                    None => {
                        raw_row(sphere, xi, &mut logs);
                        logs.iter_mut().for_each(|l| *l = l.ln());
                    }
                }
                logs.iter_mut().zip(log_b).for_each(|(l, b)| *l += b);
                *ln = if tilted {
                    tilt_row(&logs, nodes, xi, &mut mus[k * n..(k + 1) * n], &mut p)
                } else {
                    tilt_eval(&logs, nodes, &zero, &mut p).0
                };
                let w = ball.weights()[i];
                for ((a, pj), b) in acc.iter_mut().zip(&p).zip(log_b) {
                    *a += w * pj * (-b).exp();
                }
            }
            acc
        })
        .collect();
    let mut cols = vec![0.0; m];
    for p in &partials {
        cols.iter_mut().zip(p).for_each(|(c, x)| *c += x);
    }
    cols
}

/// Fixed-point solve of `x = log(w/(n c(x)))` for the log column scales, with
/// Anderson mixing over the last `ANDERSON_DEPTH` iterates.
fn balance_columns(
    sphere: &SphereGrid,
    ball: &BallGrid,
    log_raw: Option<&[f64]>,
    mut tilt: Option<Vec<f64>>,
) -> Scaling {
    let n = sphere.dim();
    let m = sphere.len();
    let log_target: Vec<f64> = sphere.weights().iter().map(|w| (w / n as f64).ln()).collect();
    let mut log_norm = vec![0.0; ball.len()];
    let mut x = vec![0.0; m];
    let mut hist: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let (mut best, mut since_best) = (f64::MAX, 0);
    for _ in 0..MAX_SCALING_SWEEPS {
        let cols = row_pass(sphere, ball, log_raw, &x, tilt.as_mut(), &mut log_norm);
        // G(x) = x + f, f = log(target) - log(col sums of M)
        let f: Vec<f64> = log_target.iter().zip(&cols).zip(&x).map(|((t, c), xj)| t - c.ln() - xj).collect();
        let change = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if change < best {
            best = change;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if change < SCALING_TOLERANCE || since_best >= STAGNATION_SWEEPS {
            break;
        }
        let g: Vec<f64> = x.iter().zip(&f).map(|(a, b)| a + b).collect();
        if let Some((pf, pg)) = prev.take() {
            let df: Vec<f64> = f.iter().zip(&pf).map(|(a, b)| a - b).collect();
            let dg: Vec<f64> = g.iter().zip(&pg).map(|(a, b)| a - b).collect();
            hist.push((df, dg));
            if hist.len() > ANDERSON_DEPTH {
                hist.remove(0);
            }
        }
        prev = Some((f.clone(), g.clone()));
        let k = hist.len();
        let mut next = g;
        if k > 0 {
            let mut a = vec![0.0; k * k];
            let mut rhs = vec![0.0; k];
            for r in 0..k {
                rhs[r] = dot(&hist[r].0, &f);
                for c in 0..k {
                    a[r * k + c] = dot(&hist[r].0, &hist[c].0);
                }
            }
            let gamma = solve_spd(&a, &rhs, k);
            if gamma.iter().all(|v| v.is_finite()) {
                for (gm, (_, dg)) in gamma.iter().zip(&hist) {
                    next.iter_mut().zip(dg).for_each(|(v, d)| *v -= gm * d);
                }
            }
        }
        x = next;
    }
    row_pass(sphere, ball, log_raw, &x, tilt.as_mut(), &mut log_norm);
    Scaling { log_norm, col_scale: x.iter().map(|v| v.exp()).collect(), tilt }
}

impl PoissonOperator {
    fn log_domain(&self) -> bool {
        matches!(self.options.normalization, Normalization::Balanced | Normalization::Moments)
    }

    pub fn build(sphere: &SphereGrid, ball: &BallGrid, options: OperatorOptions) -> Result<Self> {
        check_dim(sphere.dim(), ball.dim())?;
        let n = sphere.dim();
        let m = sphere.len();
        if options.mode == OperatorMode::Cached {
            let needed = m.saturating_mul(ball.len()).saturating_mul(std::mem::size_of::<f64>());
            if needed > options.memory_budget {
                return Err(Error::MemoryBudgetExceeded { needed, budget: options.memory_budget });
            }
        }
        let mut raw = match options.mode {
            OperatorMode::MatrixFree => None,
            OperatorMode::Cached => {
                let mut entries = vec![0.0; m * ball.len()];
                entries
                    .par_chunks_exact_mut(m)
                    .zip(ball.flat_nodes().par_chunks_exact(n))
                    .for_each(|(row, xi)| raw_row(sphere, xi, row));
                Some(entries)
            }
        };
        let raw_row_sums: Vec<f64> = match &raw {
            Some(c) => c.par_chunks_exact(m).map(|r| r.iter().sum()).collect(),
            None => ball
                .flat_nodes()
                .par_chunks_exact(n)
                .map(|xi| {
                    let mut row = vec![0.0; m];
                    raw_row(sphere, xi, &mut row);
                    row.iter().sum()
                })
                .collect(),
        };
        let nb = ball.len();
        let scaling = match options.normalization {
            Normalization::None => Scaling { log_norm: vec![0.0; nb], col_scale: vec![1.0; m], tilt: None },
            Normalization::Rows => {
                Scaling { log_norm: raw_row_sums.iter().map(|s| s.ln()).collect(), col_scale: vec![1.0; m], tilt: None }
            }
            Normalization::Balanced | Normalization::Moments => {
                if let Some(c) = raw.as_mut() {
                    c.par_iter_mut().for_each(|e| *e = e.ln());
                }
                let tilt = (options.normalization == Normalization::Moments).then(|| vec![0.0; nb * n]);
                balance_columns(sphere, ball, raw.as_deref(), tilt)
            }
        };
        let log_domain = matches!(options.normalization, Normalization::Balanced | Normalization::Moments);
        if let Some(c) = raw.as_mut() {
            let nodes = sphere.flat_nodes();
            let log_b: Vec<f64> = scaling.col_scale.iter().map(|b| b.ln()).collect();
            c.par_chunks_exact_mut(m).enumerate().for_each(|(i, row)| {
                let ln = scaling.log_norm[i];
                if log_domain {
                    let mu = scaling.tilt.as_ref().map(|t| &t[i * n..(i + 1) * n]);
                    for ((e, lb), eta) in row.iter_mut().zip(&log_b).zip(nodes.chunks_exact(n)) {
                        let s = mu.map_or(0.0, |mu| dot(eta, mu));
                        *e = (*e + lb + s - ln).exp();
                    }
                } else {
                    let a = (-ln).exp();
                    row.iter_mut().zip(&scaling.col_scale).for_each(|(e, &bj)| *e *= a * bj);
                }
            });
        }
        Ok(PoissonOperator {
            source: sphere.clone(),
            target: ball.clone(),
            options,
            log_norm: scaling.log_norm,
            col_scale: scaling.col_scale,
            tilt: scaling.tilt,
            raw_row_sums,
            cache: raw,
        })
    }

    pub fn source(&self) -> &SphereGrid {
        &self.source
    }
    pub fn target(&self) -> &BallGrid {
        &self.target
    }
    pub fn dim(&self) -> usize {
        self.source.dim()
    }
    pub fn mode(&self) -> OperatorMode {
        self.options.mode
    }
    pub fn normalization(&self) -> Normalization {
        self.options.normalization
    }
    pub fn row_normalized(&self) -> bool {
        self.options.normalization != Normalization::None
    }
    /// Quadrature of `∫_{∂B₁} P(η, ξ_i) ds_η` at each target node, before normalization.
    pub fn raw_row_sums(&self) -> &[f64] {
        &self.raw_row_sums
    }

    /// Matrix entry `M_ij`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let m = self.source.len();
        if let Some(c) = &self.cache {
            return c[i * m + j];
        }
        let n = self.dim();
        let eta = &self.source.flat_nodes()[j * n..(j + 1) * n];
        let base = ball_kernel(eta, self.target.node(i), n) * self.source.weights()[j] * self.col_scale[j];
        if self.log_domain() {
            let s = self.tilt.as_ref().map_or(0.0, |t| dot(eta, &t[i * n..(i + 1) * n]));
            (base.ln() + s - self.log_norm[i]).exp()
        } else {
            base * (-self.log_norm[i]).exp()
        }
    }

    fn fill_row(&self, i: usize, row: &mut [f64]) {
        let m = self.source.len();
        if let Some(c) = &self.cache {
            row.copy_from_slice(&c[i * m..(i + 1) * m]);
            return;
        }
        let n = self.dim();
        raw_row(&self.source, self.target.node(i), row);
        let ln = self.log_norm[i];
        if self.log_domain() {
            let mu = self.tilt.as_ref().map(|t| &t[i * n..(i + 1) * n]);
            for ((e, &bj), eta) in row.iter_mut().zip(&self.col_scale).zip(self.source.flat_nodes().chunks_exact(n)) {
                let s = mu.map_or(0.0, |mu| dot(eta, mu));
                *e = ((*e * bj).ln() + s - ln).exp();
            }
        } else {
            let a = (-ln).exp();
            row.iter_mut().zip(&self.col_scale).for_each(|(e, &bj)| *e *= a * bj);
        }
    }

    /// Discrete `Pv` on the target grid.
    pub fn extend(&self, v: &BoundaryField) -> Result<InteriorField> {
        v.check(&self.source)?;
        let vals = v.values();
        let m = self.source.len();
        let out: Vec<f64> = match &self.cache {
            Some(c) => c.par_chunks_exact(m).map(|row| row.iter().zip(vals).map(|(a, b)| a * b).sum()).collect(),
            None => (0..self.target.len())
                .into_par_iter()
                .map_init(
                    || vec![0.0; m],
                    |row, i| {
                        self.fill_row(i, row);
                        row.iter().zip(vals).map(|(a, b)| a * b).sum()
                    },
                )
                .collect(),
        };
        InteriorField::from_values(&self.target, out)
    }

    /// `η_j ↦ Σ_i M_ij W_i U_i / w_j`, so that `⟨Pv, U⟩_ball = ⟨v, P*U⟩_sphere`.
    ///
    /// Contributions are summed over fixed blocks of interior nodes in index
    /// order and the block sums are added in block order, so the result does
    /// not depend on the thread count.
    pub fn adjoint_apply(&self, u: &InteriorField) -> Result<BoundaryField> {
        u.check(&self.target)?;
        let weighted: Vec<f64> = u.values().iter().zip(self.target.weights()).map(|(a, b)| a * b).collect();
        let m = self.source.len();
        let mut out = vec![0.0; m];
        match &self.cache {
            Some(c) => {
                out.par_chunks_mut(COLUMN_BLOCK).enumerate().for_each(|(blk, chunk)| {
                    let j0 = blk * COLUMN_BLOCK;
                    let len = chunk.len();
                    for (row, &wu) in c.chunks_exact(m).zip(&weighted) {
                        for (o, &e) in chunk.iter_mut().zip(&row[j0..j0 + len]) {
                            *o += e * wu;
                        }
                    }
                });
            }
            None => {
                let partials: Vec<Vec<f64>> = weighted
                    .par_chunks(ROW_BLOCK)
                    .enumerate()
                    .map(|(blk, wus)| {
                        let mut acc = vec![0.0; m];
                        let mut row = vec![0.0; m];
                        for (k, &wu) in wus.iter().enumerate() {
                            self.fill_row(blk * ROW_BLOCK + k, &mut row);
                            acc.iter_mut().zip(&row).for_each(|(a, e)| *a += e * wu);
                        }
                        acc
                    })
                    .collect();
                for p in &partials {
                    out.iter_mut().zip(p).for_each(|(o, x)| *o += x);
                }
            }
        }
        for (o, w) in out.iter_mut().zip(self.source.weights()) {
            *o /= w;
        }
        BoundaryField::from_values(&self.source, out)
    }

    /// Discrete `Pv` at arbitrary interior points (flat coordinates). Each
    /// point gets its own row under the operator's normalization, with the
    /// column scales reused as built.
    pub fn extend_at(&self, v: &BoundaryField, points: &[f64]) -> Result<Vec<f64>> {
        v.check(&self.source)?;
        let n = self.dim();
        if points.len() % n != 0 {
            return Err(Error::DimensionMismatch { expected: n, found: points.len() % n });
        }
        let m = self.source.len();
        let vals = v.values();
        points
            .par_chunks_exact(n)
            .map(|xi| {
                let r2: f64 = xi.iter().map(|x| x * x).sum();
                if r2 >= 1.0 {
                    return Err(Error::BoundaryTouch(1.0 - r2.sqrt()));
                }
                let mut row = vec![0.0; m];
                raw_row(&self.source, xi, &mut row);
                row.iter_mut().zip(&self.col_scale).for_each(|(r, b)| *r *= b);
                match self.options.normalization {
                    Normalization::None => {}
                    Normalization::Moments => {
                        let logs: Vec<f64> = row.iter().map(|r| r.ln()).collect();
                        let mut mu = vec![0.0; n];
                        tilt_row(&logs, self.source.flat_nodes(), xi, &mut mu, &mut row);
                    }
                    _ => {
                        let s: f64 = row.iter().sum();
                        row.iter_mut().for_each(|r| *r /= s);
                    }
                }
                Ok(row.iter().zip(vals).map(|(a, b)| a * b).sum())
            })
            .collect()
    }
}
