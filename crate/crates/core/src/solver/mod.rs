//! Subcritical maximization in the antipodal class, the Euler–Lagrange
//! residual, exponent continuation and the blow-up rescaling diagnostic.

mod blowup;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use blowup::{
    blowup_rescale, bubble_distance, chart_function, chart_of_field, BlowupProfile, BubbleFit,
};

use crate::error::{Error, Result};
use crate::field::{BoundaryField, InteriorField};
use crate::functional::{check_exponent, interior_exponent, ScalarField};
use crate::geometry::SphereGrid;
use crate::kernel::PoissonOperator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub p: f64,
    /// First trial step of every iteration.
    pub initial_step: f64,
    /// Step reduction factor on a rejected step.
    pub backtrack: f64,
    /// Smallest step tried before the iteration gives up.
    pub min_step: f64,
    pub max_iterations: usize,
    /// Stop once the relative value change falls below this.
    pub tolerance: f64,
    /// Stop once the relative Euler–Lagrange residual falls below this.
    pub residual_tolerance: f64,
    /// A run that stalls (no ascent step accepted, or the value stops moving)
    /// still counts as converged if its residual is below this.
    pub stall_residual: f64,
    pub positivity: bool,
    pub symmetrize: bool,
}

impl SolverConfig {
    pub fn new(p: f64) -> Self {
        SolverConfig {
            p,
            initial_step: 1.0 / p,
            backtrack: 0.5,
            min_step: 1e-10,
            max_iterations: 2000,
            tolerance: 1e-15,
            residual_tolerance: 1e-9,
            stall_residual: 1e-6,
            positivity: true,
            symmetrize: true,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        check_exponent(n, self.p)?;
        let positive = [self.initial_step, self.min_step, self.tolerance, self.residual_tolerance, self.stall_residual];
        if positive.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidParameters("step sizes and tolerances must be positive".into()));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidParameters(format!("backtrack = {} must lie in (0, 1)", self.backtrack)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameters("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    #[serde(skip)]
    pub v: Option<BoundaryField>,
    pub p: f64,
    /// `∫_{B₁} (Pv)^{2n/(n-2)}` under `∫ K v^{p+1} = 1`.
    pub value: f64,
    pub el_residual: f64,
    /// `⟨P*((Pv)^{(n+2)/(n-2)}), v⟩ / ⟨K v^p, v⟩`.
    pub multiplier: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
    pub seed: Option<u64>,
}

impl Solution {
    pub fn field(&self) -> &BoundaryField {
        self.v.as_ref().expect("solver output carries its field")
    }

    /// `max v / median v`.
    pub fn concentration(&self) -> f64 {
        concentration_indicator(self.field())
    }
}

pub fn concentration_indicator(v: &BoundaryField) -> f64 {
    let mut s = v.values().to_vec();
    s.sort_by(f64::total_cmp);
    let median = if s.len() % 2 == 1 { s[s.len() / 2] } else { 0.5 * (s[s.len() / 2 - 1] + s[s.len() / 2]) };
    s[s.len() - 1] / median
}

/// `(v(ξ) + v(-ξ))/2` through the antipode permutation.
pub fn symmetrize(v: &BoundaryField, grid: &SphereGrid) -> Result<BoundaryField> {
    v.check(grid)?;
    let x = v.values();
    let out = grid.antipode().iter().enumerate().map(|(i, &j)| 0.5 * (x[i] + x[j])).collect();
    BoundaryField::from_values(grid, out)
}

struct State {
    v: Vec<f64>,
    value: f64,
    rhs: Vec<f64>,
}

struct Problem<'a> {
    op: &'a PoissonOperator,
    k: Vec<f64>,
    p: f64,
    q: f64,
}

impl Problem<'_> {
    fn constraint(&self, v: &[f64]) -> f64 {
        let w = self.op.source().weights();
        v.iter().zip(&self.k).zip(w).map(|((x, k), w)| w * k * x.abs().powf(self.p + 1.0)).sum()
    }

    fn normalize(&self, v: &mut [f64]) -> Result<()> {
        let c = self.constraint(v);
        if !(c > 1e-28) {
            return Err(Error::DegenerateField(c.sqrt()));
        }
        let s = c.powf(-1.0 / (self.p + 1.0));
        v.iter_mut().for_each(|x| *x *= s);
        Ok(())
    }

    fn evaluate(&self, v: Vec<f64>) -> Result<State> {
        let sphere = self.op.source();
        let pv = self.op.extend(&BoundaryField::from_values(sphere, v.clone())?)?;
        let grid = self.op.target();
        let value = pv.integrate(grid, |x| x.abs().powf(self.q))?;
        let g = InteriorField::from_values(grid, pv.values().iter().map(|x| x.abs().powf(self.q - 1.0) * x.signum()).collect())?;
        let rhs = self.op.adjoint_apply(&g)?.into_values();
        Ok(State { v, value, rhs })
    }

    fn multiplier(&self, s: &State) -> f64 {
        let w = self.op.source().weights();
        let num: f64 = s.rhs.iter().zip(&s.v).zip(w).map(|((r, v), w)| w * r * v).sum();
        let den = self.constraint(&s.v);
        num / den
    }

    fn residual(&self, s: &State, mult: f64) -> f64 {
        residual_from(&s.v, &s.rhs, &self.k, self.p, mult)
    }
}

fn residual_from(v: &[f64], rhs: &[f64], k: &[f64], p: f64, mult: f64) -> f64 {
    v.iter()
        .zip(rhs)
        .zip(k)
        .map(|((&x, &r), &kk)| {
            let lhs = mult * kk * x.abs().powf(p);
            (lhs - r).abs() / (lhs + 1e-14)
        })
        .fold(0.0, f64::max)
}

/// `max_j |λ K v^p - P*((Pv)^{(n+2)/(n-2)})| / (λ K v^p + 1e-14)` over boundary nodes.
pub fn el_residual(op: &PoissonOperator, v: &BoundaryField, k: &ScalarField, p: f64, mult: f64) -> Result<f64> {
    let kv = k.register(op.source())?;
    v.check(op.source())?;
    let q = interior_exponent(op.dim());
    let pv = op.extend(v)?;
    let g = pv.map(|x| x.abs().powf(q - 1.0) * x.signum());
    let rhs = op.adjoint_apply(&g)?;
    Ok(residual_from(v.values(), rhs.values(), kv.values(), p, mult))
}

/// Projected ascent for `sup ∫(Pv)^{2n/(n-2)}` under `∫ K v^{p+1} = 1`.
///
/// The search direction is the constrained gradient preconditioned by
/// `v^{1-p}/(λK)`, so a unit step is the multiplicative update
/// `v ← v (1 + τ (r - 1))` with `r = P*((Pv)^{(n+2)/(n-2)}) / (λ K v^p)`.
/// Each trial point is clipped at zero, symmetrized and renormalized, and is
/// accepted only if the value does not decrease.
pub fn maximize_subcritical(
    op: &PoissonOperator,
    k: &ScalarField,
    cfg: &SolverConfig,
    v0: Option<&BoundaryField>,
) -> Result<Solution> {
    cfg.validate(op.dim())?;
    let sphere = op.source();
    let kv = k.register(sphere)?;
    let prob = Problem { op, k: kv.into_values(), p: cfg.p, q: interior_exponent(op.dim()) };
    let mut v = match v0 {
        Some(f) => {
            f.check(sphere)?;
            f.values().to_vec()
        }
        None => vec![1.0; sphere.len()],
    };
    project(&mut v, sphere, cfg);
    prob.normalize(&mut v)?;
    let mut state = prob.evaluate(v)?;
    let mut trace = vec![state.value];
    let mut converged = false;
    let mut stalled = false;
    let mut iterations = 0;
    let mut quiet = 0;
    while iterations < cfg.max_iterations {
        let mult = prob.multiplier(&state);
        if prob.residual(&state, mult) <= cfg.residual_tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let mut tau = cfg.initial_step;
        let mut accepted = None;
        while tau >= cfg.min_step {
            let mut trial: Vec<f64> = state
                .v
                .iter()
                .zip(&state.rhs)
                .zip(&prob.k)
                .map(|((&x, &r), &kk)| {
                    let d = mult * kk * x.powf(cfg.p);
                    if d > 0.0 {
                        x * (1.0 + tau * (r / d - 1.0))
                    } else {
                        x
                    }
                })
                .collect();
            project(&mut trial, sphere, cfg);
            prob.normalize(&mut trial)?;
            let next = prob.evaluate(trial)?;
            if next.value >= state.value {
                accepted = Some(next);
                break;
            }
            tau *= cfg.backtrack;
        }
        let Some(next) = accepted else {
            if iterations == 1 && prob.residual(&state, mult) > cfg.stall_residual {
                return Err(Error::Diverged(iterations));
            }
            stalled = true;
            break;
        };
        let rel = (next.value - state.value) / state.value;
        state = next;
        trace.push(state.value);
        if rel <= cfg.tolerance {
            quiet += 1;
            if quiet >= 3 {
                stalled = true;
                break;
            }
        } else {
            quiet = 0;
        }
    }
    let multiplier = prob.multiplier(&state);
    let el = prob.residual(&state, multiplier);
    converged = converged || el <= cfg.residual_tolerance || (stalled && el <= cfg.stall_residual);
    let value = state.value;
    Ok(Solution {
        v: Some(BoundaryField::from_values(sphere, state.v)?),
        p: cfg.p,
        value,
        el_residual: el,
        multiplier,
        iterations,
        converged,
        trace,
        seed: None,
    })
}

fn project(v: &mut [f64], sphere: &SphereGrid, cfg: &SolverConfig) {
    if cfg.positivity {
        v.iter_mut().for_each(|x| *x = x.max(0.0));
    }
    if cfg.symmetrize {
        let anti = sphere.antipode();
        for i in 0..v.len() {
            let j = anti[i];
            if j > i {
                let m = 0.5 * (v[i] + v[j]);
                v[i] = m;
                v[j] = m;
            }
        }
    }
}

/// `1 + 0.2 Σ c_ij ξ_i ξ_j` with `c_ij` uniform in `[-1, 1]`: an even,
/// positive starting field.
pub fn random_even_seed(sphere: &SphereGrid, seed: u64) -> BoundaryField {
    let n = sphere.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    BoundaryField::sample(sphere, |x| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += c[i * n + j] * x[i] * x[j];
            }
        }
        1.0 + 0.2 * s
    })
}

/// Best of independent runs from [`random_even_seed`] starts; ties go to the
/// earlier seed.
pub fn multi_start(op: &PoissonOperator, k: &ScalarField, cfg: &SolverConfig, seeds: &[u64]) -> Result<Solution> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameters("multi-start needs at least one seed".into()));
    }
    let runs: Vec<Result<Solution>> = seeds
        .par_iter()
        .map(|&s| {
            let v0 = random_even_seed(op.source(), s);
            maximize_subcritical(op, k, cfg, Some(&v0)).map(|mut sol| {
                sol.seed = Some(s);
                sol
            })
        })
        .collect();
    let mut best: Option<Solution> = None;
    let mut first_err = None;
    for r in runs {
        match r {
            Ok(sol) => {
                if best.as_ref().map_or(true, |b| sol.value > b.value) {
                    best = Some(sol);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("at least one run"))
}

pub const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationStep {
    pub p: f64,
    pub solution: Option<Solution>,
    pub error: Option<String>,
    pub concentration: Option<f64>,
}

/// Solves along a strictly decreasing exponent schedule, warm-starting each
/// step from the previous maximizer. Step failures are recorded and the next
/// step restarts from the last good field.
pub fn continuation(
    op: &PoissonOperator,
    k: &ScalarField,
    schedule: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<ContinuationStep>> {
    if schedule.is_empty() {
        return Err(Error::InvalidParameters("empty exponent schedule".into()));
    }
    if schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameters("exponent schedule must be strictly decreasing".into()));
    }
    for &p in schedule {
        check_exponent(op.dim(), p)?;
    }
    let mut out = Vec::with_capacity(schedule.len());
    let mut warm: Option<BoundaryField> = None;
    for &p in schedule {
        let step_cfg = SolverConfig { p, initial_step: cfg.initial_step.min(1.0 / p), ..*cfg };
        match maximize_subcritical(op, k, &step_cfg, warm.as_ref()) {
            Ok(sol) => {
                warm = sol.v.clone();
                let c = sol.concentration();
                out.push(ContinuationStep { p, solution: Some(sol), error: None, concentration: Some(c) });
            }
            Err(e) => out.push(ContinuationStep { p, solution: None, error: Some(e.to_string()), concentration: None }),
        }
    }
    Ok(out)
}
