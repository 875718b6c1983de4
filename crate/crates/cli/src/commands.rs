//! One function per subcommand. Each returns the report and writes its CSV
//! tables into the output directory.

use std::f64::consts::PI;
use std::path::Path;

use conformal_poisson::bubble::{beta_of_lambda, fit_expansion, glued_trial_field, trial_energy, trial_energy_csv, GluedTrial, TrialControls};
use conformal_poisson::functional::{
    carleman_deficit, check_exponent, constant_field_value, rayleigh, sharp_constant, threshold, ScalarField,
};
use conformal_poisson::geometry::{ball_volume, conformal_pullback, make_ball_grid, make_sphere_grid, MobiusMap, SphereGrid};
use conformal_poisson::kernel::{Normalization, OperatorMode, OperatorOptions, PoissonOperator};
use conformal_poisson::obstruction::kw_report;
use conformal_poisson::solver::{
    blowup_rescale, bubble_distance, chart_function, continuation as run_continuation, maximize_subcritical,
    random_even_seed, Solution,
};
use conformal_poisson::BoundaryField;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{mode_for_budget, Command, KSpec, RunConfig, VSpec};
use crate::report::{num, write_csv, Check, Report};
use crate::CliError;

/// Tolerances of the built-in checks.
pub const SHARPNESS_SLACK: f64 = 1e-6;
pub const EQUALITY_GAP: f64 = 1e-12;
pub const CRITICAL_GAP: f64 = 1e-10;
pub const PULLBACK_GAP: f64 = 1e-3;
pub const CARLEMAN_FLOOR: f64 = -1e-10;
pub const CARLEMAN_CONSTANT: f64 = 1e-10;
pub const CONSTRAINT_TOL: f64 = 1e-12;
pub const CLOSED_FORM_TOL: f64 = 1e-6;
pub const CONTINUATION_JUMP: f64 = 0.05;
pub const CONCENTRATION_LIMIT: f64 = 1.1;
pub const BUBBLE_SUP: f64 = 0.05;
pub const CONVERGENCE_FACTOR: f64 = 4.0;
/// Interior shells used for the grid-convergence errors.
pub const INTERIOR_RADIUS: f64 = 0.9;
pub const EXPONENT_BAND: f64 = 0.15;

pub fn execute(cmd: Command, cfg: &RunConfig) -> Result<Report, CliError> {
    match cmd {
        Command::VerifyInequality => verify_inequality(cfg),
        Command::Carleman => carleman(cfg),
        Command::Solve => solve(cfg),
        Command::Continuation => continuation(cfg),
        Command::KazdanWarner => kazdan_warner(cfg),
        Command::TrialEnergy => trial(cfg),
        Command::BlowupDiagnostic => blowup(cfg),
        Command::GridConvergence => grid_convergence(cfg),
    }
}

fn operator_at(cfg: &RunConfig, resolution: usize, radial: usize, mode: OperatorMode) -> Result<PoissonOperator, CliError> {
    let sphere = make_sphere_grid(cfg.n(), resolution)?;
    let ball = make_ball_grid(&sphere, radial, cfg.grading)?;
    let options = OperatorOptions { mode, normalization: cfg.normalization(), memory_budget: cfg.memory_budget };
    Ok(PoissonOperator::build(&sphere, &ball, options)?)
}

fn operator(cfg: &RunConfig) -> Result<PoissonOperator, CliError> {
    operator_at(cfg, cfg.resolution(), cfg.radial_order(), cfg.operator_mode())
}

fn out(cfg: &RunConfig) -> &Path {
    &cfg.output_dir
}

fn unit(v: &[f64]) -> Vec<f64> {
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / r).collect()
}

/// `max(c₀ + c·ξ + Σ c_{3+i} ξ_i ξ_{i+1}, 0)` in three dimensions.
fn panel_field(sphere: &SphereGrid, c: &[f64]) -> BoundaryField {
    BoundaryField::sample(sphere, |x| {
        let lin: f64 = (0..3).map(|i| c[1 + i] * x[i]).sum();
        let quad: f64 = (0..3).map(|i| c[4 + i] * x[i] * x[(i + 1) % 3]).sum();
        (c[0] + lin + quad).max(0.0)
    })
}

fn trace_ratio(op: &PoissonOperator, v: &BoundaryField) -> Result<f64, CliError> {
    let r = rayleigh(op, v, &ScalarField::constant(3, 1.0))?;
    Ok(r.numerator.powf(1.0 / 6.0) / r.denominator.powf(0.25))
}

fn verify_inequality(cfg: &RunConfig) -> Result<Report, CliError> {
    let op = operator(cfg)?;
    let sphere = op.source();
    let s = sharp_constant(3)?;

    let one = BoundaryField::constant(sphere, 1.0);
    let r1 = rayleigh(&op, &one, &ScalarField::constant(3, 1.0))?;
    let i_one = r1.quotient.unwrap_or(f64::NAN);
    let ratio_one = r1.numerator.powf(1.0 / 6.0) / r1.denominator.powf(0.25);
    let equality_gap = (ratio_one - s).abs() / s;
    let critical_gap = (i_one - s.powi(6)).abs() / s.powi(6);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    let mut ratio_max = f64::MIN;
    for i in 0..cfg.samples() {
        let (c, v) = loop {
            let mut c = vec![rng.gen_range(0.2..1.5)];
            c.extend((0..6).map(|_| rng.gen_range(-1.0..1.0)));
            let v = panel_field(sphere, &c);
            if v.values().iter().any(|&x| x > 0.0) {
                break (c, v);
            }
        };
        let r = trace_ratio(&op, &v)?;
        ratio_max = ratio_max.max(r);
        let mut row = vec![i.to_string(), num(r)];
        row.extend(c.iter().map(|&x| num(x)));
        rows.push(row);
    }
    write_csv(out(cfg), "panel.csv", &["index", "ratio", "c0", "c1", "c2", "c3", "c4", "c5", "c6"], &rows)?;

    let poles = [vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0], unit(&[1.0, 1.0, 1.0])];
    let mut prow = Vec::new();
    let mut pullback_gap: f64 = 0.0;
    for pole in &poles {
        for scale in [0.7, 1.5] {
            let map = MobiusMap::dilation(pole, scale)?;
            let v = conformal_pullback(&|_: &[f64]| 1.0, &map, sphere)?;
            let r = trace_ratio(&op, &v)?;
            let gap = (r - s).abs() / s;
            pullback_gap = pullback_gap.max(gap);
            prow.push(vec![num(pole[0]), num(pole[1]), num(pole[2]), num(scale), num(r), num(gap)]);
        }
    }
    write_csv(out(cfg), "pullbacks.csv", &["pole_x", "pole_y", "pole_z", "scale", "ratio", "relative_gap"], &prow)?;

    let results = json!({
        "sharp_constant": s,
        "ratio_max": ratio_max,
        "ratio_of_one": ratio_one,
        "equality_gap": equality_gap,
        "critical_quotient_of_one": i_one,
        "sharp_constant_power": s.powi(6),
        "pullback_max_relative_gap": pullback_gap,
        "panel_size": cfg.samples(),
    });
    let checks = vec![
        Check::at_most("ratio_max <= S(3)(1+1e-6)", ratio_max, s * (1.0 + SHARPNESS_SLACK)),
        Check::at_most("relative equality gap of v = 1", equality_gap, EQUALITY_GAP),
        Check::at_most("relative gap I[1] - S(3)^6", critical_gap, CRITICAL_GAP),
        Check::at_most("relative gap of conformal pullbacks of 1", pullback_gap, PULLBACK_GAP),
    ];
    Ok(Report::new(Command::VerifyInequality, cfg, results, checks))
}

fn trig(a: &[f64], t: f64) -> f64 {
    a[0] + (1..=3).map(|k| a[2 * k - 1] * (k as f64 * t).cos() + a[2 * k] * (k as f64 * t).sin()).sum::<f64>()
}

fn carleman(cfg: &RunConfig) -> Result<Report, CliError> {
    let op = operator(cfg)?;
    let sphere = op.source();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    let mut min_deficit = f64::MAX;
    for i in 0..cfg.samples() {
        let a: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = BoundaryField::sample(sphere, |x| trig(&a, x[1].atan2(x[0])));
        let d = carleman_deficit(&op, &v)?;
        let b = v.integrate(sphere, f64::exp)?;
        min_deficit = min_deficit.min(d);
        let mut row = vec![i.to_string(), num(d), num(b * b / (4.0 * PI))];
        row.extend(a.iter().map(|&x| num(x)));
        rows.push(row);
    }
    write_csv(out(cfg), "carleman.csv", &["index", "deficit", "boundary_side", "a0", "a1", "b1", "a2", "b2", "a3", "b3"], &rows)?;
    let mut constant_max: f64 = 0.0;
    let mut crow = Vec::new();
    for c in [-1.0, 0.0, 0.5, 1.0, 2.0] {
        let d = carleman_deficit(&op, &BoundaryField::constant(sphere, c))?;
        constant_max = constant_max.max(d.abs());
        crow.push(vec![num(c), num(d)]);
    }
    write_csv(out(cfg), "constants.csv", &["value", "deficit"], &crow)?;
    let results = json!({
        "min_deficit": min_deficit,
        "max_abs_constant_deficit": constant_max,
        "panel_size": cfg.samples(),
    });
    let checks = vec![
        Check::at_least("min deficit over the panel", min_deficit, CARLEMAN_FLOOR),
        Check::at_most("max |deficit| of constants", constant_max, CARLEMAN_CONSTANT),
    ];
    Ok(Report::new(Command::Carleman, cfg, results, checks))
}

fn constraint_gap(sphere: &SphereGrid, k: &ScalarField, v: &BoundaryField, p: f64) -> Result<f64, CliError> {
    let kv = k.register(sphere)?;
    let c: f64 = v.values().iter().zip(kv.values()).zip(sphere.weights()).map(|((x, kk), w)| w * kk * x.abs().powf(p + 1.0)).sum();
    Ok((c - 1.0).abs())
}

fn asymmetry(sphere: &SphereGrid, v: &BoundaryField) -> f64 {
    let x = v.values();
    sphere.antipode().iter().enumerate().map(|(i, &j)| (x[i] - x[j]).abs()).fold(0.0, f64::max)
}

fn solution_row(seed: u64, s: &Solution) -> Vec<String> {
    vec![
        seed.to_string(),
        num(s.value),
        num(s.el_residual),
        num(s.multiplier),
        s.iterations.to_string(),
        s.converged.to_string(),
        num(s.concentration()),
    ]
}

fn is_unit_constant(k: &KSpec) -> bool {
    matches!(k, KSpec::Constant { value } if *value == 1.0)
}

fn solve(cfg: &RunConfig) -> Result<Report, CliError> {
    let op = operator(cfg)?;
    let sphere = op.source();
    let k = cfg.k.build(3)?;
    let sc = cfg.solver.to_config();
    let mut rows = Vec::new();
    let mut best: Option<(u64, Solution)> = None;
    let mut failures = Vec::new();
    for s in cfg.seed..cfg.seed + cfg.samples() as u64 {
        let v0 = random_even_seed(sphere, s);
        match maximize_subcritical(&op, &k, &sc, Some(&v0)) {
            Ok(sol) => {
                rows.push(solution_row(s, &sol));
                if best.as_ref().map_or(true, |(_, b)| sol.value > b.value) {
                    best = Some((s, sol));
                }
            }
            Err(e) => {
                rows.push(vec![s.to_string(), String::new(), String::new(), String::new(), String::new(), "false".into(), String::new()]);
                failures.push(json!({"seed": s, "error": e.to_string()}));
            }
        }
    }
    write_csv(out(cfg), "runs.csv", &["seed", "value", "el_residual", "multiplier", "iterations", "converged", "concentration"], &rows)?;
    let Some((seed, sol)) = best else {
        return Err(CliError::Numerical(format!("every start failed: {failures:?}")));
    };
    let trace: Vec<Vec<String>> = sol.trace.iter().enumerate().map(|(i, &x)| vec![i.to_string(), num(x)]).collect();
    write_csv(out(cfg), "trace.csv", &["iteration", "value"], &trace)?;
    let v = sol.field();
    let field_rows: Vec<Vec<String>> = (0..sphere.len())
        .map(|j| {
            let x = sphere.node(j);
            vec![num(x[0]), num(x[1]), num(x[2]), num(sphere.weights()[j]), num(v.values()[j])]
        })
        .collect();
    write_csv(out(cfg), "solution.csv", &["x", "y", "z", "weight", "v"], &field_rows)?;

    let p = sc.p;
    let cgap = constraint_gap(sphere, &k, v, p)?;
    let min_v = v.values().iter().copied().fold(f64::MAX, f64::min);
    let closed = constant_field_value(3, p);
    let mut results = json!({
        "best_seed": seed,
        "value": sol.value,
        "el_residual": sol.el_residual,
        "multiplier": sol.multiplier,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "concentration": sol.concentration(),
        "constraint_gap": cgap,
        "threshold": threshold(3, &k, Some(sphere))?,
        "failed_starts": failures,
    });
    let mut checks = vec![
        Check::holds("best run converged", sol.converged),
        Check::at_most("el_residual", sol.el_residual, sc.stall_residual),
        Check::at_most("constraint |∫K v^(p+1) - 1|", cgap, CONSTRAINT_TOL),
        Check::at_least("min v", min_v, 0.0),
    ];
    if sc.symmetrize {
        checks.push(Check::at_most("antipodal asymmetry", asymmetry(sphere, v), 0.0));
    }
    if is_unit_constant(&cfg.k) {
        let rel = (sol.value - closed).abs() / closed;
        results["closed_form_value"] = json!(closed);
        results["closed_form_relative_error"] = json!(rel);
        checks.push(Check::at_most("relative error against the constant-field value", rel, CLOSED_FORM_TOL));
    }
    Ok(Report::new(Command::Solve, cfg, results, checks))
}

fn continuation(cfg: &RunConfig) -> Result<Report, CliError> {
    let op = operator(cfg)?;
    let k = cfg.k.build(3)?;
    let steps = run_continuation(&op, &k, &cfg.schedule, &cfg.solver.to_config())?;
    let mut rows = Vec::new();
    let mut values = Vec::new();
    let mut max_conc: f64 = 0.0;
    let mut failed = 0usize;
    for s in &steps {
        match &s.solution {
            Some(sol) => {
                values.push(Some(sol.value));
                let c = s.concentration.unwrap_or(f64::NAN);
                max_conc = max_conc.max(c);
                rows.push(vec![num(s.p), num(sol.value), num(sol.el_residual), num(c), sol.converged.to_string(), String::new()]);
            }
            None => {
                values.push(None);
                failed += 1;
                rows.push(vec![num(s.p), String::new(), String::new(), String::new(), "false".into(), s.error.clone().unwrap_or_default()]);
            }
        }
    }
    write_csv(out(cfg), "continuation.csv", &["p", "value", "el_residual", "concentration", "converged", "error"], &rows)?;
    let max_jump = values
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => (b - a).abs() / a.abs(),
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    let results = json!({
        "values": values,
        "max_relative_jump": max_jump,
        "max_concentration": max_conc,
        "failed_steps": failed,
    });
    let mut results = results;
    let mut checks = vec![
        Check::at_most("failed steps", failed as f64, 0.0),
        Check::at_most("max relative jump between consecutive exponents", max_jump, CONTINUATION_JUMP),
        Check::at_most("max concentration indicator", max_conc, CONCENTRATION_LIMIT),
    ];
    if is_unit_constant(&cfg.k) {
        let gap = steps
            .iter()
            .zip(&values)
            .map(|(s, v)| {
                let c = constant_field_value(3, s.p);
                v.map_or(f64::INFINITY, |v| (v - c).abs() / c)
            })
            .fold(0.0, f64::max);
        results["max_closed_form_relative_error"] = json!(gap);
        checks.push(Check::at_most("max relative error against the constant-field value", gap, CONTINUATION_JUMP));
    }
    Ok(Report::new(Command::Continuation, cfg, results, checks))
}

fn kazdan_warner(cfg: &RunConfig) -> Result<Report, CliError> {
    let sphere = make_sphere_grid(3, cfg.resolution())?;
    let k = cfg.k.build(3)?;
    let v = match &cfg.v {
        VSpec::Constant { value } => BoundaryField::constant(&sphere, *value),
        VSpec::Glued { lambda } => glued_trial_field(beta_of_lambda(*lambda), &[0.0, 0.0, 1.0], &sphere)?,
        VSpec::Random => random_even_seed(&sphere, cfg.seed),
    };
    let rep = kw_report(&k, &v, &sphere)?;
    let rows: Vec<Vec<String>> = rep.pairings.iter().map(|p| vec![p.label.clone(), num(p.value)]).collect();
    write_csv(out(cfg), "pairings.csv", &["field", "pairing"], &rows)?;
    let results = json!({
        "pairings": rep.pairings,
        "max_abs_pairing": rep.max_abs,
        "tolerance": rep.tolerance,
        "flag": rep.flag,
    });
    // a nonvanishing pairing is a property of K, not a failure; only constant K has a required value
    let mut checks = Vec::new();
    if matches!(cfg.k, KSpec::Constant { .. }) {
        checks.push(Check::at_most("max |pairing| for constant K", rep.max_abs, CONSTRAINT_TOL));
    }
    Ok(Report::new(Command::KazdanWarner, cfg, results, checks))
}

fn trial(cfg: &RunConfig) -> Result<Report, CliError> {
    let controls = TrialControls { order: cfg.trial_order, check: true };
    let rows = cfg.lambda.iter().map(|&l| trial_energy(l, controls)).collect::<Result<Vec<_>, _>>()?;
    std::fs::create_dir_all(out(cfg))?;
    std::fs::write(out(cfg).join("trial_energy.csv"), trial_energy_csv(&rows))?;
    let two_omega = 2.0 * ball_volume(3);
    let min_deficit = rows.iter().map(|r| r.deficit).fold(f64::MAX, f64::min);
    let fittable = rows.len() >= 4 && cfg.lambda.iter().all(|&l| l <= 0.2);
    let fit = if fittable {
        Some(fit_expansion(3, &rows.iter().map(|r| (r.lambda, r.energy)).collect::<Vec<_>>())?)
    } else {
        None
    };
    let mut results = json!({
        "two_omega": two_omega,
        "energies": rows.iter().map(|r| r.energy).collect::<Vec<_>>(),
        "min_deficit": min_deficit,
    });
    let mut checks = vec![Check::greater("min E(lambda) - 2 omega_3", min_deficit, 0.0)];
    if let Some(f) = fit {
        results["fitted_exponent"] = json!(f.exponent);
        results["fitted_coefficient"] = json!(f.coefficient);
        results["exponent_within_band"] = json!((f.exponent - 2.0).abs() <= EXPONENT_BAND);
        checks.push(Check::greater("fitted coefficient", f.coefficient, 0.0));
    }
    Ok(Report::new(Command::TrialEnergy, cfg, results, checks))
}

fn blowup(cfg: &RunConfig) -> Result<Report, CliError> {
    let p = cfg.solver.p;
    check_exponent(3, p)?;
    let e3 = [0.0, 0.0, 1.0];
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut sup_max: f64 = 0.0;
    for (i, &l) in cfg.lambda.iter().enumerate() {
        let g = GluedTrial::from_lambda(l, &e3)?;
        let u = chart_function(3, &g);
        let prof = blowup_rescale(&u, 2, p)?;
        let fit = bubble_distance(&prof)?;
        sup_max = sup_max.max(fit.sup_distance);
        if i == 0 {
            let prow: Vec<Vec<String>> = prof
                .points
                .iter()
                .zip(&prof.values)
                .map(|(x, &v)| {
                    let fitted = fit.amplitude / (1.0 + (x[0] * x[0] + x[1] * x[1]) / (fit.scale * fit.scale)).sqrt();
                    vec![num(x[0]), num(x[1]), num(v), num(fitted)]
                })
                .collect();
            write_csv(out(cfg), "profile.csv", &["x1", "x2", "value", "fitted"], &prow)?;
        }
        rows.push(vec![
            num(l),
            num(prof.sigma),
            num(fit.scale),
            num(fit.amplitude),
            num(fit.sup_distance),
            fit.non_concentrated.to_string(),
            prof.center_not_peak.to_string(),
        ]);
        fits.push(json!({"lambda": l, "fit": fit, "sigma": prof.sigma, "center_not_peak": prof.center_not_peak}));
    }
    write_csv(out(cfg), "fits.csv", &["lambda", "sigma", "scale", "amplitude", "sup_distance", "non_concentrated", "center_not_peak"], &rows)?;
    let flat = bubble_distance(&blowup_rescale(&|_: &[f64]| 1.0, 2, p)?)?;
    let results = json!({"fits": fits, "max_sup_distance": sup_max, "flat_profile_fit": flat});
    let checks = vec![
        Check::at_most("max sup distance to the fitted bubble", sup_max, BUBBLE_SUP),
        Check::holds("flat profile reported non-concentrated", flat.non_concentrated),
    ];
    Ok(Report::new(Command::BlowupDiagnostic, cfg, results, checks))
}

fn grid_convergence(cfg: &RunConfig) -> Result<Report, CliError> {
    let mut rows = Vec::new();
    let mut ext = Vec::new();
    let mut raw = Vec::new();
    let mut modes = Vec::new();
    for &res in &cfg.resolutions {
        let mode = cfg.operator_mode.unwrap_or_else(|| mode_for_budget(3, res, res, cfg.memory_budget));
        let op = operator_at(cfg, res, res, mode)?;
        let ball = op.target();
        let inner: Vec<usize> = (0..ball.len())
            .filter(|&i| ball.node(i).iter().map(|x| x * x).sum::<f64>().sqrt() <= INTERIOR_RADIUS)
            .collect();
        let u = op.extend(&BoundaryField::sample(op.source(), |x| x[2]))?;
        let e = inner.iter().map(|&i| (u.values()[i] - ball.node(i)[2]).abs()).fold(0.0, f64::max);
        let r = inner.iter().map(|&i| (op.raw_row_sums()[i] - 1.0).abs()).fold(0.0, f64::max);
        rows.push(vec![res.to_string(), num(e), num(r)]);
        ext.push(e);
        raw.push(r);
        modes.push(mode);
    }
    write_csv(out(cfg), "convergence.csv", &["resolution", "extension_error", "row_sum_error"], &rows)?;
    let ratios = |v: &[f64]| v.windows(2).map(|w| w[0] / w[1]).collect::<Vec<_>>();
    let (re, rr) = (ratios(&ext), ratios(&raw));
    let results = json!({
        "resolutions": cfg.resolutions,
        "operator_modes": modes,
        "extension_errors": ext,
        "row_sum_errors": raw,
        "extension_ratios": re,
        "row_sum_ratios": rr,
        "normalization": cfg.normalization(),
    });
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let checks = vec![
        Check::at_least("min extension error reduction per doubling", min(&re), CONVERGENCE_FACTOR),
        Check::at_least("min row-sum error reduction per doubling", min(&rr), CONVERGENCE_FACTOR),
    ];
    if cfg.normalization() == Normalization::Moments {
        // linear data are reproduced exactly; the extension error carries no convergence information
        return Ok(Report::new(Command::GridConvergence, cfg, results, checks[1..].to_vec()));
    }
    Ok(Report::new(Command::GridConvergence, cfg, results, checks))
}
