use conformal_poisson::functional::{threshold, ScalarField};
use conformal_poisson::geometry::{make_ball_grid, make_sphere_grid};
use conformal_poisson::kernel::{Normalization, OperatorMode, OperatorOptions, PoissonOperator};
use conformal_poisson::obstruction::{kw_pairing, KillingField};
use conformal_poisson::solver::{continuation, maximize_subcritical, random_even_seed, SolverConfig};
use proptest::prelude::*;
use std::sync::OnceLock;

fn op() -> &'static PoissonOperator {
    static OP: OnceLock<PoissonOperator> = OnceLock::new();
    OP.get_or_init(|| {
        let s = make_sphere_grid(3, 6).unwrap();
        let b = make_ball_grid(&s, 6, 2.0).unwrap();
        let opts = OperatorOptions { mode: OperatorMode::Cached, normalization: Normalization::Balanced, ..Default::default() };
        PoissonOperator::build(&s, &b, opts).unwrap()
    })
}

fn k_field(which: u8) -> ScalarField {
    match which {
        0 => ScalarField::constant(3, 1.0),
        _ => ScalarField::zn2_plus_1(3),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn iterates_keep_constraint_and_symmetry(seed in 0u64..1000, p in 3.0f64..4.9, which in 0u8..2) {
        let op = op();
        let k = k_field(which);
        let cfg = SolverConfig { max_iterations: 40, ..SolverConfig::new(p) };
        let v0 = random_even_seed(op.source(), seed);
        let sol = maximize_subcritical(op, &k, &cfg, Some(&v0)).unwrap();
        let v = sol.field();
        let kv = k.register(op.source()).unwrap();
        let c: f64 = v.values().iter().zip(kv.values()).zip(op.source().weights()).map(|((x, kk), w)| w * kk * x.powf(p + 1.0)).sum();
        prop_assert!((c - 1.0).abs() <= 1e-12);
        for (i, &j) in op.source().antipode().iter().enumerate() {
            prop_assert_eq!(v.values()[i], v.values()[j]);
        }
        prop_assert!(v.values().iter().all(|&x| x >= 0.0));
        prop_assert!(sol.trace.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(*sol.trace.last().unwrap() >= sol.trace[0]);
    }
}

#[test]
fn lowest_exponent_value_clears_threshold() {
    let k = ScalarField::constant(3, 1.0);
    let sol = maximize_subcritical(op(), &k, &SolverConfig::new(3.05), None).unwrap();
    assert!(sol.value > threshold(3, &k, None).unwrap());
}

#[test]
fn continuation_values_vary_continuously() {
    let k = ScalarField::constant(3, 1.0);
    let steps = continuation(op(), &k, &[3.2, 3.15, 3.1, 3.05], &SolverConfig::new(3.2)).unwrap();
    let vals: Vec<f64> = steps.iter().map(|s| s.solution.as_ref().unwrap().value).collect();
    for w in vals.windows(2) {
        assert!((w[1] / w[0] - 1.0).abs() < 0.05, "{vals:?}");
    }
}

#[test]
fn low_residual_candidates_for_zn_plus_2_are_obstructed() {
    let k = ScalarField::zn_plus_2(3);
    let x = KillingField::essential(&[0.0, 0.0, 1.0], "e3");
    let cfg = SolverConfig { symmetrize: false, max_iterations: 300, ..SolverConfig::new(4.0) };
    let mut candidates = 0;
    for seed in 0..3 {
        let v0 = random_even_seed(op().source(), seed);
        let Ok(sol) = maximize_subcritical(op(), &k, &cfg, Some(&v0)) else { continue };
        let pairing = kw_pairing(&k, sol.field(), &x, op().source()).unwrap();
        assert!(pairing > 0.0);
        if sol.el_residual < 1e-3 {
            candidates += 1;
            assert!(pairing > 0.1, "seed {seed}: pairing {pairing}");
        }
    }
    eprintln!("low-residual candidates: {candidates}");
}
