use conformal_poisson::geometry::{make_ball_grid, make_sphere_grid};
use conformal_poisson::kernel::{ball_kernel, build_operator, halfspace_kernel, OperatorMode};
use conformal_poisson::BoundaryField;
use proptest::prelude::*;

fn field(c: &[f64]) -> impl Fn(&[f64]) -> f64 + '_ {
    move |x: &[f64]| 1.5 + c[0] * x[0] + c[1] * x[1] * x[2] + c[2] * x[2] * x[2] + c[3] * (x[0] * x[1]).sin()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernels_are_positive(e in prop::array::uniform3(-1.0f64..1.0), x in prop::array::uniform3(-1.0f64..1.0)) {
        let r = (e.iter().map(|a| a * a).sum::<f64>()).sqrt();
        prop_assume!(r > 1e-3);
        let eta: Vec<f64> = e.iter().map(|a| a / r).collect();
        let rx = (x.iter().map(|a| a * a).sum::<f64>()).sqrt();
        prop_assume!(rx < 0.999);
        prop_assert!(ball_kernel(&eta, &x, 3) > 0.0);
        let y = [x[0], x[1], x[2].abs() + 1e-3];
        prop_assert!(halfspace_kernel(&e[..2], &y, 3) > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn normalized_extension_obeys_maximum_principle(c in prop::collection::vec(-0.4f64..0.4, 4)) {
        let s = make_sphere_grid(3, 8).unwrap();
        let b = make_ball_grid(&s, 8, 2.0).unwrap();
        let op = build_operator(&s, &b, OperatorMode::MatrixFree, true).unwrap();
        let v = BoundaryField::sample(&s, field(&c));
        let (lo, hi) = v.values().iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        let u = op.extend(&v).unwrap();
        for &x in u.values() {
            prop_assert!(x >= lo - 1e-12 && x <= hi + 1e-12);
        }
    }

    #[test]
    fn extension_has_mean_value_property(c in prop::collection::vec(-0.4f64..0.4, 4), r in 0.2f64..0.9) {
        let s = make_sphere_grid(3, 16).unwrap();
        let b = make_ball_grid(&s, 16, 2.0).unwrap();
        let op = build_operator(&s, &b, OperatorMode::MatrixFree, true).unwrap();
        let v = BoundaryField::sample(&s, field(&c));
        let probe = make_sphere_grid(3, 10).unwrap();
        let pts: Vec<f64> = probe.flat_nodes().iter().map(|x| r * x).collect();
        let vals = op.extend_at(&v, &pts).unwrap();
        let mean = vals.iter().zip(probe.weights()).map(|(a, w)| a * w).sum::<f64>() / probe.weights().iter().sum::<f64>();
        let center = op.extend_at(&v, &[0.0, 0.0, 0.0]).unwrap()[0];
        prop_assert!((mean - center).abs() <= 5e-3 * center.abs(), "r={r}: {mean} vs {center}");
    }
}

#[test]
fn raw_row_sums_converge_on_interior_shells() {
    let mut prev = None;
    for res in [8, 16, 32] {
        let s = make_sphere_grid(3, res).unwrap();
        let b = make_ball_grid(&s, res, 2.0).unwrap();
        let op = build_operator(&s, &b, OperatorMode::MatrixFree, false).unwrap();
        let err = (0..b.len())
            .filter(|&i| b.node(i).iter().map(|x| x * x).sum::<f64>().sqrt() <= 0.9)
            .map(|i| (op.raw_row_sums()[i] - 1.0).abs())
            .fold(0.0, f64::max);
        if let Some(p) = prev {
            assert!(err <= p / 4.0, "res {res}: {err} after {p}");
        }
        prev = Some(err);
    }
}
