use proptest::prelude::*;
use solar_core::testbed::{
    devilliers_glasser_02, dvg02_data, make_quadratic, rastrigin, rosenbrock_skokov, Rastrigin,
    RosenbrockSkokov, DVG02_TRUE,
};
use solar_core::Function;

fn central_difference(f: &dyn Function, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[i] += h;
            m[i] -= h;
            (f.value(&p) - f.value(&m)) / (2.0 * h)
        })
        .collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-12)
}

#[test]
fn known_optima() {
    assert!(rosenbrock_skokov(&[1.0; 100]).unwrap().abs() <= 1e-9);
    assert!(rastrigin(&[0.0; 200]).abs() <= 1e-9);
    assert!(devilliers_glasser_02(&DVG02_TRUE).unwrap().abs() <= 1e-9);
}

#[test]
fn dvg02_residuals_vanish_at_generator() {
    let [x1, x2, x3, x4, x5] = DVG02_TRUE;
    for (t, y) in dvg02_data() {
        let model = x1 * x2.powf(t) * (t * x3 + (t * x4).sin()).tanh() * (t * x5.exp()).cos();
        assert!((model - y).abs() <= 1e-12 * (1.0 + y.abs()));
    }
    assert!(devilliers_glasser_02(&[1.0, 0.0, 1.0, 1.0, 1.0]).is_err());
}

#[test]
fn quadratic_minimiser_is_stationary() {
    let q = make_quadratic(10, 1.0, 0).unwrap();
    let x = q.minimiser.clone().expect("invertible");
    let g = q.gradient(&x).unwrap();
    assert!(g.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-8);
    assert!(q.kappa >= 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quadratic_gradient_matches_differences(
        seed in 0u64..1000,
        x in prop::collection::vec(-5.0f64..5.0, 10),
    ) {
        let q = make_quadratic(10, 2.0, seed).unwrap();
        let fd = central_difference(&q, &x, 1e-5);
        prop_assert!(rel_err(&q.gradient(&x).unwrap(), &fd) <= 1e-4);
    }

    #[test]
    fn rosenbrock_gradient_matches_differences(x in prop::collection::vec(-2.0f64..2.0, 8)) {
        let f = RosenbrockSkokov { n: 8 };
        let fd = central_difference(&f, &x, 1e-6);
        prop_assert!(rel_err(&f.gradient(&x).unwrap(), &fd) <= 1e-4);
    }

    #[test]
    fn rastrigin_gradient_matches_differences(x in prop::collection::vec(-5.0f64..5.0, 6)) {
        let f = Rastrigin { n: 6 };
        let fd = central_difference(&f, &x, 1e-6);
        prop_assert!(rel_err(&f.gradient(&x).unwrap(), &fd) <= 1e-4);
    }
}
