use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use solar_core::subspace::{
    choose_base, cone_interval, sample_cone, sample_vanilla, BaseIndexSet, ConeParams, RayMap,
    ANGLE_EPS,
};

fn base_strategy() -> impl Strategy<Value = (usize, usize, u64)> {
    (2usize..30).prop_flat_map(|n| (Just(n), 1..n, any::<u64>()))
}

proptest! {
    #[test]
    fn base_rows_are_identity((n, b, seed) in base_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = choose_base(n, b, &mut rng).unwrap();
        prop_assert_eq!(base.len(), b);
        let a = sample_vanilla(n, &base, &mut rng);
        for (j, &i) in base.indices().iter().enumerate() {
            for k in 0..b {
                prop_assert_eq!(a.get(i, k), if k == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn ray_passes_through_anchor(
        (n, b, seed) in base_strategy(),
        scale in 1e-3f64..1e3,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = choose_base(n, b, &mut rng).unwrap();
        let anchor: Vec<f64> = (0..n).map(|i| scale * ((i as f64) * 0.7).sin()).collect();
        let slopes = sample_vanilla(n, &base, &mut rng);
        let ray = RayMap::new(anchor.clone(), base, slopes).unwrap();
        let x = ray.ray_eval(ray.anchor_parameter()).unwrap();
        for (a, b) in x.iter().zip(&anchor) {
            prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        }
    }

    #[test]
    fn ray_is_affine_in_t(
        (n, b, seed) in base_strategy(),
        lambda in -2.0f64..2.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = choose_base(n, b, &mut rng).unwrap();
        let slopes = sample_vanilla(n, &base, &mut rng);
        let anchor = vec![0.5; n];
        let ray = RayMap::new(anchor, base, slopes).unwrap();
        let t0 = ray.anchor_parameter().to_vec();
        let t1: Vec<f64> = t0.iter().enumerate().map(|(j, v)| v + 0.1 * (j as f64 + 1.0)).collect();
        let tl: Vec<f64> = t0.iter().zip(&t1).map(|(a, c)| a + lambda * (c - a)).collect();
        let (x0, x1, xl) = (ray.ray_eval(&t0).unwrap(), ray.ray_eval(&t1).unwrap(), ray.ray_eval(&tl).unwrap());
        for i in 0..n {
            let want = x0[i] + lambda * (x1[i] - x0[i]);
            let tol = 1e-9 * (1.0 + want.abs() + x1[i].abs());
            prop_assert!((xl[i] - want).abs() <= tol);
        }
    }

    #[test]
    fn zero_spread_recovers_gradient_ratio(
        g in prop::collection::vec(prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], 3..12),
        seed in any::<u64>(),
    ) {
        let n = g.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = choose_base(n, 1, &mut rng).unwrap();
        let bj = base.indices()[0];
        let cone = ConeParams { half_angle: 0.3, beta: 1e-14, eps: ANGLE_EPS, direction: g.clone() };
        let a = sample_cone(n, &base, &cone, &mut rng).unwrap();
        for i in 0..n {
            let want = g[i] / g[bj];
            prop_assert!((a.get(i, 0) - want).abs() <= 1e-9 * want.abs(), "{} vs {}", a.get(i, 0), want);
        }
    }
}

#[test]
fn cone_containment_on_many_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 8;
    let mut draws = 0;
    for round in 0..1250 {
        let g: Vec<f64> = (0..n)
            .map(|i| if (i + round) % 5 == 0 { 0.0 } else { ((i * 7 + round) as f64).sin() })
            .collect();
        if g.iter().all(|v| *v == 0.0) {
            continue;
        }
        let base = choose_base(n, 2, &mut rng).unwrap();
        let cone = ConeParams {
            half_angle: 0.4,
            beta: 1.0 + (round % 3) as f64,
            eps: ANGLE_EPS,
            direction: g,
        };
        let a = sample_cone(n, &base, &cone, &mut rng).unwrap();
        for i in 0..n {
            if base.indices().contains(&i) {
                continue;
            }
            for (j, &bj) in base.indices().iter().enumerate() {
                let (lo, hi) = cone_interval(&cone, i, bj);
                assert!(lo >= -FRAC_PI_2 && hi <= FRAC_PI_2);
                let angle = a.get(i, j).atan();
                assert!(
                    angle >= lo - 1e-12 && angle <= hi + 1e-12,
                    "angle {angle} outside [{lo}, {hi}]"
                );
                draws += 1;
            }
        }
    }
    assert!(draws >= 10_000, "{draws}");
}

/// Kolmogorov-Smirnov check that vanilla slope angles are uniform on
/// `(-pi/2, pi/2)`.
#[test]
fn vanilla_angles_are_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let base = BaseIndexSet::new(4, vec![1]).unwrap();
    let mut u: Vec<f64> = Vec::new();
    for _ in 0..5000 {
        let a = sample_vanilla(4, &base, &mut rng);
        for i in [0, 2, 3] {
            u.push(a.get(i, 0).atan() / std::f64::consts::PI + 0.5);
        }
    }
    u.sort_by(f64::total_cmp);
    let m = u.len() as f64;
    let d = u
        .iter()
        .enumerate()
        .map(|(k, v)| ((k as f64 + 1.0) / m - v).max(v - k as f64 / m))
        .fold(0.0, f64::max);
    // 1% critical value 1.63 / sqrt(m)
    assert!(d < 1.63 / m.sqrt(), "KS statistic {d}");
}
