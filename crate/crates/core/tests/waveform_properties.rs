mod common;

use fdclutter::covariance::partition_blocks;
use fdclutter::fdcm::{
    adapt_fda, adapt_fdmimo, adapt_sf, adapt_stap, assign_linear, build_afdcm, samples,
    stretched_sum, CodeMatrix,
};
use fdclutter::steering::{sub_direction_steering, sub_velocity_steering, SteeringModel};
use fdclutter::SPEED_OF_LIGHT;
use num_complex::Complex64;
use proptest::prelude::*;

fn codes(len: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(0i64..8, 1..=len)
}

proptest! {
    #![proptest_config(common::config(64))]

    #[test]
    fn stretched_sum_is_associative_as_multiset(a in codes(4), b in codes(4), c in codes(4)) {
        let row = |v: &[i64]| CodeMatrix::row(v).unwrap();
        let left = stretched_sum(&stretched_sum(&row(&a), &row(&b)), &row(&c));
        let right = stretched_sum(&row(&a), &stretched_sum(&row(&b), &row(&c)));
        let mut l = left.as_slice().to_vec();
        let mut r = right.as_slice().to_vec();
        l.sort_unstable();
        r.sort_unstable();
        prop_assert_eq!(l, r);
    }

    #[test]
    fn augmented_rows_are_offset_by_subband(
        pulses in 1usize..6, tx in 1usize..5, q in 1usize..5, m in 1usize..6, seed in any::<u64>()
    ) {
        let cfg = common::random_general(pulses, tx, 1, q, m, seed);
        let af = build_afdcm(&cfg);
        for p in 0..pulses {
            for s in 0..q {
                for l in 0..tx {
                    prop_assert_eq!(af.g_q.get(p * q + s, l) - af.g_q.get(p * q, l), s as i64);
                }
            }
        }
    }

    #[test]
    fn adapters_report_their_dimension(
        n in 1usize..9, rx in 1usize..4, pulses in 1usize..5, q in 1usize..4, m in 1usize..5, seed in any::<u64>()
    ) {
        let p = common::x_band();
        let g = fdclutter::fdcm::assign_random(n, m, seed);
        let cfgs = [
            adapt_fda(&p, q, &g).unwrap(),
            adapt_sf(&p, q, &g).unwrap(),
            adapt_fdmimo(&p, rx, q, &g).unwrap(),
            adapt_stap(&p, rx, pulses, q, &g, 10.0).unwrap(),
        ];
        for cfg in &cfgs {
            let expected = cfg.pulses * cfg.subbands * cfg.tx * cfg.rx;
            prop_assert_eq!(cfg.dimension(), expected);
            prop_assert_eq!(samples(cfg, &build_afdcm(cfg)).len(), expected);
        }
    }

    #[test]
    fn linear_assignment_is_balanced(m in 1usize..9, reps in 1usize..9) {
        let g = assign_linear(m * reps, m);
        for code in 0..m as i64 {
            prop_assert_eq!(g.iter().filter(|&&c| c == code).count(), reps);
        }
    }

    #[test]
    fn steering_vector_factorizes(
        pulses in 1usize..5, tx in 1usize..5, rx in 1usize..3, q in 1usize..3, m in 1usize..5,
        seed in any::<u64>(), d in 0.0f64..1.0, v in -0.5f64..0.5, a in -0.5f64..0.5,
        phases in prop::collection::vec(0.0f64..6.3, 64)
    ) {
        let cfg = common::random_general(pulses, tx, rx, q, m, seed);
        let beta: Vec<Complex64> = (0..cfg.pulses * cfg.tx * cfg.subbands)
            .map(|i| Complex64::from_polar(1.0 + 0.1 * (i % 3) as f64, phases[i % phases.len()]))
            .collect();
        let cfg = cfg.with_modulation(beta).unwrap();
        let model = SteeringModel::new(&cfg, &build_afdcm(&cfg));
        let (d, v, a) = (
            d * cfg.unambiguous_range(),
            v * cfg.unambiguous_velocity_extent(),
            a * cfg.unambiguous_direction_extent(),
        );
        let full = model.steering_vector(d, v, a);
        let product = model
            .modulation()
            .hadamard(&model.range_factor(d))
            .hadamard(&model.velocity_factor(v))
            .hadamard(&model.direction_factor(a));
        for (x, y) in full.values.iter().zip(&product.values) {
            prop_assert!((x - y).norm() <= 8.0 * f64::EPSILON * y.norm().max(1.0));
        }
    }

    #[test]
    fn block_restriction_matches_sub_steering(
        pulses in 1usize..5, tx in 1usize..5, rx in 1usize..3, q in 1usize..3, m in 1usize..5,
        seed in any::<u64>(), d in 0.0f64..1.0, v in -0.5f64..0.5, a in -0.5f64..0.5
    ) {
        let cfg = common::random_general(pulses, tx, rx, q, m, seed);
        let af = build_afdcm(&cfg);
        let model = SteeringModel::new(&cfg, &af);
        let (d, v, a) = (
            d * cfg.unambiguous_range(),
            v * cfg.unambiguous_velocity_extent(),
            a * cfg.unambiguous_direction_extent(),
        );
        let full = model.steering_vector(d, v, a);
        for b in partition_blocks(&cfg, &af) {
            let f = cfg.frequency(b.code);
            let common = Complex64::from_polar(1.0, -4.0 * std::f64::consts::PI * d * f / SPEED_OF_LIGHT);
            let sv = sub_velocity_steering(&b, &cfg, v);
            let sa = sub_direction_steering(&b, &cfg, a);
            for (k, &i) in b.members.iter().enumerate() {
                let expect = common * sv.values[k] * sa.values[k];
                prop_assert!((full.values[i] - expect).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn unit_modulation_gives_unit_modulus(
        pulses in 1usize..5, tx in 1usize..5, rx in 1usize..3, q in 1usize..3, m in 1usize..5,
        seed in any::<u64>(), d in 0.0f64..200.0, v in -50.0f64..50.0, a in -1.0f64..1.0
    ) {
        let cfg = common::random_general(pulses, tx, rx, q, m, seed);
        let model = SteeringModel::new(&cfg, &build_afdcm(&cfg));
        for z in model.steering_vector(d, v, a).values {
            prop_assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }
}
