mod common;

use fdclutter::covariance::{gramian_analytic, ClutterGramian, Provenance};
use fdclutter::fdcm::{adapt_sf, assign_random, build_afdcm};
use fdclutter::metrics::{fdl, mean_projected_power, scnr_approx_linear, scnr_exact_linear};
use fdclutter::rank::{clutter_rank_bounds, DEFAULT_REL_TOL};
use fdclutter::steering::{SteeringModel, SteeringVector};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn unitary(n: usize, entries: &[f64]) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(n, n, |i, j| {
        let k = 2 * (i * n + j);
        Complex64::new(entries[k % entries.len()], entries[(k + 1) % entries.len()])
    });
    a.qr().q()
}

proptest! {
    #![proptest_config(common::config(64))]

    #[test]
    fn exact_scnr_dominates_projection_for_strong_clutter(
        n in 2usize..8, rank_frac in 0.0f64..1.0,
        entries in prop::collection::vec(-1.0f64..1.0, 128),
        strengths in prop::collection::vec(10.0f64..1e4, 8),
        target in prop::collection::vec(-1.0f64..1.0, 16),
        sigma2 in 0.01f64..10.0
    ) {
        let k = ((n as f64 * rank_frac) as usize).max(1);
        let q = unitary(n, &entries);
        let mut r = DMatrix::<Complex64>::zeros(n, n);
        for (i, s) in strengths.iter().enumerate().take(k) {
            let v = q.column(i);
            r += v * v.adjoint() * Complex64::new(s * sigma2, 0.0);
        }
        let g = ClutterGramian { matrix: (&r + r.adjoint()) * Complex64::new(0.5, 0.0), provenance: Provenance::Analytic };
        let u = SteeringVector { values: (0..n).map(|i| Complex64::new(target[2 * i], target[2 * i + 1])).collect() };
        let exact = scnr_exact_linear(&g, sigma2, &u).unwrap();
        let (approx, used) = scnr_approx_linear(&g, sigma2, &u, 1e-6).unwrap();
        prop_assert_eq!(used, k);
        prop_assert!(exact >= approx - 1e-6 * approx.abs().max(exact.abs()), "{exact} < {approx}");
    }

    #[test]
    fn more_clutter_never_raises_scnr(
        pulses in 2usize..6, tx in 1usize..4, m in 1usize..4, seed in any::<u64>(),
        vel in 0.05f64..1.0, dir in 0.05f64..1.0, sigma2 in 1e-3f64..10.0,
        d in 0.0f64..1.0, v in -0.5f64..0.5, a in -0.5f64..0.5
    ) {
        let cfg = common::random_general(pulses, tx, 2, 1, m, seed);
        let af = build_afdcm(&cfg);
        let g = gramian_analytic(&cfg, &af, &common::region(&cfg, vel, dir)).unwrap();
        let u = SteeringModel::new(&cfg, &af).steering_vector(
            d * cfg.unambiguous_range(),
            v * cfg.unambiguous_velocity_extent(),
            a * cfg.unambiguous_direction_extent(),
        );
        let mut prev = scnr_exact_linear(&g, sigma2, &u).unwrap();
        for scale in [10.0, 100.0, 1000.0] {
            let scaled = ClutterGramian { matrix: &g.matrix * Complex64::new(scale, 0.0), provenance: g.provenance };
            let next = scnr_exact_linear(&scaled, sigma2, &u).unwrap();
            prop_assert!(next <= prev * (1.0 + 1e-9));
            prev = next;
        }
    }

    #[test]
    fn fdl_of_equal_ratios_is_zero(x in 0.0f64..1.0) {
        prop_assert_eq!(fdl(x, x).unwrap(), 0.0);
    }
}

proptest! {
    #![proptest_config(common::config(6))]

    #[test]
    fn projected_power_falls_as_clutter_rank_grows(m in 1usize..5, seed in any::<u64>()) {
        let cfg = adapt_sf(&common::x_band(), 1, &assign_random(32, m, seed)).unwrap();
        let af = build_afdcm(&cfg);
        let model = SteeringModel::new(&cfg, &af);
        let mut prev: Option<(f64, f64)> = None;
        for k in 1..=9 {
            let region = common::region(&cfg, k as f64 / 10.0, 0.0);
            let ncr = clutter_rank_bounds(&cfg, &af, &region, DEFAULT_REL_TOL).unwrap().ncr;
            let g = gramian_analytic(&cfg, &af, &region).unwrap();
            let p = mean_projected_power(&g, &model, DEFAULT_REL_TOL, 256, seed).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            if let Some((n0, p0)) = prev {
                if ncr > n0 {
                    prop_assert!(p <= p0, "ncr {n0} -> {ncr}, power {p0} -> {p}");
                }
            }
            prev = Some((ncr, p));
        }
    }
}
