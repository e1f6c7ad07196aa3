mod common;

use fdclutter::covariance::{ClutterRegion, GridCounts};
use fdclutter::detect::{
    binomial_sigma, isotonic_non_decreasing, simulate_pd, DetectionScenario, Target,
};
use fdclutter::fdcm::{adapt_fda, assign_random, RadarParams};
use proptest::prelude::*;

fn scenario(m: usize, seed: u64) -> DetectionScenario {
    let mut p = RadarParams::x_band();
    p.tx_spacing = p.wavelength() / 4.0;
    let cfg = adapt_fda(&p, 1, &assign_random(16, m, seed)).unwrap();
    let region = ClutterRegion::normalized(&cfg, None, Some(0.125))
        .unwrap()
        .with_grid(GridCounts {
            range: 8,
            velocity: 1,
            direction: 32,
        });
    DetectionScenario {
        cfg,
        region,
        target: Target {
            range: 40.0,
            velocity: 0.0,
            direction: -0.4,
        },
        snr_db: (0..6).map(|i| -6.0 + 4.0 * i as f64).collect(),
        pfa: 1e-2,
        trials_h0: 20_000,
        trials_h1: 2_000,
        clutter_to_noise_db: 30.0,
        noise_power: 1.0,
        seed,
    }
}

proptest! {
    #![proptest_config(common::config(6))]

    #[test]
    fn false_alarm_rate_and_monotone_pd(m in 1usize..5, seed in any::<u64>()) {
        let s = scenario(m, seed);
        let r = simulate_pd(&s).unwrap();
        let sigma0 = binomial_sigma(s.pfa, s.trials_h0);
        prop_assert!((r.pfa_achieved - s.pfa).abs() <= 3.0 * sigma0, "pfa {}", r.pfa_achieved);
        let pd: Vec<f64> = r.points.iter().map(|p| p.pd).collect();
        let fit = isotonic_non_decreasing(&pd);
        for (x, y) in pd.iter().zip(&fit) {
            let sigma = binomial_sigma(y.clamp(1.0 / s.trials_h1 as f64, 1.0 - 1.0 / s.trials_h1 as f64), s.trials_h1);
            prop_assert!((x - y).abs() <= 2.0 * sigma, "{pd:?}");
        }
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let s = scenario(3, 5);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_pd(&s).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(3));
    assert_eq!(a, simulate_pd(&s).unwrap());
}
