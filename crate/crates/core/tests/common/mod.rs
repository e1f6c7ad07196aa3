#![allow(dead_code)]

use fdclutter::covariance::ClutterRegion;
use fdclutter::fdcm::{assign_random, CodeMatrix, RadarParams, WaveformConfig};
use fdclutter::presets::mimo_params;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// General waveform with random codes drawn from `{0, …, m−1}` per (pulse, element).
pub fn random_general(
    pulses: usize,
    tx: usize,
    rx: usize,
    subbands: usize,
    m: usize,
    seed: u64,
) -> WaveformConfig {
    let p = mimo_params(rx);
    let g = assign_random(pulses * tx, m, seed);
    WaveformConfig::general(
        &p,
        pulses,
        subbands,
        tx,
        rx,
        CodeMatrix::new(pulses, tx, g).unwrap(),
    )
    .unwrap()
}

pub fn x_band() -> RadarParams {
    RadarParams::x_band()
}

pub fn region(cfg: &WaveformConfig, vel: f64, dir: f64) -> ClutterRegion {
    let v = cfg.has_temporal_aperture().then_some(vel);
    let a = cfg.has_spatial_aperture().then_some(dir);
    ClutterRegion::normalized(cfg, v, a).unwrap()
}

pub fn frobenius_rel(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).norm() / b.norm()
}

/// Fixed-seed proptest configuration so every run draws the same cases.
pub fn config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x5EED),
        failure_persistence: None,
        ..proptest::test_runner::Config::default()
    }
}
