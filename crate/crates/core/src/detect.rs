//! Monte Carlo detection of a point target in clutter with an MVDR filter.
//!
//! Clutter is a grid of voxels over the clutter region with i.i.d. circular
//! Gaussian amplitudes. The echo of a trial is the voxel sum plus white
//! noise, plus the target under H1. The detector is square-law on the MVDR
//! output and the threshold is the empirical `1 − pfa` quantile under H0.
//!
//! The voxel grid spans the full range interval with more range cells than
//! the code span, so samples on different carriers are uncorrelated and the
//! clutter covariance is block diagonal. The filter is solved block by block.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{grid_counts, partition_blocks, ClutterRegion, FrequencyBlock};
use crate::error::{Error, Result};
use crate::fdcm::{build_afdcm, WaveformConfig};
use crate::linalg::{inner, solve_hermitian_pd};
use crate::metrics::from_db;
use crate::steering::{cis_neg, sub_direction_steering, sub_velocity_steering, SteeringModel};
use crate::SPEED_OF_LIGHT;

/// Trials per independently seeded stream.
const CHUNK: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub range: f64,
    pub velocity: f64,
    pub direction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionScenario {
    pub cfg: WaveformConfig,
    /// Clutter region; its grid counts define the voxels.
    pub region: ClutterRegion,
    pub target: Target,
    /// Matched-filter SNR values `|a|²‖u‖²/σ²` in dB.
    pub snr_db: Vec<f64>,
    pub pfa: f64,
    pub trials_h0: usize,
    pub trials_h1: usize,
    /// Total clutter power per sample relative to the noise power, in dB.
    pub clutter_to_noise_db: f64,
    pub noise_power: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdPoint {
    pub snr_db: f64,
    pub pd: f64,
    pub pfa_achieved: f64,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub threshold: f64,
    /// Exceedance rate on an H0 set independent of the threshold calibration.
    pub pfa_achieved: f64,
    pub points: Vec<PdPoint>,
}

/// Standard deviation of a binomial proportion.
pub fn binomial_sigma(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Least-squares non-decreasing fit (pool adjacent violators).
pub fn isotonic_non_decreasing(values: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::new();
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a <= b {
                break;
            }
            blocks.pop();
            let last = blocks.len() - 1;
            blocks[last] = ((a * na as f64 + b * nb as f64) / (na + nb) as f64, na + nb);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(v, n)| std::iter::repeat_n(v, n))
        .collect()
}

impl DetectionScenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        self.cfg.validate()?;
        self.region.validate(&self.cfg)?;
        if !(self.pfa > 0.0 && self.pfa < 1.0) {
            return bad(format!("pfa must lie in (0, 1), got {}", self.pfa));
        }
        if (self.trials_h0 as f64) < 10.0 / self.pfa {
            return bad(format!(
                "{} H0 trials cannot resolve pfa {} (need at least {})",
                self.trials_h0,
                self.pfa,
                (10.0 / self.pfa).ceil()
            ));
        }
        if self.trials_h1 == 0 {
            return bad("trials_h1 must be >= 1".into());
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(Error::NonPositiveNoise(self.noise_power));
        }
        if !self.region.has_full_range(&self.cfg) {
            return Err(Error::PartialRange);
        }
        if self.target_in_clutter() {
            return Err(Error::TargetInClutter(format!(
                "D = {}, v = {}, alpha = {}",
                self.target.range, self.target.velocity, self.target.direction
            )));
        }
        Ok(())
    }

    fn target_in_clutter(&self) -> bool {
        let t = &self.target;
        let r = &self.region;
        if !r.range.contains(t.range) || !r.direction.contains(t.direction) {
            return false;
        }
        match r.ridge_speed {
            Some(vp) => (t.velocity - t.direction * vp).abs() <= 1e-9 * vp.max(1.0),
            None => !self.cfg.has_temporal_aperture() || r.velocity.contains(t.velocity),
        }
    }
}

/// Filter and per-voxel responses shared by all trials.
struct Detector {
    /// `wᴴ·u_vox` for each voxel.
    responses: Vec<Complex64>,
    voxel_power: f64,
    /// MVDR weights, scaled so that `wᴴ·u_target = 1`.
    weights: Vec<Complex64>,
    target_amplitude_unit: f64,
}

fn build_detector(s: &DetectionScenario) -> Result<Detector> {
    let cfg = &s.cfg;
    let afdcm = build_afdcm(cfg);
    let blocks = partition_blocks(cfg, &afdcm);
    let grid = grid_counts(cfg, &afdcm, &s.region);
    let span = (afdcm.codes.last().unwrap() - afdcm.codes.first().unwrap()) as usize;
    if grid.range <= span {
        return Err(Error::InvalidScenario(format!(
            "{} range cells cannot separate a code span of {span}",
            grid.range
        )));
    }
    let (ranges, _) = s.region.range.nodes(grid.range);
    let (dirs, _) = s.region.direction.nodes(grid.direction);
    let vels: Vec<f64> = match s.region.ridge_speed {
        Some(_) => vec![0.0],
        None => s.region.velocity.nodes(grid.velocity).0,
    };
    let cells: Vec<(f64, f64)> = vels
        .iter()
        .flat_map(|&v| dirs.iter().map(move |&a| (v, a)))
        .map(|(v, a)| (s.region.ridge_speed.map_or(v, |vp| a * vp), a))
        .collect();
    let voxels = ranges.len() * cells.len();
    let noise = s.noise_power;
    let voxel_power = from_db(s.clutter_to_noise_db) * noise / voxels as f64;

    let model = SteeringModel::new(cfg, &afdcm);
    let target = model.steering_vector(s.target.range, s.target.velocity, s.target.direction);

    // Per block: clutter covariance over (v, α) cells, filter solve, and the
    // filtered response of every cell.
    let per_block: Vec<(Vec<Complex64>, Vec<Complex64>)> = blocks
        .par_iter()
        .map(|b| {
            block_filter(
                cfg,
                b,
                &cells,
                ranges.len(),
                voxel_power,
                noise,
                &target.values,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let mut raw = vec![Complex64::new(0.0, 0.0); cfg.dimension()];
    for (b, (w, _)) in blocks.iter().zip(&per_block) {
        for (&n, &z) in b.members.iter().zip(w) {
            raw[n] = z;
        }
    }
    let gain = inner(&raw, &target.values);
    if gain.norm() == 0.0 {
        return Err(Error::InvalidScenario(
            "target response vanishes after filtering".into(),
        ));
    }
    let scale = 1.0 / gain.conj();
    let weights: Vec<Complex64> = raw.iter().map(|z| z * scale).collect();

    let mut responses = Vec::with_capacity(voxels);
    for &d in &ranges {
        let phases: Vec<Complex64> = blocks
            .iter()
            .map(|b| cis_neg(4.0 * PI / SPEED_OF_LIGHT * d * cfg.frequency(b.code)))
            .collect();
        for c in 0..cells.len() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (ph, (_, h)) in phases.iter().zip(&per_block) {
                acc += ph * h[c];
            }
            responses.push(acc * scale.conj());
        }
    }
    Ok(Detector {
        responses,
        voxel_power,
        weights,
        target_amplitude_unit: (noise / target.norm_sqr()).sqrt(),
    })
}

/// Returns the unnormalized block filter `R_m⁻¹·u_m` and `wᴴ_m·s_m(cell)` per cell.
fn block_filter(
    cfg: &WaveformConfig,
    b: &FrequencyBlock,
    cells: &[(f64, f64)],
    range_cells: usize,
    voxel_power: f64,
    noise: f64,
    target: &[Complex64],
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let k = b.dim();
    let sub: Vec<Vec<Complex64>> = cells
        .iter()
        .map(|&(v, a)| {
            let sv = sub_velocity_steering(b, cfg, v);
            let sa = sub_direction_steering(b, cfg, a);
            sv.values
                .iter()
                .zip(&sa.values)
                .zip(&b.modulation)
                .map(|((x, y), m)| m * x * y)
                .collect()
        })
        .collect();
    let mut r = DMatrix::<Complex64>::zeros(k, k);
    let p = voxel_power * range_cells as f64;
    for s in &sub {
        for j in 0..k {
            let sj = s[j].conj() * p;
            for i in 0..k {
                r[(i, j)] += s[i] * sj;
            }
        }
    }
    for i in 0..k {
        r[(i, i)] += noise;
    }
    let u = DVector::from_iterator(k, b.members.iter().map(|&n| target[n]));
    let w = solve_hermitian_pd(r, &u)?;
    let w: Vec<Complex64> = w.iter().copied().collect();
    let h = sub.iter().map(|s| inner(&w, s)).collect();
    Ok((w, h))
}

#[inline]
fn complex_normal(rng: &mut ChaCha8Rng, std: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * std, im * std)
}

impl Detector {
    /// Test statistics for `trials` echoes with target amplitude `amp`.
    fn statistics(&self, trials: usize, amp: f64, seed: u64, stream: u64, noise: f64) -> Vec<f64> {
        let chunks = trials.div_ceil(CHUNK);
        let vox_std = (self.voxel_power / 2.0).sqrt();
        let noise_std = (noise / 2.0).sqrt();
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream((stream << 32) | c as u64);
                let n = CHUNK.min(trials - c * CHUNK);
                let mut out = Vec::with_capacity(n);
                for _ in 0..n {
                    let mut y = Complex64::new(0.0, 0.0);
                    for g in &self.responses {
                        y += complex_normal(&mut rng, vox_std) * g;
                    }
                    for w in &self.weights {
                        y += w.conj() * complex_normal(&mut rng, noise_std);
                    }
                    if amp > 0.0 {
                        let phase: f64 = rng.random::<f64>() * 2.0 * PI;
                        y += Complex64::from_polar(amp, phase);
                    }
                    out.push(y.norm_sqr());
                }
                out
            })
            .collect::<Vec<_>>()
            .concat()
    }
}

/// Detection probability at each SNR, with the threshold set for `pfa`.
pub fn simulate_pd(s: &DetectionScenario) -> Result<DetectionResult> {
    s.validate()?;
    let det = build_detector(s)?;
    let noise = s.noise_power;
    let mut h0 = det.statistics(s.trials_h0, 0.0, s.seed, 0, noise);
    h0.sort_by(f64::total_cmp);
    let n = h0.len();
    let exceed = (s.pfa * n as f64).floor() as usize;
    let threshold = h0[n - 1 - exceed.min(n - 1)];
    let check = det.statistics(s.trials_h0, 0.0, s.seed, 1, noise);
    let pfa_achieved = check.iter().filter(|&&t| t > threshold).count() as f64 / n as f64;
    let points = s
        .snr_db
        .iter()
        .enumerate()
        .map(|(i, &snr)| {
            let amp = det.target_amplitude_unit * from_db(snr).sqrt();
            let stats = det.statistics(s.trials_h1, amp, s.seed, 2 + i as u64, noise);
            PdPoint {
                snr_db: snr,
                pd: stats.iter().filter(|&&t| t > threshold).count() as f64 / s.trials_h1 as f64,
                pfa_achieved,
                trials: s.trials_h1,
            }
        })
        .collect();
    Ok(DetectionResult {
        threshold,
        pfa_achieved,
        points,
    })
}

/// Detection probability at each listed target direction.
///
/// Directions inside the clutter region are skipped.
pub fn pd_direction_map(
    s: &DetectionScenario,
    directions: &[f64],
) -> Result<Vec<(f64, DetectionResult)>> {
    let mut out = Vec::new();
    for &a in directions {
        let mut sc = s.clone();
        sc.target.direction = a;
        if sc.target_in_clutter() {
            continue;
        }
        out.push((a, simulate_pd(&sc)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::GridCounts;
    use crate::fdcm::{adapt_fda, assign_linear, RadarParams};

    fn scenario(snr: Vec<f64>) -> DetectionScenario {
        let mut p = RadarParams::x_band();
        p.tx_spacing = p.wavelength() / 4.0;
        let cfg = adapt_fda(&p, 1, &assign_linear(16, 2)).unwrap();
        let region = ClutterRegion::normalized(&cfg, None, Some(0.125))
            .unwrap()
            .with_grid(GridCounts {
                range: 4,
                velocity: 1,
                direction: 32,
            });
        DetectionScenario {
            cfg,
            region,
            target: Target {
                range: 100.0,
                velocity: 0.0,
                direction: 0.5,
            },
            snr_db: snr,
            pfa: 1e-2,
            trials_h0: 20_000,
            trials_h1: 2_000,
            clutter_to_noise_db: 30.0,
            noise_power: 1.0,
            seed: 11,
        }
    }

    #[test]
    fn large_snr_detects() {
        let r = simulate_pd(&scenario(vec![60.0])).unwrap();
        assert!(r.points[0].pd > 0.999);
    }

    #[test]
    fn zero_target_matches_pfa() {
        let s = scenario(vec![f64::NEG_INFINITY]);
        let r = simulate_pd(&s).unwrap();
        let pd = r.points[0].pd;
        assert!(
            (pd - s.pfa).abs() <= 3.0 * binomial_sigma(s.pfa, s.trials_h1),
            "{pd}"
        );
        assert!((r.pfa_achieved - s.pfa).abs() <= 3.0 * binomial_sigma(s.pfa, s.trials_h0));
    }

    #[test]
    fn reproducible() {
        let s = scenario(vec![5.0, 10.0]);
        assert_eq!(simulate_pd(&s).unwrap(), simulate_pd(&s).unwrap());
    }

    #[test]
    fn rejects_target_in_clutter_and_bad_pfa() {
        let mut s = scenario(vec![10.0]);
        s.target.direction = 0.0;
        assert!(matches!(simulate_pd(&s), Err(Error::TargetInClutter(_))));
        let mut s = scenario(vec![10.0]);
        s.pfa = 1e-4;
        assert!(simulate_pd(&s).is_err());
    }

    #[test]
    fn isotonic_fit() {
        assert_eq!(
            isotonic_non_decreasing(&[1.0, 3.0, 2.0, 4.0]),
            vec![1.0, 2.5, 2.5, 4.0]
        );
        assert_eq!(isotonic_non_decreasing(&[0.1, 0.2]), vec![0.1, 0.2]);
    }
}
