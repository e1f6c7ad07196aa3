//! Range, velocity and direction steering vectors.
//!
//! The phase of sample `(p, q, l, r)` with carrier `f = f_c + k·Δf` is
//! `−(4π/c)·f·(D + v·T·p) − (2π/c)·f·α·(d_T·l + d_R·r)`. Under the monostatic
//! FDA convention the direction term is `−(4π/c)·f·α·d_T·l`.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::covariance::FrequencyBlock;
use crate::fdcm::{samples, AugmentedFdcm, Sample, WaveformConfig};
use crate::SPEED_OF_LIGHT;

#[inline]
pub(crate) fn cis_neg(phase: f64) -> Complex64 {
    let (s, c) = phase.sin_cos();
    Complex64::new(c, -s)
}

/// Measurement-domain steering vector in layout order.
#[derive(Clone, Debug, PartialEq)]
pub struct SteeringVector {
    pub values: Vec<Complex64>,
}

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_dvector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.values)
    }

    pub fn hadamard(&self, other: &SteeringVector) -> SteeringVector {
        SteeringVector {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(Complex64::norm_sqr).sum()
    }
}

/// Steering vector restricted to one frequency block, in member order.
#[derive(Clone, Debug, PartialEq)]
pub struct SubSteeringVector {
    pub values: Vec<Complex64>,
    pub code: i64,
}

/// Precomputed sample table for repeated steering evaluations.
#[derive(Clone, Debug)]
pub struct SteeringModel {
    cfg: WaveformConfig,
    samples: Vec<Sample>,
}

impl SteeringModel {
    pub fn new(cfg: &WaveformConfig, afdcm: &AugmentedFdcm) -> Self {
        Self {
            cfg: cfg.clone(),
            samples: samples(cfg, afdcm),
        }
    }

    pub fn config(&self) -> &WaveformConfig {
        &self.cfg
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn dimension(&self) -> usize {
        self.samples.len()
    }

    fn map(&self, phase: impl Fn(&Sample, f64) -> f64) -> SteeringVector {
        SteeringVector {
            values: self
                .samples
                .iter()
                .map(|s| cis_neg(phase(s, self.cfg.frequency(s.code))))
                .collect(),
        }
    }

    /// `exp(−j(4π/c)·D·f)` per sample, common range phase included.
    pub fn range_factor(&self, range: f64) -> SteeringVector {
        self.map(|_, f| 4.0 * PI / SPEED_OF_LIGHT * range * f)
    }

    pub fn velocity_factor(&self, velocity: f64) -> SteeringVector {
        let t = self.cfg.pri;
        self.map(|s, f| 4.0 * PI / SPEED_OF_LIGHT * t * velocity * f * s.pulse as f64)
    }

    pub fn direction_factor(&self, direction: f64) -> SteeringVector {
        let scale = self.cfg.direction_scale();
        self.map(|s, f| {
            scale * (2.0 * PI / SPEED_OF_LIGHT) * direction * f * self.cfg.position(s.tx, s.rx)
        })
    }

    /// `β ⊙ u_D(D) ⊙ u_V(v) ⊙ u_A(α)`, evaluated in a single pass with the
    /// same per-factor rounding as the separate factors.
    pub fn steering_vector(&self, range: f64, velocity: f64, direction: f64) -> SteeringVector {
        let k = 2.0 * PI / SPEED_OF_LIGHT;
        let t = self.cfg.pri;
        let scale = self.cfg.direction_scale();
        SteeringVector {
            values: self
                .samples
                .iter()
                .map(|s| {
                    let f = self.cfg.frequency(s.code);
                    let d = cis_neg(2.0 * k * range * f);
                    let v = cis_neg(2.0 * k * t * velocity * f * s.pulse as f64);
                    let a = cis_neg(scale * k * direction * f * self.cfg.position(s.tx, s.rx));
                    s.modulation * d * v * a
                })
                .collect(),
        }
    }

    pub fn modulation(&self) -> SteeringVector {
        SteeringVector {
            values: self.samples.iter().map(|s| s.modulation).collect(),
        }
    }
}

pub fn sub_velocity_steering(
    block: &FrequencyBlock,
    cfg: &WaveformConfig,
    velocity: f64,
) -> SubSteeringVector {
    let f = cfg.frequency(block.code);
    let rate = 4.0 * PI / SPEED_OF_LIGHT * velocity * f * cfg.pri;
    SubSteeringVector {
        values: block
            .pulses
            .iter()
            .map(|&p| cis_neg(rate * p as f64))
            .collect(),
        code: block.code,
    }
}

pub fn sub_direction_steering(
    block: &FrequencyBlock,
    cfg: &WaveformConfig,
    direction: f64,
) -> SubSteeringVector {
    let f = cfg.frequency(block.code);
    let rate = cfg.direction_scale() * 2.0 * PI / SPEED_OF_LIGHT * direction * f;
    SubSteeringVector {
        values: block.positions.iter().map(|&x| cis_neg(rate * x)).collect(),
        code: block.code,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::partition_blocks;
    use crate::fdcm::{adapt_fda, adapt_fdmimo, adapt_sf, build_afdcm, CodeMatrix, RadarParams};

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn model(cfg: &WaveformConfig) -> SteeringModel {
        SteeringModel::new(cfg, &build_afdcm(cfg))
    }

    #[test]
    fn zero_arguments_give_ones() {
        let p = RadarParams::x_band();
        let cfg = WaveformConfig::general(
            &p,
            3,
            2,
            2,
            2,
            CodeMatrix::from_rows(&[vec![0, 1], vec![2, 0], vec![1, 1]]).unwrap(),
        )
        .unwrap();
        let m = model(&cfg);
        for v in [
            m.range_factor(0.0),
            m.velocity_factor(0.0),
            m.direction_factor(0.0),
            m.steering_vector(0.0, 0.0, 0.0),
        ] {
            assert!(v.values.iter().all(|&z| z == Complex64::new(1.0, 0.0)));
        }
    }

    #[test]
    fn range_ambiguity_leaves_common_phase() {
        let p = RadarParams::x_band();
        let cfg = adapt_sf(&p, 2, &[0, 3, 1, 2]).unwrap();
        let m = model(&cfg);
        let d = cfg.unambiguous_range();
        let common = cis_neg(4.0 * PI * cfg.carrier * d / SPEED_OF_LIGHT);
        for (a, b) in m
            .range_factor(d)
            .values
            .iter()
            .zip(m.range_factor(0.0).values)
        {
            assert!(close(*a, b * common, 1e-7));
        }
    }

    #[test]
    fn range_phase_of_code_three() {
        let p = RadarParams::x_band();
        let cfg = adapt_sf(&p, 1, &[0, 3]).unwrap();
        let m = model(&cfg);
        for (den, expect) in [(16.0, 0.75 * PI), (8.0, 1.5 * PI)] {
            let d = SPEED_OF_LIGHT / (den * cfg.freq_step);
            let u = m.range_factor(d);
            let common = cis_neg(4.0 * PI * cfg.carrier * d / SPEED_OF_LIGHT);
            assert!(close(u.values[1] / common, cis_neg(expect), 1e-6));
            assert!(close(u.values[0] / common, Complex64::new(1.0, 0.0), 1e-6));
        }
    }

    #[test]
    fn velocity_quarter_cycle() {
        let p = RadarParams::x_band();
        let cfg = adapt_sf(&p, 1, &[0, 0]).unwrap();
        let m = model(&cfg);
        let v = SPEED_OF_LIGHT / (8.0 * cfg.carrier * cfg.pri);
        let u = m.velocity_factor(v);
        assert!(close(u.values[1] / u.values[0], cis_neg(0.5 * PI), 1e-12));
        let fda = adapt_fda(&p, 1, &[0, 1, 2]).unwrap();
        assert!(model(&fda)
            .velocity_factor(123.0)
            .values
            .iter()
            .all(|&z| z == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn direction_quarter_cycle() {
        let p = RadarParams::x_band();
        let cfg = adapt_fdmimo(&p, 1, 1, &[0, 0]).unwrap();
        let m = model(&cfg);
        let alpha = SPEED_OF_LIGHT / (4.0 * cfg.tx_spacing * cfg.carrier);
        let u = m.direction_factor(alpha);
        assert!(close(u.values[1] / u.values[0], cis_neg(0.5 * PI), 1e-12));
        let sf = adapt_sf(&p, 1, &[0, 1]).unwrap();
        assert!(model(&sf)
            .direction_factor(0.7)
            .values
            .iter()
            .all(|&z| z == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn fda_direction_uses_two_way_phase() {
        let p = RadarParams::x_band();
        let cfg = adapt_fda(&p, 1, &[0, 0]).unwrap();
        let m = model(&cfg);
        let alpha = SPEED_OF_LIGHT / (8.0 * cfg.tx_spacing * cfg.carrier);
        let u = m.direction_factor(alpha);
        assert!(close(u.values[1] / u.values[0], cis_neg(0.5 * PI), 1e-12));
    }

    #[test]
    fn siso_reduces_to_doppler_steering() {
        let p = RadarParams::x_band();
        let cfg = adapt_sf(&p, 1, &[0; 8]).unwrap();
        let m = model(&cfg);
        let (d, v) = (1234.5, 17.0);
        let u = m.steering_vector(d, v, 0.3);
        let common = u.values[0];
        for (p_idx, z) in u.values.iter().enumerate() {
            let expect =
                cis_neg(4.0 * PI * cfg.carrier * v * cfg.pri * p_idx as f64 / SPEED_OF_LIGHT);
            assert!(close(z / common, expect, 1e-9));
        }
    }

    #[test]
    fn sub_steering_examples() {
        let p = RadarParams::x_band();
        let cfg =
            WaveformConfig::general(&p, 4, 1, 1, 1, CodeMatrix::column(&[0, 1, 1, 0]).unwrap())
                .unwrap();
        let blocks = partition_blocks(&cfg, &build_afdcm(&cfg));
        let b0 = &blocks[0];
        assert_eq!(b0.temporal_aperture, vec![0.0, 3.0 * cfg.pri]);
        let v = SPEED_OF_LIGHT / (8.0 * cfg.frequency(0) * cfg.pri);
        let s = sub_velocity_steering(b0, &cfg, v);
        assert!(close(s.values[0], Complex64::new(1.0, 0.0), 1e-12));
        assert!(close(s.values[1], cis_neg(1.5 * PI), 1e-9));
        assert!(sub_velocity_steering(b0, &cfg, 0.0)
            .values
            .iter()
            .all(|&z| z == Complex64::new(1.0, 0.0)));
        assert!(sub_direction_steering(b0, &cfg, 0.4)
            .values
            .iter()
            .all(|&z| z == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn mimo_sub_direction_phases_are_linear_in_position() {
        let mut p = RadarParams::x_band();
        p.tx_spacing = 2.0 * p.rx_spacing;
        let cfg = adapt_fdmimo(&p, 2, 1, &[0, 0]).unwrap();
        let blocks = partition_blocks(&cfg, &build_afdcm(&cfg));
        let b = &blocks[0];
        let d = p.rx_spacing;
        assert_eq!(b.spatial_aperture, vec![0.0, d, 2.0 * d, 3.0 * d]);
        let alpha = 0.1;
        let s = sub_direction_steering(b, &cfg, alpha);
        let rate = 2.0 * PI / SPEED_OF_LIGHT * alpha * cfg.frequency(0);
        for (z, &x) in s.values.iter().zip(&b.positions) {
            assert!(close(*z, cis_neg(rate * x), 1e-12));
        }
    }
}
