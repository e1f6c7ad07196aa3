//! Numerical clutter rank and sampling-aperture rank estimators.
//!
//! A block observes clutter through a set of sampling instants (or positions)
//! at a single carrier. For a band of extent `B` and an aperture of span `S`
//! the Gramian has roughly `⌈B·S⌉ + 1` significant eigenvalues. Gaps wider
//! than the Nyquist interval `1/B` decouple the aperture into sub-apertures
//! whose counts add.

use serde::{Deserialize, Serialize};

use crate::covariance::{
    compress_blocks, compressed_block_gramians, partition_blocks, BlockGramian, ClutterGramian,
    ClutterRegion, FrequencyBlock, Provenance,
};
use crate::error::{Error, Result};
use crate::fdcm::{AugmentedFdcm, WaveformConfig, WaveformKind};
use crate::linalg::hermitian_eigenvalues;
use crate::SPEED_OF_LIGHT;

/// Default eigenvalue threshold relative to the largest eigenvalue.
pub const DEFAULT_REL_TOL: f64 = 1e-2;

/// Number of eigenvalues above `rel_tol × max`.
pub fn numerical_rank(gramian: &ClutterGramian, rel_tol: f64) -> Result<usize> {
    let values = hermitian_eigenvalues(&gramian.matrix)?;
    let max = values.last().copied().unwrap_or(0.0);
    Ok(count_above(&values, rel_tol * max, max))
}

fn count_above(values: &[f64], threshold: f64, max: f64) -> usize {
    if max <= 0.0 {
        return 0;
    }
    values.iter().filter(|&&v| v > threshold).count()
}

/// Ranks of a set of block Gramians against one global threshold.
///
/// The threshold is `rel_tol` times the largest eigenvalue over all blocks,
/// so the total equals the rank of the assembled block-diagonal matrix.
pub fn block_ranks(blocks: &[BlockGramian], rel_tol: f64) -> Result<Vec<usize>> {
    let spectra = blocks
        .iter()
        .map(|b| hermitian_eigenvalues(&b.gramian.matrix))
        .collect::<Result<Vec<_>>>()?;
    let max = spectra
        .iter()
        .filter_map(|s| s.last().copied())
        .fold(0.0, f64::max);
    Ok(spectra
        .iter()
        .map(|s| count_above(s, rel_tol * max, max))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApertureKind {
    /// Sampling instants in seconds; the band is a velocity extent.
    Temporal,
    /// Effective positions in meters; the band is a direction-sine extent.
    Spatial,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApertureSplit {
    pub sub_apertures: Vec<Vec<f64>>,
    /// Nyquist interval; gaps larger than this separate sub-apertures.
    pub threshold: f64,
}

impl ApertureSplit {
    pub fn len(&self) -> usize {
        self.sub_apertures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sub_apertures.is_empty()
    }
}

/// Nyquist interval `c/(2·f·⟨V⟩)` (temporal) or `c/(f·⟨A⟩)` (spatial).
pub fn nyquist_interval(extent: f64, carrier: f64, kind: ApertureKind) -> f64 {
    let band = match kind {
        ApertureKind::Temporal => 2.0 * carrier * extent / SPEED_OF_LIGHT,
        ApertureKind::Spatial => carrier * extent / SPEED_OF_LIGHT,
    };
    if band > 0.0 {
        1.0 / band
    } else {
        f64::INFINITY
    }
}

pub fn split_aperture(
    aperture: &[f64],
    extent: f64,
    carrier: f64,
    kind: ApertureKind,
) -> ApertureSplit {
    let threshold = nyquist_interval(extent, carrier, kind);
    let mut sub_apertures: Vec<Vec<f64>> = Vec::new();
    for &x in aperture {
        match sub_apertures.last_mut() {
            Some(cur) if x - cur[cur.len() - 1] <= threshold => cur.push(x),
            _ => sub_apertures.push(vec![x]),
        }
    }
    ApertureSplit {
        sub_apertures,
        threshold,
    }
}

/// `⌈x⌉ + 1`, treating values within rounding noise of an integer as that integer.
fn dimension_count(x: f64) -> usize {
    let guard = 1e-9 * x.abs().max(1.0);
    (x - guard).ceil().max(0.0) as usize + 1
}

/// Three-way minimum shared by the temporal and spatial estimators.
fn aperture_estimate(aperture: &[f64], extent: f64, carrier: f64, kind: ApertureKind) -> usize {
    if aperture.is_empty() {
        return 0;
    }
    let band = match kind {
        ApertureKind::Temporal => 2.0 * carrier * extent / SPEED_OF_LIGHT,
        ApertureKind::Spatial => carrier * extent / SPEED_OF_LIGHT,
    };
    let span = aperture[aperture.len() - 1] - aperture[0];
    let whole = dimension_count(band * span);
    let split = split_aperture(aperture, extent, carrier, kind);
    let pieces: usize = split
        .sub_apertures
        .iter()
        .map(|s| dimension_count(band * (s[s.len() - 1] - s[0])))
        .sum();
    aperture.len().min(whole).min(pieces)
}

/// Velocity-rank estimate of a block.
pub fn u_vm(block: &FrequencyBlock, cfg: &WaveformConfig, region: &ClutterRegion) -> usize {
    if region.ridge_speed.is_some() {
        return 1;
    }
    aperture_estimate(
        &block.temporal_aperture,
        region.velocity.width(),
        cfg.frequency(block.code),
        ApertureKind::Temporal,
    )
}

/// Effective spatial aperture: physical positions scaled by the phase convention.
pub fn effective_spatial_aperture(block: &FrequencyBlock, cfg: &WaveformConfig) -> Vec<f64> {
    let s = cfg.direction_scale();
    block.spatial_aperture.iter().map(|x| s * x).collect()
}

/// Direction-rank estimate of a block over its spatial aperture.
pub fn u_am(block: &FrequencyBlock, cfg: &WaveformConfig, region: &ClutterRegion) -> usize {
    aperture_estimate(
        &effective_spatial_aperture(block, cfg),
        region.direction.width(),
        cfg.frequency(block.code),
        ApertureKind::Spatial,
    )
}

/// Direction-rank estimate over the platform-embedded aperture.
pub fn u_em(block: &FrequencyBlock, cfg: &WaveformConfig, region: &ClutterRegion) -> Result<usize> {
    let aperture = block
        .embedded_aperture
        .as_ref()
        .ok_or_else(|| Error::KindMismatch {
            expected: "stap".into(),
            found: cfg.kind.name().into(),
        })?;
    Ok(aperture_estimate(
        aperture,
        region.direction.width(),
        cfg.frequency(block.code),
        ApertureKind::Spatial,
    ))
}

/// Direction factor estimate, using the embedded aperture under ridge coupling.
fn direction_estimate(
    block: &FrequencyBlock,
    cfg: &WaveformConfig,
    region: &ClutterRegion,
) -> Result<usize> {
    if region.ridge_speed.is_some() {
        u_em(block, cfg, region)
    } else {
        Ok(u_am(block, cfg, region))
    }
}

/// `(min{K_m, U_V + U_A − 1}, min{K_m, U_V·U_A})`.
pub fn u_cm(
    block: &FrequencyBlock,
    cfg: &WaveformConfig,
    region: &ClutterRegion,
) -> Result<(usize, usize)> {
    let uv = u_vm(block, cfg, region);
    let ua = direction_estimate(block, cfg, region)?;
    Ok(hadamard_bounds(block.dim(), uv, ua))
}

pub fn hadamard_bounds(dim: usize, uv: usize, ua: usize) -> (usize, usize) {
    let lower = (uv + ua).saturating_sub(1).min(dim);
    let upper = (uv * ua).min(dim);
    (lower, upper)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockRank {
    pub code: i64,
    /// Block dimension `K_m`.
    pub dim: usize,
    /// Distinct sampling coordinates after merging coincident samples.
    pub distinct_samples: usize,
    pub rank: usize,
    pub u_v: usize,
    pub u_a: usize,
    pub lower: usize,
    pub upper: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub numerical_rank: usize,
    pub lower_bound: usize,
    pub upper_bound: usize,
    pub per_block: Vec<BlockRank>,
    /// Numerical rank over the measurement dimension.
    pub ncr: f64,
    pub tolerance_used: f64,
    pub dimension: usize,
}

impl RankReport {
    /// Sum of distinct sampling coordinates over blocks.
    pub fn distinct_samples(&self) -> usize {
        self.per_block.iter().map(|b| b.distinct_samples).sum()
    }
}

/// Block-wise numerical rank together with the estimator bounds.
pub fn clutter_rank_bounds(
    cfg: &WaveformConfig,
    afdcm: &AugmentedFdcm,
    region: &ClutterRegion,
    rel_tol: f64,
) -> Result<RankReport> {
    region.validate(cfg)?;
    if !region.has_full_range(cfg) {
        return Err(Error::PartialRange);
    }
    let blocks = partition_blocks(cfg, afdcm);
    let gramians = compressed_block_gramians(cfg, &blocks, region, Provenance::Analytic, None)?;
    let ranks = block_ranks(&gramians, rel_tol)?;
    let compressed = compress_blocks(cfg, &blocks, region);
    let mut per_block = Vec::with_capacity(blocks.len());
    for ((b, &rank), c) in blocks.iter().zip(&ranks).zip(&compressed) {
        let u_v = u_vm(b, cfg, region);
        let u_a = direction_estimate(b, cfg, region)?;
        let (lower, upper) = hadamard_bounds(b.dim(), u_v, u_a);
        per_block.push(BlockRank {
            code: b.code,
            dim: b.dim(),
            distinct_samples: c.weights.len(),
            rank,
            u_v,
            u_a,
            lower,
            upper,
        });
    }
    let numerical_rank = ranks.iter().sum();
    let dimension = cfg.dimension();
    Ok(RankReport {
        numerical_rank,
        lower_bound: per_block.iter().map(|b| b.lower).sum(),
        upper_bound: per_block.iter().map(|b| b.upper).sum(),
        per_block,
        ncr: numerical_rank as f64 / dimension as f64,
        tolerance_used: rel_tol,
        dimension,
    })
}

/// Waveform families with a single-factor closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorollaryKind {
    Fda,
    Sf,
    FdMimo,
    Stap,
}

impl CorollaryKind {
    pub fn of(kind: &WaveformKind) -> Option<Self> {
        match kind {
            WaveformKind::Fda => Some(Self::Fda),
            WaveformKind::SteppedFrequency => Some(Self::Sf),
            WaveformKind::FdMimo => Some(Self::FdMimo),
            WaveformKind::Stap { .. } => Some(Self::Stap),
            WaveformKind::General => None,
        }
    }
}

/// Closed-form clutter rank for a specialized waveform.
///
/// Only one factor varies per block: direction for FDA and FD-MIMO, velocity
/// for stepped frequency, and the platform-embedded aperture for STAP.
pub fn corollary_rank(
    kind: CorollaryKind,
    cfg: &WaveformConfig,
    afdcm: &AugmentedFdcm,
    region: &ClutterRegion,
) -> Result<usize> {
    if CorollaryKind::of(&cfg.kind) != Some(kind) {
        return Err(Error::KindMismatch {
            expected: format!("{kind:?}").to_lowercase(),
            found: cfg.kind.name().into(),
        });
    }
    region.validate(cfg)?;
    let blocks = partition_blocks(cfg, afdcm);
    let mut total = 0;
    for b in &blocks {
        total += match kind {
            CorollaryKind::Fda | CorollaryKind::FdMimo => u_am(b, cfg, region),
            CorollaryKind::Sf => u_vm(b, cfg, region),
            CorollaryKind::Stap => u_em(b, cfg, region)?,
        };
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::Interval;
    use crate::fdcm::{adapt_fda, adapt_sf, assign_linear, build_afdcm, RadarParams};
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    fn gramian(m: DMatrix<Complex64>) -> ClutterGramian {
        ClutterGramian {
            matrix: m,
            provenance: Provenance::Analytic,
        }
    }

    #[test]
    fn rank_of_outer_product_and_identity() {
        let u = DMatrix::from_fn(6, 1, |i, _| Complex64::new(i as f64, 1.0));
        assert_eq!(numerical_rank(&gramian(&u * u.adjoint()), 1e-6).unwrap(), 1);
        assert_eq!(
            numerical_rank(&gramian(DMatrix::identity(5, 5)), 1e-6).unwrap(),
            5
        );
        assert_eq!(
            numerical_rank(&gramian(DMatrix::zeros(3, 3)), 1e-6).unwrap(),
            0
        );
    }

    #[test]
    fn split_examples() {
        let ap: Vec<f64> = (0..10).map(f64::from).collect();
        let s = split_aperture(&ap, 0.5, SPEED_OF_LIGHT, ApertureKind::Spatial);
        assert_eq!(s.threshold, 2.0);
        assert_eq!(s.len(), 1);
        let mut ap2: Vec<f64> = (0..5).map(f64::from).collect();
        ap2.extend((0..5).map(|i| 24.0 + i as f64));
        let s = split_aperture(&ap2, 0.5, SPEED_OF_LIGHT, ApertureKind::Spatial);
        assert_eq!(s.len(), 2);
        assert_eq!(s.sub_apertures.concat(), ap2);
        assert!(split_aperture(&[], 1.0, 1.0, ApertureKind::Temporal).is_empty());
        let s = split_aperture(&ap, 0.0, 1e9, ApertureKind::Temporal);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn dimension_count_guards_rounding() {
        assert_eq!(dimension_count(0.0), 1);
        assert_eq!(dimension_count(3.0 + 1e-13), 4);
        assert_eq!(dimension_count(3.01), 5);
    }

    #[test]
    fn u_vm_trivial_cases() {
        let p = RadarParams::x_band();
        let cfg = adapt_sf(&p, 1, &[0; 16]).unwrap();
        let af = build_afdcm(&cfg);
        let blocks = partition_blocks(&cfg, &af);
        let zero = ClutterRegion::normalized(&cfg, Some(0.0), None).unwrap();
        assert_eq!(u_vm(&blocks[0], &cfg, &zero), 1);
        let full = ClutterRegion::normalized(&cfg, Some(1.0), None).unwrap();
        assert_eq!(u_vm(&blocks[0], &cfg, &full), 16);
        assert_eq!(u_am(&blocks[0], &cfg, &full), 1);

        let single = adapt_sf(&p, 1, &[0]).unwrap();
        let sb = partition_blocks(&single, &build_afdcm(&single));
        let r = ClutterRegion::normalized(&single, Some(1.0), None).unwrap();
        assert_eq!(u_vm(&sb[0], &single, &r), 1);
    }

    #[test]
    fn hadamard_bounds_examples() {
        assert_eq!(hadamard_bounds(100, 2, 2), (3, 4));
        assert_eq!(hadamard_bounds(100, 1, 7), (7, 7));
        assert_eq!(hadamard_bounds(5, 4, 4), (5, 5));
    }

    #[test]
    fn fda_fixed_corollary_matches_single_block_form() {
        let mut p = RadarParams::x_band();
        p.tx_spacing = p.wavelength() / 4.0;
        for &l in &[16usize, 64] {
            let cfg = adapt_fda(&p, 1, &vec![0; l]).unwrap();
            let af = build_afdcm(&cfg);
            let region = ClutterRegion::normalized(&cfg, None, Some(1.0)).unwrap();
            let width = region.direction.width();
            let expect = l.min(
                (2.0 / SPEED_OF_LIGHT * cfg.carrier * width * cfg.tx_spacing * (l - 1) as f64
                    - 1e-9)
                    .ceil() as usize
                    + 1,
            );
            assert_eq!(
                corollary_rank(CorollaryKind::Fda, &cfg, &af, &region).unwrap(),
                expect
            );
            assert!(corollary_rank(CorollaryKind::Sf, &cfg, &af, &region).is_err());
        }
    }

    #[test]
    fn lsf_no_split_below_alias_extent() {
        let p = RadarParams::x_band();
        for &m in &[4usize, 8] {
            let cfg = adapt_sf(&p, 1, &assign_linear(64, m)).unwrap();
            let af = build_afdcm(&cfg);
            let limit = SPEED_OF_LIGHT / (2.0 * cfg.pri * cfg.carrier * m as f64);
            let region = ClutterRegion {
                velocity: Interval::centered(0.95 * limit),
                ..ClutterRegion::normalized(&cfg, Some(0.0), None).unwrap()
            };
            for b in partition_blocks(&cfg, &af) {
                let s = split_aperture(
                    &b.temporal_aperture,
                    region.velocity.width(),
                    cfg.frequency(b.code),
                    ApertureKind::Temporal,
                );
                assert_eq!(s.len(), 1, "code {}", b.code);
            }
        }
    }

    #[test]
    fn partial_range_is_rejected() {
        let p = RadarParams::x_band();
        let cfg = adapt_sf(&p, 1, &[0, 1]).unwrap();
        let af = build_afdcm(&cfg);
        let mut region = ClutterRegion::normalized(&cfg, Some(0.5), None).unwrap();
        region.range.hi *= 0.5;
        assert!(matches!(
            clutter_rank_bounds(&cfg, &af, &region, DEFAULT_REL_TOL),
            Err(Error::PartialRange)
        ));
    }
}
