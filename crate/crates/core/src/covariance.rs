//! Clutter regions, frequency blocks and clutter Gramians.
//!
//! The clutter Gramian is `∫∫∫ u(D,v,α)·u(D,v,α)ᴴ dD dv dα` over the clutter
//! region. Across the full unambiguous range interval, samples whose carriers
//! differ integrate to exactly zero, so the Gramian is block diagonal up to a
//! permutation with one block per distinct code.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdcm::{samples, AugmentedFdcm, Sample, WaveformConfig};
use crate::steering::{cis_neg, SteeringModel};
use crate::SPEED_OF_LIGHT;

/// Closed interval; `lo == hi` denotes a single clutter point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    /// Interval of the given width centered on zero.
    pub fn centered(width: f64) -> Self {
        Self {
            lo: -0.5 * width,
            hi: 0.5 * width,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn is_point(&self) -> bool {
        self.hi == self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    fn check(&self, name: &'static str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.hi < self.lo {
            return Err(Error::EmptyInterval {
                name,
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(())
    }

    fn within(&self, outer: &Interval, name: &'static str) -> Result<()> {
        let slack = 1e-9 * outer.width().abs().max(f64::MIN_POSITIVE);
        if self.lo < outer.lo - slack || self.hi > outer.hi + slack {
            return Err(Error::InvalidRegion(format!(
                "{name} interval [{}, {}] exceeds the unambiguous interval [{}, {}]",
                self.lo, self.hi, outer.lo, outer.hi
            )));
        }
        Ok(())
    }

    /// Midpoint grid with `n` cells; a point interval yields one unit-weight node.
    pub fn nodes(&self, n: usize) -> (Vec<f64>, f64) {
        if self.is_point() {
            return (vec![self.lo], 1.0);
        }
        let h = self.width() / n as f64;
        ((0..n).map(|i| self.lo + (i as f64 + 0.5) * h).collect(), h)
    }
}

/// `∫_lo^hi exp(−jκx) dx`, or `exp(−jκx₀)` for a point interval.
pub fn interval_integral(kappa: f64, iv: &Interval) -> Complex64 {
    if iv.is_point() {
        return cis_neg(kappa * iv.lo);
    }
    let w = iv.width();
    let half = 0.5 * kappa * w;
    let sinc = if half.abs() < 1e-8 {
        1.0 - half * half / 6.0
    } else {
        half.sin() / half
    };
    cis_neg(kappa * iv.mid()) * (w * sinc)
}

/// Midpoint Riemann sum of `exp(−jκx)` over `n` cells.
pub fn interval_sum(kappa: f64, iv: &Interval, n: usize) -> Complex64 {
    let (nodes, h) = iv.nodes(n);
    nodes.iter().map(|&x| cis_neg(kappa * x)).sum::<Complex64>() * h
}

/// Grid counts per integrated dimension for discrete Gramians.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCounts {
    pub range: usize,
    pub velocity: usize,
    pub direction: usize,
}

impl GridCounts {
    pub fn uniform(n: usize) -> Self {
        Self {
            range: n,
            velocity: n,
            direction: n,
        }
    }
}

/// Clutter region in range, radial velocity and direction sine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClutterRegion {
    pub range: Interval,
    pub velocity: Interval,
    pub direction: Interval,
    /// Explicit discrete grid; defaults to `max(64, 8 × largest block dimension)`.
    pub grid: Option<GridCounts>,
    /// Platform speed `v_p` coupling clutter velocity to direction (`v = α·v_p`).
    /// When set, `velocity` is ignored.
    pub ridge_speed: Option<f64>,
}

impl ClutterRegion {
    /// Full range interval with normalized velocity and direction extents.
    ///
    /// `None` places all clutter at zero in that dimension. Platform coupling
    /// is taken from the waveform kind.
    pub fn normalized(
        cfg: &WaveformConfig,
        velocity_fraction: Option<f64>,
        direction_fraction: Option<f64>,
    ) -> Result<Self> {
        for f in [velocity_fraction, direction_fraction]
            .into_iter()
            .flatten()
        {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidRegion(format!(
                    "normalized extent {f} outside [0, 1]"
                )));
            }
        }
        let velocity = velocity_fraction
            .map(|f| Interval::centered(f * cfg.unambiguous_velocity_extent()))
            .unwrap_or(Interval::point(0.0));
        let direction = direction_fraction
            .map(|f| Interval::centered(f * cfg.unambiguous_direction_extent()))
            .unwrap_or(Interval::point(0.0));
        let region = Self {
            range: Interval::new(0.0, cfg.unambiguous_range()),
            velocity,
            direction,
            grid: None,
            ridge_speed: cfg.kind.platform_speed(),
        };
        region.validate(cfg)?;
        Ok(region)
    }

    pub fn with_grid(mut self, grid: GridCounts) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn validate(&self, cfg: &WaveformConfig) -> Result<()> {
        self.range.check("range")?;
        self.velocity.check("velocity")?;
        self.direction.check("direction")?;
        self.range
            .within(&Interval::new(0.0, cfg.unambiguous_range()), "range")?;
        self.velocity.within(
            &Interval::centered(cfg.unambiguous_velocity_extent()),
            "velocity",
        )?;
        self.direction.within(
            &Interval::centered(cfg.unambiguous_direction_extent()),
            "direction",
        )?;
        if let Some(g) = self.grid {
            if g.range == 0 || g.velocity == 0 || g.direction == 0 {
                return Err(Error::InvalidRegion("grid counts must be >= 1".into()));
            }
        }
        if let Some(vp) = self.ridge_speed {
            if !(vp.is_finite() && vp > 0.0) {
                return Err(Error::InvalidRegion(format!(
                    "platform speed must be positive, got {vp}"
                )));
            }
        }
        Ok(())
    }

    /// True when the range interval is the whole unambiguous interval.
    pub fn has_full_range(&self, cfg: &WaveformConfig) -> bool {
        let span = cfg.unambiguous_range();
        self.range.lo.abs() <= 1e-9 * span && (self.range.hi - span).abs() <= 1e-9 * span
    }

    /// Integral of one over the range interval (unit mass for a point).
    pub fn range_mass(&self) -> f64 {
        if self.range.is_point() {
            1.0
        } else {
            self.range.width()
        }
    }

    /// Velocity interval actually integrated (a point under ridge coupling).
    fn effective_velocity(&self) -> Interval {
        if self.ridge_speed.is_some() {
            Interval::point(0.0)
        } else {
            self.velocity
        }
    }
}

/// Samples sharing one carrier code.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyBlock {
    pub code: i64,
    /// Sorted layout indices.
    pub members: Vec<usize>,
    /// Pulse index of each member.
    pub pulses: Vec<usize>,
    /// Physical position `d_T·l + d_R·r` of each member.
    pub positions: Vec<f64>,
    /// Modulation coefficient of each member.
    pub modulation: Vec<Complex64>,
    /// Sorted distinct sampling instants `T·p`.
    pub temporal_aperture: Vec<f64>,
    /// Sorted distinct positions.
    pub spatial_aperture: Vec<f64>,
    /// Sorted distinct positions `x + 2·v_p·T·p` under platform motion.
    pub embedded_aperture: Option<Vec<f64>>,
}

impl FrequencyBlock {
    pub fn dim(&self) -> usize {
        self.members.len()
    }

    pub fn embedded_position(cfg: &WaveformConfig, speed: f64, pulse: usize, position: f64) -> f64 {
        position + 2.0 * speed * cfg.pri * pulse as f64
    }
}

/// Position quantum used to merge coincident sampling positions.
fn quantum(cfg: &WaveformConfig) -> f64 {
    1e-9 * cfg.wavelength()
}

fn quantize(x: f64, q: f64) -> i64 {
    (x / q).round() as i64
}

/// Sorted distinct values, merging those that coincide up to the quantum.
pub(crate) fn unique_sorted(values: impl IntoIterator<Item = f64>, q: f64) -> Vec<f64> {
    let mut map = BTreeMap::new();
    for v in values {
        map.entry(quantize(v, q)).or_insert(v);
    }
    map.into_values().collect()
}

/// One block per distinct code of the receive-expanded augmented code matrix.
pub fn partition_blocks(cfg: &WaveformConfig, afdcm: &AugmentedFdcm) -> Vec<FrequencyBlock> {
    let mut groups: BTreeMap<i64, Vec<Sample>> = BTreeMap::new();
    for s in samples(cfg, afdcm) {
        groups.entry(s.code).or_default().push(s);
    }
    let q = quantum(cfg);
    groups
        .into_iter()
        .map(|(code, members)| {
            let pulses: Vec<usize> = members.iter().map(|s| s.pulse).collect();
            let positions: Vec<f64> = members.iter().map(|s| cfg.position(s.tx, s.rx)).collect();
            let temporal_aperture =
                unique_sorted(pulses.iter().map(|&p| cfg.pri * p as f64), cfg.pri * 1e-9);
            let spatial_aperture = unique_sorted(positions.iter().copied(), q);
            let embedded_aperture = cfg.kind.platform_speed().map(|vp| {
                unique_sorted(
                    pulses
                        .iter()
                        .zip(&positions)
                        .map(|(&p, &x)| FrequencyBlock::embedded_position(cfg, vp, p, x)),
                    q,
                )
            });
            FrequencyBlock {
                code,
                members: members.iter().map(|s| s.index).collect(),
                modulation: members.iter().map(|s| s.modulation).collect(),
                pulses,
                positions,
                temporal_aperture,
                spatial_aperture,
                embedded_aperture,
            }
        })
        .collect()
}

/// Range Gramian entry across the full unambiguous range interval.
///
/// Equal codes integrate to the interval length; unequal codes complete a
/// whole number of phase cycles and integrate to exactly zero.
pub fn rd_entry(cfg: &WaveformConfig, afdcm: &AugmentedFdcm, a: usize, b: usize) -> Complex64 {
    if afdcm.code_at(a) == afdcm.code_at(b) {
        Complex64::new(cfg.unambiguous_range(), 0.0)
    } else {
        Complex64::new(0.0, 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    Discrete,
}

/// Hermitian PSD clutter Gramian.
#[derive(Clone, Debug, PartialEq)]
pub struct ClutterGramian {
    pub matrix: DMatrix<Complex64>,
    pub provenance: Provenance,
}

impl ClutterGramian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Per-sample coordinates entering the Gramian phases.
struct SampleCoords {
    code: i64,
    pulse: f64,
    position: f64,
    embedded: f64,
    modulation: Complex64,
}

fn sample_coords(
    cfg: &WaveformConfig,
    afdcm: &AugmentedFdcm,
    region: &ClutterRegion,
) -> Vec<SampleCoords> {
    let scale = cfg.direction_scale();
    samples(cfg, afdcm)
        .into_iter()
        .map(|s| {
            let x = scale * cfg.position(s.tx, s.rx);
            let embedded = match region.ridge_speed {
                Some(vp) => x + 2.0 * vp * cfg.pri * s.pulse as f64,
                None => x,
            };
            SampleCoords {
                code: s.code,
                pulse: s.pulse as f64,
                position: x,
                embedded,
                modulation: s.modulation,
            }
        })
        .collect()
}

/// `f_a·x_a − f_b·x_b` without cancellation in the carrier term.
#[inline]
fn rate_difference(cfg: &WaveformConfig, ka: i64, xa: f64, kb: i64, xb: f64) -> f64 {
    cfg.carrier * (xa - xb) + cfg.freq_step * (ka as f64 * xa - kb as f64 * xb)
}

fn hermitian_from_upper(
    n: usize,
    entry: impl Fn(usize, usize) -> Complex64 + Sync,
) -> DMatrix<Complex64> {
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| entry(i, j)).collect())
        .collect();
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        for (off, z) in row.into_iter().enumerate() {
            let j = i + off;
            if i == j {
                m[(i, i)] = Complex64::new(z.re, 0.0);
            } else {
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
    }
    m
}

/// Full Gramian from closed-form factor integrals.
pub fn gramian_analytic(
    cfg: &WaveformConfig,
    afdcm: &AugmentedFdcm,
    region: &ClutterRegion,
) -> Result<ClutterGramian> {
    region.validate(cfg)?;
    let coords = sample_coords(cfg, afdcm, region);
    let full_range = region.has_full_range(cfg);
    let velocity = region.effective_velocity();
    let direction = region.direction;
    let kd = 4.0 * PI / SPEED_OF_LIGHT * cfg.freq_step;
    let kv = 4.0 * PI / SPEED_OF_LIGHT * cfg.pri;
    let ka = 2.0 * PI / SPEED_OF_LIGHT;
    let ridge = region.ridge_speed.is_some();
    let matrix = hermitian_from_upper(coords.len(), |i, j| {
        let (a, b) = (&coords[i], &coords[j]);
        let rd = if full_range {
            rd_entry(cfg, afdcm, i, j)
        } else {
            interval_integral(kd * (a.code - b.code) as f64, &region.range)
        };
        if rd == Complex64::new(0.0, 0.0) {
            return rd;
        }
        let rv = interval_integral(
            kv * rate_difference(cfg, a.code, a.pulse, b.code, b.pulse),
            &velocity,
        );
        let ra = if ridge {
            interval_integral(
                ka * rate_difference(cfg, a.code, a.embedded, b.code, b.embedded),
                &direction,
            )
        } else {
            interval_integral(
                ka * rate_difference(cfg, a.code, a.position, b.code, b.position),
                &direction,
            )
        };
        a.modulation * b.modulation.conj() * rd * rv * ra
    });
    Ok(ClutterGramian {
        matrix,
        provenance: Provenance::Analytic,
    })
}

/// Rate table for one integrated dimension: each distinct rate gets a phase
/// vector over the grid, and entry `(a, b)` is the weighted inner product.
struct DiscreteFactor {
    index: Vec<usize>,
    vectors: Vec<Vec<Complex64>>,
    weight: f64,
}

impl DiscreteFactor {
    fn new(rates: &[f64], iv: &Interval, n: usize, quantum: f64) -> Self {
        let (nodes, weight) = iv.nodes(n);
        let mut lookup: HashMap<i64, usize> = HashMap::new();
        let mut vectors = Vec::new();
        let index = rates
            .iter()
            .map(|&r| {
                *lookup.entry(quantize(r, quantum)).or_insert_with(|| {
                    vectors.push(nodes.iter().map(|&x| cis_neg(r * x)).collect());
                    vectors.len() - 1
                })
            })
            .collect();
        Self {
            index,
            vectors,
            weight,
        }
    }

    fn table(&self) -> DMatrix<Complex64> {
        let k = self.vectors.len();
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let s: Complex64 = self.vectors[i]
                    .iter()
                    .zip(&self.vectors[j])
                    .map(|(x, y)| x * y.conj())
                    .sum::<Complex64>()
                    * self.weight;
                t[(i, j)] = s;
                t[(j, i)] = s.conj();
            }
        }
        t
    }
}

/// Default grid points per distinct block sample and per phase cycle.
pub const DEFAULT_OVERSAMPLING: usize = 8;

/// Cycles swept across `iv` by the widest spread of phase rates.
fn phase_cycles(rates: impl IntoIterator<Item = f64>, iv: &Interval) -> usize {
    let (lo, hi) = rates
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
            (a.min(x), b.max(x))
        });
    if hi > lo {
        ((hi - lo) * iv.width() / (2.0 * PI)).ceil() as usize
    } else {
        0
    }
}

fn node_count(oversampling: usize, largest: usize, cycles: usize) -> usize {
    (oversampling * largest.max(cycles)).max(64)
}

/// Grid counts for a region: explicit, or [`oversampled_grid`] at the default factor.
pub fn grid_counts(
    cfg: &WaveformConfig,
    afdcm: &AugmentedFdcm,
    region: &ClutterRegion,
) -> GridCounts {
    match region.grid {
        Some(g) => g,
        None => oversampled_grid(cfg, afdcm, region, DEFAULT_OVERSAMPLING),
    }
}

/// `oversampling` nodes per distinct sample of the largest block, and at
/// least that many per phase cycle, so sparse apertures are not aliased.
/// Range nodes also cover the code span, which keeps cross-block sums exact.
pub fn oversampled_grid(
    cfg: &WaveformConfig,
    afdcm: &AugmentedFdcm,
    region: &ClutterRegion,
    oversampling: usize,
) -> GridCounts {
    let blocks = partition_blocks(cfg, afdcm);
    let largest = compress_blocks(cfg, &blocks, region)
        .iter()
        .map(|c| c.weights.len())
        .max()
        .unwrap_or(1);
    let coords = sample_coords(cfg, afdcm, region);
    let k = 2.0 * PI / SPEED_OF_LIGHT;
    let ridge = region.ridge_speed.is_some();
    let cv = phase_cycles(
        coords
            .iter()
            .map(|c| 2.0 * k * cfg.pri * cfg.frequency(c.code) * c.pulse),
        &region.effective_velocity(),
    );
    let ca = phase_cycles(
        coords
            .iter()
            .map(|c| k * cfg.frequency(c.code) * if ridge { c.embedded } else { c.position }),
        &region.direction,
    );
    let span = afdcm.codes.last().unwrap_or(&0) - afdcm.codes.first().unwrap_or(&0);
    GridCounts {
        range: node_count(oversampling, largest, 0).max(span as usize + 1),
        velocity: node_count(oversampling, largest, cv),
        direction: node_count(oversampling, largest, ca),
    }
}

/// Full Gramian as a midpoint Riemann sum over the region grid.
pub fn gramian_discrete(
    cfg: &WaveformConfig,
    afdcm: &AugmentedFdcm,
    region: &ClutterRegion,
) -> Result<ClutterGramian> {
    region.validate(cfg)?;
    let grid = grid_counts(cfg, afdcm, region);
    let coords = sample_coords(cfg, afdcm, region);
    let qx = quantum(cfg) * cfg.carrier;
    let range_rates: Vec<f64> = coords
        .iter()
        .map(|c| 4.0 * PI / SPEED_OF_LIGHT * cfg.frequency(c.code))
        .collect();
    let vel_rates: Vec<f64> = coords
        .iter()
        .map(|c| 4.0 * PI / SPEED_OF_LIGHT * cfg.pri * cfg.frequency(c.code) * c.pulse)
        .collect();
    let ridge = region.ridge_speed.is_some();
    let dir_rates: Vec<f64> = coords
        .iter()
        .map(|c| {
            let x = if ridge { c.embedded } else { c.position };
            2.0 * PI / SPEED_OF_LIGHT * cfg.frequency(c.code) * x
        })
        .collect();
    let rq = 2.0 * PI / SPEED_OF_LIGHT * qx;
    let fd = DiscreteFactor::new(&range_rates, &region.range, grid.range, rq);
    let fv = DiscreteFactor::new(&vel_rates, &region.effective_velocity(), grid.velocity, rq);
    let fa = DiscreteFactor::new(&dir_rates, &region.direction, grid.direction, rq);
    let (td, tv, ta) = (fd.table(), fv.table(), fa.table());
    let matrix = hermitian_from_upper(coords.len(), |i, j| {
        coords[i].modulation
            * coords[j].modulation.conj()
            * td[(fd.index[i], fd.index[j])]
            * tv[(fv.index[i], fv.index[j])]
            * ta[(fa.index[i], fa.index[j])]
    });
    Ok(ClutterGramian {
        matrix,
        provenance: Provenance::Discrete,
    })
}

/// Explicit clutter steering matrix, columns scaled by the square root of the
/// grid cell volume, so that `C·Cᴴ` is the discrete Gramian.
pub fn clutter_steering_matrix(
    cfg: &WaveformConfig,
    afdcm: &AugmentedFdcm,
    region: &ClutterRegion,
) -> Result<DMatrix<Complex64>> {
    region.validate(cfg)?;
    let grid = grid_counts(cfg, afdcm, region);
    let model = SteeringModel::new(cfg, afdcm);
    let (dn, dw) = region.range.nodes(grid.range);
    let (vn, vw) = region.effective_velocity().nodes(grid.velocity);
    let (an, aw) = region.direction.nodes(grid.direction);
    let scale = (dw * vw * aw).sqrt();
    let mut columns = Vec::with_capacity(dn.len() * vn.len() * an.len());
    for &d in &dn {
        for &v in &vn {
            for &a in &an {
                let v = region.ridge_speed.map_or(v, |vp| a * vp);
                columns.push(model.steering_vector(d, v, a).values);
            }
        }
    }
    let n = cfg.dimension();
    Ok(DMatrix::from_fn(n, columns.len(), |i, j| {
        columns[j][i] * scale
    }))
}

/// Symmetric permutation grouping samples by block.
pub fn permute_block_diagonal(
    gramian: &ClutterGramian,
    blocks: &[FrequencyBlock],
) -> Result<(ClutterGramian, Vec<usize>)> {
    let n = gramian.dim();
    let mut seen = vec![false; n];
    let mut perm = Vec::with_capacity(n);
    for b in blocks {
        for &i in &b.members {
            if i >= n || seen[i] {
                return Err(Error::NotAPartition(format!(
                    "index {i} repeated or out of range (dimension {n})"
                )));
            }
            seen[i] = true;
            perm.push(i);
        }
    }
    if perm.len() != n {
        return Err(Error::NotAPartition(format!(
            "blocks cover {} of {n} indices",
            perm.len()
        )));
    }
    let m = &gramian.matrix;
    let matrix = DMatrix::from_fn(n, n, |i, j| m[(perm[i], perm[j])]);
    Ok((
        ClutterGramian {
            matrix,
            provenance: gramian.provenance,
        },
        perm,
    ))
}

/// Full `K_m × K_m` block Gramians in member order, from sub-steering integrals.
pub fn block_gramians(
    cfg: &WaveformConfig,
    blocks: &[FrequencyBlock],
    region: &ClutterRegion,
) -> Result<Vec<ClutterGramian>> {
    region.validate(cfg)?;
    let velocity = region.effective_velocity();
    let scale = cfg.direction_scale();
    Ok(blocks
        .iter()
        .map(|b| {
            let f = cfg.frequency(b.code);
            let kv = 4.0 * PI / SPEED_OF_LIGHT * f * cfg.pri;
            let ka = 2.0 * PI / SPEED_OF_LIGHT * f * scale;
            let coord = |i: usize| match region.ridge_speed {
                Some(vp) => FrequencyBlock::embedded_position(cfg, vp, b.pulses[i], b.positions[i]),
                None => b.positions[i],
            };
            let rd = region.range_mass();
            let matrix = hermitian_from_upper(b.dim(), |i, j| {
                let rv =
                    interval_integral(kv * (b.pulses[i] as f64 - b.pulses[j] as f64), &velocity);
                let ra = interval_integral(ka * (coord(i) - coord(j)), &region.direction);
                b.modulation[i] * b.modulation[j].conj() * rd * rv * ra
            });
            ClutterGramian {
                matrix,
                provenance: Provenance::Analytic,
            }
        })
        .collect())
}

/// Block with coincident samples merged.
///
/// Samples with identical integrated coordinates produce proportional rows.
/// Writing the block as `B·K·Bᴴ` with `Bᴴ·B = W` diagonal, the nonzero
/// eigenvalues and the Frobenius norm of the block equal those of
/// `W^{1/2}·K·W^{1/2}`, which is what the compressed Gramian stores.
#[derive(Clone, Debug)]
pub struct CompressedBlock {
    pub code: i64,
    /// Distinct pulse index per merged sample (0 when velocity is not integrated).
    pub pulses: Vec<f64>,
    /// Distinct effective position per merged sample (0 when direction is not integrated).
    pub positions: Vec<f64>,
    /// Sum of `|β|²` over merged samples.
    pub weights: Vec<f64>,
    /// Member count of the original block.
    pub dim: usize,
}

pub fn compress_blocks(
    cfg: &WaveformConfig,
    blocks: &[FrequencyBlock],
    region: &ClutterRegion,
) -> Vec<CompressedBlock> {
    let q = quantum(cfg);
    let use_velocity = !region.effective_velocity().is_point();
    let use_direction = !region.direction.is_point();
    let scale = cfg.direction_scale();
    blocks
        .iter()
        .map(|b| {
            let mut merged: BTreeMap<(i64, i64), (f64, f64, f64)> = BTreeMap::new();
            for i in 0..b.dim() {
                let (p, x) = match region.ridge_speed {
                    Some(vp) => (
                        0.0,
                        FrequencyBlock::embedded_position(cfg, vp, b.pulses[i], b.positions[i]),
                    ),
                    None => (b.pulses[i] as f64, scale * b.positions[i]),
                };
                let p = if use_velocity { p } else { 0.0 };
                let x = if use_direction { x } else { 0.0 };
                let key = (p as i64, quantize(x, q));
                merged.entry(key).or_insert((p, x, 0.0)).2 += b.modulation[i].norm_sqr();
            }
            let mut out = CompressedBlock {
                code: b.code,
                pulses: Vec::with_capacity(merged.len()),
                positions: Vec::with_capacity(merged.len()),
                weights: Vec::with_capacity(merged.len()),
                dim: b.dim(),
            };
            for (p, x, w) in merged.into_values() {
                out.pulses.push(p);
                out.positions.push(x);
                out.weights.push(w);
            }
            out
        })
        .collect()
}

/// Compressed block Gramian; its eigenvalues are the block's nonzero eigenvalues.
#[derive(Clone, Debug)]
pub struct BlockGramian {
    pub code: i64,
    pub dim: usize,
    pub gramian: ClutterGramian,
}

pub fn compressed_block_gramians(
    cfg: &WaveformConfig,
    blocks: &[FrequencyBlock],
    region: &ClutterRegion,
    provenance: Provenance,
    grid: Option<GridCounts>,
) -> Result<Vec<BlockGramian>> {
    region.validate(cfg)?;
    let compressed = compress_blocks(cfg, blocks, region);
    let grid = match (provenance, grid.or(region.grid)) {
        (Provenance::Analytic, _) => None,
        (Provenance::Discrete, Some(g)) => Some(g),
        (Provenance::Discrete, None) => {
            let largest = compressed
                .iter()
                .map(|c| c.weights.len())
                .max()
                .unwrap_or(1);
            let velocity = region.effective_velocity();
            let (mut cv, mut ca) = (0, 0);
            for c in &compressed {
                let f = cfg.frequency(c.code);
                let kv = 4.0 * PI / SPEED_OF_LIGHT * f * cfg.pri;
                let ka = 2.0 * PI / SPEED_OF_LIGHT * f;
                cv = cv.max(phase_cycles(c.pulses.iter().map(|p| kv * p), &velocity));
                ca = ca.max(phase_cycles(
                    c.positions.iter().map(|x| ka * x),
                    &region.direction,
                ));
            }
            Some(GridCounts {
                range: 1,
                velocity: node_count(DEFAULT_OVERSAMPLING, largest, cv),
                direction: node_count(DEFAULT_OVERSAMPLING, largest, ca),
            })
        }
    };
    let velocity = region.effective_velocity();
    let q = quantum(cfg);
    Ok(compressed
        .par_iter()
        .map(|c| {
            let f = cfg.frequency(c.code);
            let kv = 4.0 * PI / SPEED_OF_LIGHT * f * cfg.pri;
            let ka = 2.0 * PI / SPEED_OF_LIGHT * f;
            let rd = region.range_mass();
            let mut vmemo: HashMap<i64, Complex64> = HashMap::new();
            let mut amemo: HashMap<i64, Complex64> = HashMap::new();
            let n = c.weights.len();
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let dp = c.pulses[i] - c.pulses[j];
                    let dx = c.positions[i] - c.positions[j];
                    let rv = *vmemo.entry(dp as i64).or_insert_with(|| match grid {
                        None => interval_integral(kv * dp, &velocity),
                        Some(g) => interval_sum(kv * dp, &velocity, g.velocity),
                    });
                    let ra = *amemo.entry(quantize(dx, q)).or_insert_with(|| match grid {
                        None => interval_integral(ka * dx, &region.direction),
                        Some(g) => interval_sum(ka * dx, &region.direction, g.direction),
                    });
                    let z = (c.weights[i] * c.weights[j]).sqrt() * rd * rv * ra;
                    if i == j {
                        m[(i, i)] = Complex64::new(z.re, 0.0);
                    } else {
                        m[(i, j)] = z;
                        m[(j, i)] = z.conj();
                    }
                }
            }
            BlockGramian {
                code: c.code,
                dim: c.dim,
                gramian: ClutterGramian {
                    matrix: m,
                    provenance,
                },
            }
        })
        .collect())
}
