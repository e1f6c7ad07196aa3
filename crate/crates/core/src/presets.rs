//! Experiment definitions reproducing the clutter-rank and detection studies.
//!
//! Every study is plain data (serializable) and resolves deterministically to
//! waveform configurations, so a run manifest fully determines its inputs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{ClutterRegion, GridCounts};
use crate::detect::{simulate_pd, DetectionResult, DetectionScenario, Target};
use crate::error::{Error, Result};
use crate::fdcm::{
    adapt_fda, adapt_fdmimo, adapt_sf, adapt_stap, build_afdcm, Assignment, CodeMatrix,
    RadarParams, WaveformConfig,
};
use crate::metrics::fdl;
use crate::rank::{clutter_rank_bounds, corollary_rank, CorollaryKind, RankReport};

/// Ten normalized extents `0.1, 0.2, …, 1.0`.
pub fn extent_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

/// Code alphabet, assignment rule and sub-band count of one waveform variant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variant {
    pub codes: usize,
    pub assignment: Assignment,
    pub subbands: usize,
}

impl Variant {
    pub fn new(codes: usize, assignment: Assignment, subbands: usize) -> Self {
        let assignment = if codes == 1 {
            Assignment::Fixed
        } else {
            assignment
        };
        Self {
            codes,
            assignment,
            subbands,
        }
    }

    pub fn fixed(subbands: usize) -> Self {
        Self::new(1, Assignment::Fixed, subbands)
    }

    pub fn label(&self) -> String {
        match self.assignment {
            Assignment::Fixed => format!("fixed-q{}", self.subbands),
            a => format!("{a}-{}-q{}", self.codes, self.subbands),
        }
    }

    pub fn is_fixed(&self) -> bool {
        self.codes == 1
    }
}

/// Fixed, then linear and random for each alphabet size, for each sub-band count.
pub fn standard_variants(alphabets: &[usize], subbands: &[usize]) -> Vec<Variant> {
    let mut out = Vec::new();
    for &q in subbands {
        out.push(Variant::fixed(q));
        for &k in alphabets.iter().filter(|&&k| k > 1) {
            out.push(Variant::new(k, Assignment::Linear, q));
            out.push(Variant::new(k, Assignment::Random, q));
        }
    }
    out
}

/// Waveform family and the region dimension the extent sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Frequency diverse array; direction sweep.
    Fda,
    /// Stepped-frequency pulse train; velocity sweep.
    Sf,
    /// FD-MIMO beampattern mode; direction sweep.
    FdMimo,
    /// Side-looking airborne FD-MIMO; direction sweep along the clutter ridge.
    Stap,
    /// General waveform, codes vary by pulse only; velocity sweep.
    PulseCoded,
    /// General waveform, codes vary by element only; direction sweep.
    ElementCoded,
    /// General waveform, codes drawn per (pulse, element); both dimensions sweep.
    General,
}

impl Family {
    fn corollary(self) -> Option<CorollaryKind> {
        match self {
            Family::Fda => Some(CorollaryKind::Fda),
            Family::Sf => Some(CorollaryKind::Sf),
            Family::FdMimo => Some(CorollaryKind::FdMimo),
            Family::Stap => Some(CorollaryKind::Stap),
            _ => None,
        }
    }
}

/// Which region dimensions an extent applies to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Velocity,
    Direction,
    Both,
}

impl SweepAxis {
    pub fn region(self, cfg: &WaveformConfig, extent: f64) -> Result<ClutterRegion> {
        match self {
            SweepAxis::Velocity => ClutterRegion::normalized(cfg, Some(extent), None),
            SweepAxis::Direction => ClutterRegion::normalized(cfg, None, Some(extent)),
            SweepAxis::Both => ClutterRegion::normalized(cfg, Some(extent), Some(extent)),
        }
    }
}

/// Array and pulse dimensions; unused entries are ignored by the adapter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub pulses: usize,
    pub tx: usize,
    pub rx: usize,
}

/// Rank sweep over waveform variants and normalized extents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankStudy {
    pub name: String,
    pub family: Family,
    pub dims: Dims,
    pub params: RadarParams,
    pub platform_speed: Option<f64>,
    pub variants: Vec<Variant>,
    pub extents: Vec<f64>,
    pub seed: u64,
    pub rel_tol: f64,
    pub grid: Option<GridCounts>,
}

/// One row of a rank sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub variant: Variant,
    pub extent: f64,
    pub report: RankReport,
    pub corollary: Option<usize>,
    /// Loss relative to the fixed-frequency variant with the same sub-band count.
    pub fdl_db: Option<f64>,
}

impl StudyRow {
    /// Single-factor estimate: the corollary when available, otherwise the lower bound.
    pub fn estimate(&self) -> usize {
        self.corollary.unwrap_or(self.report.lower_bound)
    }

    /// Numerical rank over the number of distinct sampling coordinates.
    pub fn ncr_distinct(&self) -> f64 {
        self.report.numerical_rank as f64 / self.report.distinct_samples() as f64
    }

    /// Estimate over the number of distinct sampling coordinates.
    pub fn estimate_distinct(&self) -> f64 {
        self.estimate() as f64 / self.report.distinct_samples() as f64
    }
}

impl RankStudy {
    fn codes(&self, v: &Variant, count: usize) -> Vec<i64> {
        v.assignment.generate(count, v.codes, self.seed)
    }

    pub fn config(&self, v: &Variant) -> Result<WaveformConfig> {
        let p = &self.params;
        let d = self.dims;
        let q = v.subbands;
        match self.family {
            Family::Fda => adapt_fda(p, q, &self.codes(v, d.tx)),
            Family::Sf => adapt_sf(p, q, &self.codes(v, d.pulses)),
            Family::FdMimo => adapt_fdmimo(p, d.rx, q, &self.codes(v, d.tx)),
            Family::Stap => {
                let vp = self.platform_speed.ok_or_else(|| {
                    Error::InvalidConfig("STAP study needs a platform speed".into())
                })?;
                adapt_stap(p, d.rx, d.pulses, q, &self.codes(v, d.tx), vp)
            }
            Family::PulseCoded => {
                let g = self.codes(v, d.pulses);
                let data = g
                    .iter()
                    .flat_map(|&c| std::iter::repeat_n(c, d.tx))
                    .collect();
                WaveformConfig::general(
                    p,
                    d.pulses,
                    q,
                    d.tx,
                    d.rx,
                    CodeMatrix::new(d.pulses, d.tx, data)?,
                )
            }
            Family::ElementCoded => {
                let g = self.codes(v, d.tx);
                let data = (0..d.pulses).flat_map(|_| g.iter().copied()).collect();
                WaveformConfig::general(
                    p,
                    d.pulses,
                    q,
                    d.tx,
                    d.rx,
                    CodeMatrix::new(d.pulses, d.tx, data)?,
                )
            }
            Family::General => {
                let g = self.codes(v, d.pulses * d.tx);
                WaveformConfig::general(
                    p,
                    d.pulses,
                    q,
                    d.tx,
                    d.rx,
                    CodeMatrix::new(d.pulses, d.tx, g)?,
                )
            }
        }
    }

    pub fn axis(&self) -> SweepAxis {
        match self.family {
            Family::Sf | Family::PulseCoded => SweepAxis::Velocity,
            Family::General => SweepAxis::Both,
            _ => SweepAxis::Direction,
        }
    }

    pub fn region(&self, cfg: &WaveformConfig, extent: f64) -> Result<ClutterRegion> {
        let r = self.axis().region(cfg, extent)?;
        Ok(match self.grid {
            Some(g) => r.with_grid(g),
            None => r,
        })
    }

    pub fn configs(&self) -> Result<Vec<(String, WaveformConfig)>> {
        self.variants
            .iter()
            .map(|v| Ok((v.label(), self.config(v)?)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.extents.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::InvalidRegion(
                "normalized extents must lie in [0, 1]".into(),
            ));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "relative tolerance must lie in (0, 1), got {}",
                self.rel_tol
            )));
        }
        for v in &self.variants {
            let cfg = self.config(v)?;
            for &e in &self.extents {
                self.region(&cfg, e)?;
            }
        }
        Ok(())
    }

    /// Evaluates one (variant, extent) point.
    pub fn evaluate(
        &self,
        cfg: &WaveformConfig,
        extent: f64,
    ) -> Result<(RankReport, Option<usize>)> {
        let afdcm = build_afdcm(cfg);
        let region = self.region(cfg, extent)?;
        let report = clutter_rank_bounds(cfg, &afdcm, &region, self.rel_tol)?;
        let corollary = match self.family.corollary() {
            Some(kind) => Some(corollary_rank(kind, cfg, &afdcm, &region)?),
            None => None,
        };
        Ok((report, corollary))
    }

    /// Rows ordered by variant, then extent.
    pub fn run(&self) -> Result<Vec<StudyRow>> {
        self.validate()?;
        let configs: Vec<WaveformConfig> = self
            .variants
            .iter()
            .map(|v| self.config(v))
            .collect::<Result<_>>()?;
        let points: Vec<(usize, f64)> = (0..self.variants.len())
            .flat_map(|i| self.extents.iter().map(move |&e| (i, e)))
            .collect();
        let evaluated: Vec<(RankReport, Option<usize>)> = points
            .par_iter()
            .map(|&(i, e)| self.evaluate(&configs[i], e))
            .collect::<Result<_>>()?;
        let mut rows: Vec<StudyRow> = points
            .iter()
            .zip(evaluated)
            .map(|(&(i, e), (report, corollary))| StudyRow {
                variant: self.variants[i].clone(),
                extent: e,
                report,
                corollary,
                fdl_db: None,
            })
            .collect();
        let fixed: Vec<(usize, f64, f64)> = rows
            .iter()
            .filter(|r| r.variant.is_fixed())
            .map(|r| (r.variant.subbands, r.extent, r.report.ncr))
            .collect();
        for row in &mut rows {
            row.fdl_db = fixed
                .iter()
                .find(|(q, e, _)| *q == row.variant.subbands && *e == row.extent)
                .and_then(|&(_, _, base)| fdl(row.report.ncr, base).ok());
        }
        Ok(rows)
    }
}

fn quarter_wave(mut p: RadarParams) -> RadarParams {
    p.tx_spacing = p.wavelength() / 4.0;
    p.rx_spacing = p.tx_spacing;
    p
}

/// Half-wavelength receive spacing with transmit spacing `R·d_R` (filled virtual array).
pub fn mimo_params(rx: usize) -> RadarParams {
    let mut p = RadarParams::x_band();
    p.tx_spacing = rx as f64 * p.rx_spacing;
    p
}

/// Pulse-coded temporal study: 32 Tx, 8 Rx, 128 pulses.
pub fn fig4(seed: u64, rel_tol: f64) -> RankStudy {
    RankStudy {
        name: "fig4".into(),
        family: Family::PulseCoded,
        dims: Dims {
            pulses: 128,
            tx: 32,
            rx: 8,
        },
        params: mimo_params(8),
        platform_speed: None,
        variants: standard_variants(&[4, 8, 16], &[1]),
        extents: extent_grid(),
        seed,
        rel_tol,
        grid: None,
    }
}

/// Element-coded spatial study: 128 Tx, 8 Rx, 32 pulses.
pub fn fig5(seed: u64, rel_tol: f64) -> RankStudy {
    RankStudy {
        name: "fig5".into(),
        family: Family::ElementCoded,
        dims: Dims {
            pulses: 32,
            tx: 128,
            rx: 8,
        },
        ..fig4(seed, rel_tol)
    }
}

/// Frequency diverse array with 256 quarter-wavelength spaced elements.
pub fn fig6(seed: u64, rel_tol: f64) -> RankStudy {
    RankStudy {
        name: "fig6".into(),
        family: Family::Fda,
        dims: Dims {
            pulses: 1,
            tx: 256,
            rx: 1,
        },
        params: quarter_wave(RadarParams::x_band()),
        platform_speed: None,
        variants: standard_variants(&[4, 8], &[1, 16]),
        extents: extent_grid(),
        seed,
        rel_tol,
        grid: None,
    }
}

/// Stepped-frequency train of 256 pulses.
pub fn fig7(seed: u64, rel_tol: f64) -> RankStudy {
    RankStudy {
        name: "fig7".into(),
        family: Family::Sf,
        dims: Dims {
            pulses: 256,
            tx: 1,
            rx: 1,
        },
        params: RadarParams::x_band(),
        ..fig6(seed, rel_tol)
    }
}

/// FD-MIMO with 64 transmitters and 8 receivers.
pub fn fig8(seed: u64, rel_tol: f64) -> RankStudy {
    RankStudy {
        name: "fig8".into(),
        family: Family::FdMimo,
        dims: Dims {
            pulses: 1,
            tx: 64,
            rx: 8,
        },
        params: mimo_params(8),
        platform_speed: None,
        variants: standard_variants(&[4, 8], &[1]),
        extents: extent_grid(),
        seed,
        rel_tol,
        grid: None,
    }
}

/// Platform speed that advances the array by one receive spacing per two pulses: `2·v_p·T = d_R`.
pub fn stap_speed(p: &RadarParams) -> f64 {
    p.rx_spacing / (2.0 * p.pri)
}

/// Side-looking airborne FD-MIMO: 16 Tx, 8 Rx, 16 pulses.
pub fn fig9(seed: u64, rel_tol: f64) -> RankStudy {
    let params = mimo_params(8);
    RankStudy {
        name: "fig9".into(),
        family: Family::Stap,
        dims: Dims {
            pulses: 16,
            tx: 16,
            rx: 8,
        },
        platform_speed: Some(stap_speed(&params)),
        params,
        variants: standard_variants(&[4, 8], &[1]),
        extents: extent_grid(),
        seed,
        rel_tol,
        grid: None,
    }
}

/// Block-structure demonstration: 16 pulses, 4 Tx, 8 Rx, four random codes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramianStudy {
    pub dims: Dims,
    pub params: RadarParams,
    pub codes: usize,
    pub seed: u64,
    pub velocity_extent: f64,
    pub direction_extent: f64,
    pub rel_tol: f64,
    /// Oversampling factor of the discrete grid relative to the largest block.
    pub oversampling: usize,
}

impl GramianStudy {
    pub fn config(&self) -> Result<WaveformConfig> {
        let d = self.dims;
        let g = Assignment::Random.generate(d.pulses * d.tx, self.codes, self.seed);
        WaveformConfig::general(
            &self.params,
            d.pulses,
            1,
            d.tx,
            d.rx,
            CodeMatrix::new(d.pulses, d.tx, g)?,
        )
    }

    pub fn region(&self, cfg: &WaveformConfig) -> Result<ClutterRegion> {
        ClutterRegion::normalized(cfg, Some(self.velocity_extent), Some(self.direction_extent))
    }

    /// Oversampled grid at this study's factor.
    pub fn grid(&self, cfg: &WaveformConfig) -> Result<GridCounts> {
        let region = self.region(cfg)?;
        Ok(crate::covariance::oversampled_grid(
            cfg,
            &build_afdcm(cfg),
            &region,
            self.oversampling,
        ))
    }
}

pub fn fig3(seed: u64, rel_tol: f64) -> GramianStudy {
    GramianStudy {
        dims: Dims {
            pulses: 16,
            tx: 4,
            rx: 8,
        },
        params: mimo_params(8),
        codes: 4,
        seed,
        velocity_extent: 0.5,
        direction_extent: 0.5,
        rel_tol,
        oversampling: 8,
    }
}

/// Monte Carlo detection comparison of FDA waveforms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionStudy {
    pub elements: usize,
    pub params: RadarParams,
    pub variants: Vec<Variant>,
    /// Clutter direction interval is `[−h, h]` with `h = direction_half_width`.
    pub direction_half_width: f64,
    pub direction_cells: usize,
    pub target: Target,
    pub snr_db: Vec<f64>,
    pub pfa: f64,
    pub trials_h0: usize,
    pub trials_h1: usize,
    pub clutter_to_noise_db: f64,
    pub seed: u64,
    /// Target directions for the per-direction map of the `linear-4-q1` variant.
    pub map_directions: Vec<f64>,
    pub map_snr_db: f64,
}

impl DetectionStudy {
    fn codes(&self, v: &Variant) -> Vec<i64> {
        v.assignment.generate(self.elements, v.codes, self.seed)
    }

    pub fn config(&self, v: &Variant) -> Result<WaveformConfig> {
        adapt_fda(&self.params, v.subbands, &self.codes(v))
    }

    pub fn scenario(&self, v: &Variant) -> Result<DetectionScenario> {
        let cfg = self.config(v)?;
        let af = build_afdcm(&cfg);
        let span = (af.codes.last().unwrap() - af.codes.first().unwrap()) as usize;
        let fraction = 2.0 * self.direction_half_width / cfg.unambiguous_direction_extent();
        let region = ClutterRegion::normalized(&cfg, None, Some(fraction))?.with_grid(GridCounts {
            range: (span + 1).next_power_of_two().max(2),
            velocity: 1,
            direction: self.direction_cells,
        });
        Ok(DetectionScenario {
            cfg,
            region,
            target: self.target,
            snr_db: self.snr_db.clone(),
            pfa: self.pfa,
            trials_h0: self.trials_h0,
            trials_h1: self.trials_h1,
            clutter_to_noise_db: self.clutter_to_noise_db,
            noise_power: 1.0,
            seed: self.seed,
        })
    }

    pub fn configs(&self) -> Result<Vec<(String, WaveformConfig)>> {
        self.variants
            .iter()
            .map(|v| Ok((v.label(), self.config(v)?)))
            .collect()
    }

    pub fn run(&self) -> Result<Vec<(Variant, DetectionResult)>> {
        self.variants
            .iter()
            .map(|v| Ok((v.clone(), simulate_pd(&self.scenario(v)?)?)))
            .collect()
    }
}

/// FDA detection study: 256 elements, clutter within `|α| ≤ 1/8`, SNR 6–24 dB.
pub fn fig10(seed: u64, long_run: bool) -> DetectionStudy {
    let (pfa, trials_h0) = if long_run {
        (1e-5, 10_000_000)
    } else {
        (1e-3, 100_000)
    };
    let mut variants = standard_variants(&[4, 8], &[1, 16]);
    variants.retain(|v| !(v.is_fixed() && v.subbands == 16));
    let params = quarter_wave(RadarParams::x_band());
    DetectionStudy {
        elements: 256,
        target: Target {
            range: 0.3 * params.wavelength() * params.carrier / (2.0 * params.freq_step),
            velocity: 0.0,
            direction: 0.3,
        },
        params,
        variants,
        direction_half_width: 0.125,
        direction_cells: 128,
        snr_db: (0..10).map(|i| 6.0 + 2.0 * i as f64).collect(),
        pfa,
        trials_h0,
        trials_h1: 10_000,
        clutter_to_noise_db: 40.0,
        seed,
        map_directions: (0..16).map(|i| -0.9375 + 0.125 * i as f64).collect(),
        map_snr_db: 18.0,
    }
}
