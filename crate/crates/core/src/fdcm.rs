//! Frequency diverse code matrices and waveform configurations.
//!
//! A waveform is described by an integer code per (pulse, transmit element).
//! Code `k` selects the carrier `f_c + k·Δf`. Splitting each pulse into `Q`
//! sub-bands shifts the code of sub-band `q` by `q`, which yields the
//! augmented code matrix `G_Q = G ⊕ q`.

use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// Dense row-major integer matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl CodeMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidConfig(format!(
                "code matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::InvalidConfig("ragged code matrix rows".into()));
        }
        Self::new(rows.len(), ncols, rows.concat())
    }

    pub fn column(values: &[i64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    pub fn row(values: &[i64]) -> Result<Self> {
        Self::new(1, values.len(), values.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.data[row * self.cols + col]
    }

    pub fn row_slice(&self, row: usize) -> &[i64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        self.data.chunks(self.cols).map(<[i64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c));
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Sorted distinct entries.
    pub fn unique(&self) -> Vec<i64> {
        self.data
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }
}

/// Stretched sum `A ⊗ 1^{size B} + 1^{size A} ⊗ B`.
///
/// Entry `(i·rows(B) + k, j·cols(B) + l)` equals `A[i,j] + B[k,l]`.
pub fn stretched_sum(a: &CodeMatrix, b: &CodeMatrix) -> CodeMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut data = vec![0; rows * cols];
    for i in 0..a.rows {
        for k in 0..b.rows {
            let row = i * b.rows + k;
            for j in 0..a.cols {
                let aij = a.get(i, j);
                for l in 0..b.cols {
                    data[row * cols + j * b.cols + l] = aij + b.get(k, l);
                }
            }
        }
    }
    CodeMatrix { rows, cols, data }
}

/// Cyclic code assignment `s_i = i mod M`.
pub fn assign_linear(count: usize, alphabet: usize) -> Vec<i64> {
    let m = alphabet.max(1);
    (0..count).map(|i| (i % m) as i64).collect()
}

/// Independent uniform draws from `{0, …, M−1}`.
pub fn assign_random(count: usize, alphabet: usize, seed: u64) -> Vec<i64> {
    let m = alphabet.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random_range(0..m) as i64).collect()
}

/// Concatenated random permutations of `{0, …, M−1}`, truncated to `count`.
///
/// Every code appears either `⌊count/M⌋` or `⌈count/M⌉` times.
pub fn assign_permutation(count: usize, alphabet: usize, seed: u64) -> Vec<i64> {
    let m = alphabet.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count + m);
    while out.len() < count {
        let mut perm: Vec<i64> = (0..m as i64).collect();
        perm.shuffle(&mut rng);
        out.extend(perm);
    }
    out.truncate(count);
    out
}

/// How codes are drawn from the alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Assignment {
    Fixed,
    Linear,
    Random,
    Permutation,
}

impl Assignment {
    pub fn generate(self, count: usize, alphabet: usize, seed: u64) -> Vec<i64> {
        match self {
            Assignment::Fixed => vec![0; count],
            Assignment::Linear => assign_linear(count, alphabet),
            Assignment::Random => assign_random(count, alphabet, seed),
            Assignment::Permutation => assign_permutation(count, alphabet, seed),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Assignment::Fixed => "fixed",
            Assignment::Linear => "linear",
            Assignment::Random => "random",
            Assignment::Permutation => "permutation",
        }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Waveform family a configuration was built for.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WaveformKind {
    General,
    Fda,
    SteppedFrequency,
    FdMimo,
    Stap { platform_speed: f64 },
}

impl WaveformKind {
    pub fn name(&self) -> &'static str {
        match self {
            WaveformKind::General => "general",
            WaveformKind::Fda => "fda",
            WaveformKind::SteppedFrequency => "sf",
            WaveformKind::FdMimo => "fdmimo",
            WaveformKind::Stap { .. } => "stap",
        }
    }

    pub fn platform_speed(&self) -> Option<f64> {
        match self {
            WaveformKind::Stap { platform_speed } => Some(*platform_speed),
            _ => None,
        }
    }
}

/// Physical parameters shared by every adapter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadarParams {
    /// Initial carrier `f_c` in Hz.
    pub carrier: f64,
    /// Frequency increment `Δf` in Hz.
    pub freq_step: f64,
    /// Transmit inter-element distance in meters.
    pub tx_spacing: f64,
    /// Receive inter-element distance in meters.
    pub rx_spacing: f64,
    /// Pulse repetition interval in seconds.
    pub pri: f64,
}

impl RadarParams {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier
    }

    /// X-band defaults: 10 GHz carrier, 1 MHz step, half-wavelength spacing, 100 µs PRI.
    pub fn x_band() -> Self {
        let half = SPEED_OF_LIGHT / 10e9 / 2.0;
        Self {
            carrier: 10e9,
            freq_step: 1e6,
            tx_spacing: half,
            rx_spacing: half,
            pri: 1e-4,
        }
    }
}

impl Default for RadarParams {
    fn default() -> Self {
        Self::x_band()
    }
}

/// General frequency diverse MIMO waveform.
///
/// Samples are laid out as `n = (l·R + r)·P·Q + p·Q + q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveformConfig {
    pub kind: WaveformKind,
    pub pulses: usize,
    pub subbands: usize,
    pub tx: usize,
    pub rx: usize,
    pub carrier: f64,
    pub freq_step: f64,
    pub tx_spacing: f64,
    pub rx_spacing: f64,
    pub pri: f64,
    /// Code matrix of shape `pulses × tx`.
    pub codes: CodeMatrix,
    /// Modulation coefficients indexed `(p·L + l)·Q + q`.
    pub modulation: Vec<Complex64>,
    /// Each element receives only its own carrier (two-way direction phase).
    pub monostatic_fda: bool,
}

impl WaveformConfig {
    /// General configuration with unit modulation.
    pub fn general(
        params: &RadarParams,
        pulses: usize,
        subbands: usize,
        tx: usize,
        rx: usize,
        codes: CodeMatrix,
    ) -> Result<Self> {
        let cfg = Self {
            kind: WaveformKind::General,
            pulses,
            subbands,
            tx,
            rx,
            carrier: params.carrier,
            freq_step: params.freq_step,
            tx_spacing: params.tx_spacing,
            rx_spacing: params.rx_spacing,
            pri: params.pri,
            codes,
            modulation: vec![Complex64::new(1.0, 0.0); pulses * tx * subbands],
            monostatic_fda: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_modulation(mut self, modulation: Vec<Complex64>) -> Result<Self> {
        self.modulation = modulation;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.pulses == 0 || self.subbands == 0 || self.tx == 0 || self.rx == 0 {
            return bad(format!(
                "dimensions must be positive (P={}, Q={}, L={}, R={})",
                self.pulses, self.subbands, self.tx, self.rx
            ));
        }
        if self.codes.shape() != (self.pulses, self.tx) {
            return bad(format!(
                "code matrix shape {:?} does not match (P, L) = ({}, {})",
                self.codes.shape(),
                self.pulses,
                self.tx
            ));
        }
        for (name, v) in [
            ("carrier", self.carrier),
            ("freq_step", self.freq_step),
            ("pri", self.pri),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        for (name, v) in [
            ("tx_spacing", self.tx_spacing),
            ("rx_spacing", self.rx_spacing),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        let min_freq = self.frequency(self.codes.as_slice().iter().copied().min().unwrap_or(0));
        if min_freq <= 0.0 {
            return bad(format!("lowest carrier {min_freq} Hz is not positive"));
        }
        if self.modulation.len() != self.pulses * self.tx * self.subbands {
            return bad(format!(
                "modulation has {} coefficients, expected P·L·Q = {}",
                self.modulation.len(),
                self.pulses * self.tx * self.subbands
            ));
        }
        if self
            .modulation
            .iter()
            .any(|b| !b.re.is_finite() || !b.im.is_finite())
        {
            return bad("modulation coefficients must be finite".into());
        }
        if self.monostatic_fda && (self.rx != 1 || self.rx_spacing != self.tx_spacing) {
            return bad(
                "monostatic FDA uses one co-located receive channel per element (R = 1, d_R = d_T)"
                    .into(),
            );
        }
        if let WaveformKind::Stap { platform_speed } = self.kind {
            if !(platform_speed.is_finite() && platform_speed > 0.0) {
                return bad(format!(
                    "platform speed must be positive, got {platform_speed}"
                ));
            }
        }
        Ok(())
    }

    /// Measurement dimension `P·Q·L·R`.
    pub fn dimension(&self) -> usize {
        self.pulses * self.subbands * self.tx * self.rx
    }

    /// Carrier of code `k`.
    #[inline]
    pub fn frequency(&self, code: i64) -> f64 {
        self.carrier + self.freq_step * code as f64
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier
    }

    /// Factor multiplying the one-way spatial phase: 2 for monostatic FDA.
    pub fn direction_scale(&self) -> f64 {
        if self.monostatic_fda {
            2.0
        } else {
            1.0
        }
    }

    /// Physical position of the (transmit, receive) pair.
    #[inline]
    pub fn position(&self, tx: usize, rx: usize) -> f64 {
        self.tx_spacing * tx as f64 + self.rx_spacing * rx as f64
    }

    #[inline]
    pub fn layout_index(&self, pulse: usize, subband: usize, tx: usize, rx: usize) -> usize {
        (tx * self.rx + rx) * self.pulses * self.subbands + pulse * self.subbands + subband
    }

    /// `(p, q, l, r)` of sample `n`.
    #[inline]
    pub fn layout_coords(&self, n: usize) -> (usize, usize, usize, usize) {
        let pq = self.pulses * self.subbands;
        let row = n % pq;
        let col = n / pq;
        (
            row / self.subbands,
            row % self.subbands,
            col / self.rx,
            col % self.rx,
        )
    }

    #[inline]
    pub fn modulation_at(&self, pulse: usize, tx: usize, subband: usize) -> Complex64 {
        self.modulation[(pulse * self.tx + tx) * self.subbands + subband]
    }

    /// Velocity interval width without Doppler ambiguity, `c/(2 f_c T)`.
    pub fn unambiguous_velocity_extent(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.carrier * self.pri)
    }

    /// Direction-sine interval width without spatial ambiguity, capped at 2.
    pub fn unambiguous_direction_extent(&self) -> f64 {
        let spacing = if self.rx > 1 && self.rx_spacing > 0.0 {
            self.rx_spacing
        } else if self.tx > 1 && self.tx_spacing > 0.0 {
            self.tx_spacing
        } else {
            return 2.0;
        };
        (SPEED_OF_LIGHT / (self.direction_scale() * self.carrier * spacing)).min(2.0)
    }

    /// Range interval width without frequency-step ambiguity, `c/(2Δf)`.
    pub fn unambiguous_range(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.freq_step)
    }

    pub fn has_temporal_aperture(&self) -> bool {
        self.pulses > 1
    }

    pub fn has_spatial_aperture(&self) -> bool {
        (self.tx > 1 && self.tx_spacing > 0.0) || (self.rx > 1 && self.rx_spacing > 0.0)
    }
}

/// Augmented code matrix `G_Q = G ⊕ q` and its receive expansion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedFdcm {
    /// Shape `(P·Q) × L`.
    pub g_q: CodeMatrix,
    /// Shape `(P·Q) × (L·R)`, each column of `g_q` repeated `R` times.
    pub g_q_rx: CodeMatrix,
    /// Sorted distinct entries of `g_q`.
    pub codes: Vec<i64>,
}

impl AugmentedFdcm {
    /// Code of layout sample `n`.
    #[inline]
    pub fn code_at(&self, n: usize) -> i64 {
        let pq = self.g_q_rx.rows();
        self.g_q_rx.get(n % pq, n / pq)
    }

    pub fn block_count(&self) -> usize {
        self.codes.len()
    }
}

pub fn build_afdcm(cfg: &WaveformConfig) -> AugmentedFdcm {
    let q: Vec<i64> = (0..cfg.subbands as i64).collect();
    let q = CodeMatrix::column(&q).expect("subbands >= 1");
    let g_q = stretched_sum(&cfg.codes, &q);
    let ones = CodeMatrix::new(1, cfg.rx, vec![0; cfg.rx]).expect("rx >= 1");
    let g_q_rx = stretched_sum(&g_q, &ones);
    let codes = g_q.unique();
    AugmentedFdcm { g_q, g_q_rx, codes }
}

fn codes_len_check(expected: usize, g: &[i64], what: &str) -> Result<()> {
    if g.len() != expected || expected == 0 {
        return Err(Error::InvalidConfig(format!(
            "{what} code sequence has length {}, expected {expected}",
            g.len()
        )));
    }
    Ok(())
}

/// Frequency diverse array: one pulse, element `l` transmits code `g_l`.
///
/// Each element receives its own carrier through a co-located channel, so
/// the returned configuration has one receive channel per element
/// (`R = 1`, `d_R = d_T`) and the doubled two-way direction phase.
pub fn adapt_fda(params: &RadarParams, subbands: usize, g: &[i64]) -> Result<WaveformConfig> {
    codes_len_check(g.len(), g, "FDA")?;
    let mut cfg = WaveformConfig::general(params, 1, subbands, g.len(), 1, CodeMatrix::row(g)?)?;
    cfg.kind = WaveformKind::Fda;
    cfg.rx_spacing = cfg.tx_spacing;
    cfg.monostatic_fda = true;
    cfg.validate()?;
    Ok(cfg)
}

/// Stepped-frequency pulse train: single element, pulse `p` uses code `g_p`.
pub fn adapt_sf(params: &RadarParams, subbands: usize, g: &[i64]) -> Result<WaveformConfig> {
    codes_len_check(g.len(), g, "SF")?;
    let mut cfg = WaveformConfig::general(params, g.len(), subbands, 1, 1, CodeMatrix::column(g)?)?;
    cfg.kind = WaveformKind::SteppedFrequency;
    cfg.tx_spacing = 0.0;
    cfg.rx_spacing = 0.0;
    Ok(cfg)
}

/// Frequency diverse MIMO in beampattern mode: one pulse, `L` transmitters, `R` receivers.
pub fn adapt_fdmimo(
    params: &RadarParams,
    rx: usize,
    subbands: usize,
    g: &[i64],
) -> Result<WaveformConfig> {
    codes_len_check(g.len(), g, "FD-MIMO")?;
    let mut cfg = WaveformConfig::general(params, 1, subbands, g.len(), rx, CodeMatrix::row(g)?)?;
    cfg.kind = WaveformKind::FdMimo;
    Ok(cfg)
}

/// Side-looking airborne FD-MIMO: clutter Doppler is slaved to direction by `v = α·v_p`.
///
/// Element `l` keeps code `g_l` on every pulse.
pub fn adapt_stap(
    params: &RadarParams,
    rx: usize,
    pulses: usize,
    subbands: usize,
    g: &[i64],
    platform_speed: f64,
) -> Result<WaveformConfig> {
    codes_len_check(g.len(), g, "STAP")?;
    if pulses == 0 {
        return Err(Error::InvalidConfig("STAP needs at least one pulse".into()));
    }
    let rows: Vec<Vec<i64>> = (0..pulses).map(|_| g.to_vec()).collect();
    let mut cfg = WaveformConfig::general(
        params,
        pulses,
        subbands,
        g.len(),
        rx,
        CodeMatrix::from_rows(&rows)?,
    )?;
    cfg.kind = WaveformKind::Stap { platform_speed };
    cfg.validate()?;
    Ok(cfg)
}

/// One entry of the measurement vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub index: usize,
    pub pulse: usize,
    pub subband: usize,
    pub tx: usize,
    pub rx: usize,
    pub code: i64,
    pub modulation: Complex64,
}

/// All samples in layout order.
pub fn samples(cfg: &WaveformConfig, afdcm: &AugmentedFdcm) -> Vec<Sample> {
    (0..cfg.dimension())
        .map(|n| {
            let (pulse, subband, tx, rx) = cfg.layout_coords(n);
            Sample {
                index: n,
                pulse,
                subband,
                tx,
                rx,
                code: afdcm.code_at(n),
                modulation: cfg.modulation_at(pulse, tx, subband),
            }
        })
        .collect()
}
