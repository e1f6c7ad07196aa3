//! TOML schema for user-defined rank sweeps.
//!
//! ```toml
//! name = "fda-64"
//! family = "fda"          # fda | sf | fd_mimo | stap | pulse_coded | element_coded | general
//! seed = 3
//! rel_tol = 1e-2
//!
//! [dims]
//! pulses = 1
//! tx = 64
//! rx = 1
//!
//! [radar]
//! carrier_hz = 10e9
//! freq_step_hz = 1e6
//! tx_spacing_wavelengths = 0.5
//!
//! [[variants]]
//! codes = 4
//! assignment = "random"
//! subbands = 1
//!
//! [sweep]
//! extents = [0.2, 0.5, 0.8]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::covariance::GridCounts;
use crate::error::{Error, Result};
use crate::fdcm::RadarParams;
use crate::presets::{extent_grid, stap_speed, Dims, Family, RankStudy, Variant};
use crate::rank::DEFAULT_REL_TOL;

fn default_one() -> usize {
    1
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarSection {
    pub carrier_hz: Option<f64>,
    pub freq_step_hz: Option<f64>,
    pub tx_spacing_m: Option<f64>,
    pub tx_spacing_wavelengths: Option<f64>,
    pub rx_spacing_m: Option<f64>,
    pub rx_spacing_wavelengths: Option<f64>,
    pub pri_s: Option<f64>,
    pub platform_speed_mps: Option<f64>,
}

fn spacing(
    meters: Option<f64>,
    wavelengths: Option<f64>,
    lambda: f64,
    name: &str,
) -> Result<Option<f64>> {
    match (meters, wavelengths) {
        (Some(_), Some(_)) => Err(Error::InvalidConfig(format!(
            "give {name}_spacing_m or {name}_spacing_wavelengths, not both"
        ))),
        (Some(m), None) => Ok(Some(m)),
        (None, Some(w)) => Ok(Some(w * lambda)),
        (None, None) => Ok(None),
    }
}

impl RadarSection {
    /// X-band defaults overridden by the given fields.
    pub fn resolve(&self) -> Result<RadarParams> {
        let mut p = RadarParams::x_band();
        if let Some(f) = self.carrier_hz {
            p.carrier = f;
        }
        if let Some(df) = self.freq_step_hz {
            p.freq_step = df;
        }
        if let Some(t) = self.pri_s {
            p.pri = t;
        }
        let lambda = p.wavelength();
        p.tx_spacing = lambda / 2.0;
        p.rx_spacing = lambda / 2.0;
        if let Some(d) = spacing(self.tx_spacing_m, self.tx_spacing_wavelengths, lambda, "tx")? {
            p.tx_spacing = d;
        }
        if let Some(d) = spacing(self.rx_spacing_m, self.rx_spacing_wavelengths, lambda, "rx")? {
            p.rx_spacing = d;
        }
        for (name, v) in [
            ("carrier_hz", p.carrier),
            ("freq_step_hz", p.freq_step),
            ("pri_s", p.pri),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        for (name, v) in [("tx spacing", p.tx_spacing), ("rx spacing", p.rx_spacing)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimsSection {
    #[serde(default = "default_one")]
    pub pulses: usize,
    #[serde(default = "default_one")]
    pub tx: usize,
    #[serde(default = "default_one")]
    pub rx: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSection {
    pub codes: usize,
    pub assignment: crate::fdcm::Assignment,
    #[serde(default = "default_one")]
    pub subbands: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Normalized extents; the ten-point default grid when absent.
    pub extents: Option<Vec<f64>>,
}

/// A custom rank sweep as read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSpec {
    #[serde(default = "CustomSpec::default_name")]
    pub name: String,
    pub family: Family,
    pub seed: Option<u64>,
    pub rel_tol: Option<f64>,
    pub dims: DimsSection,
    #[serde(default)]
    pub radar: RadarSection,
    #[serde(default)]
    pub variants: Vec<VariantSection>,
    #[serde(default)]
    pub sweep: SweepSection,
    pub grid: Option<GridCounts>,
}

impl CustomSpec {
    fn default_name() -> String {
        "custom".into()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Resolves to a validated study; command-line seed and tolerance take precedence.
    pub fn resolve(&self, seed: Option<u64>, rel_tol: Option<f64>) -> Result<RankStudy> {
        let params = self.radar.resolve()?;
        let d = &self.dims;
        if d.pulses == 0 || d.tx == 0 || d.rx == 0 {
            return Err(Error::InvalidConfig("dimensions must be >= 1".into()));
        }
        let platform_speed = match (self.family, self.radar.platform_speed_mps) {
            (Family::Stap, Some(v)) => Some(v),
            (Family::Stap, None) => Some(stap_speed(&params)),
            (_, Some(_)) => {
                return Err(Error::InvalidConfig(
                    "platform_speed_mps applies only to the stap family".into(),
                ))
            }
            (_, None) => None,
        };
        let study = RankStudy {
            name: self.name.clone(),
            family: self.family,
            dims: Dims {
                pulses: d.pulses,
                tx: d.tx,
                rx: d.rx,
            },
            params,
            platform_speed,
            variants: self
                .variants
                .iter()
                .map(|v| Variant::new(v.codes, v.assignment, v.subbands))
                .collect(),
            extents: self.sweep.extents.clone().unwrap_or_else(extent_grid),
            seed: seed.or(self.seed).unwrap_or(0),
            rel_tol: rel_tol.or(self.rel_tol).unwrap_or(DEFAULT_REL_TOL),
            grid: self.grid,
        };
        study.validate()?;
        Ok(study)
    }
}
