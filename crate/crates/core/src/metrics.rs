//! Clutter-suppression figures of merit.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::ClutterGramian;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, solve_hermitian_pd};
use crate::steering::{SteeringModel, SteeringVector};

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Optimal SCNR and its clutter-subspace projection approximation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScnrResult {
    pub exact_db: f64,
    pub approx_db: f64,
    pub sigma2: f64,
    pub clutter_rank_used: usize,
}

fn check_inputs(gramian: &ClutterGramian, sigma2: f64, target: &SteeringVector) -> Result<()> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::NonPositiveNoise(sigma2));
    }
    if target.len() != gramian.dim() {
        return Err(Error::DimensionMismatch {
            expected: gramian.dim(),
            found: target.len(),
        });
    }
    Ok(())
}

/// `uᴴ(R_C + σ²I)⁻¹u` in linear units.
pub fn scnr_exact_linear(
    gramian: &ClutterGramian,
    sigma2: f64,
    target: &SteeringVector,
) -> Result<f64> {
    check_inputs(gramian, sigma2, target)?;
    let n = gramian.dim();
    let mut r = gramian.matrix.clone();
    for i in 0..n {
        r[(i, i)] += sigma2;
    }
    let u = target.to_dvector();
    let x = solve_hermitian_pd(r, &u)?;
    Ok(u.dotc(&x).re)
}

pub fn scnr_exact(gramian: &ClutterGramian, sigma2: f64, target: &SteeringVector) -> Result<f64> {
    scnr_exact_linear(gramian, sigma2, target).map(to_db)
}

/// Clutter eigenvectors with eigenvalue above `rel_tol × max`, one per column.
fn clutter_subspace(
    gramian: &ClutterGramian,
    rel_tol: f64,
) -> Result<nalgebra::DMatrix<Complex64>> {
    let (values, vectors) = hermitian_eigen(&gramian.matrix)?;
    let max = values.first().copied().unwrap_or(0.0);
    let k = if max > 0.0 {
        values.iter().take_while(|&&v| v > rel_tol * max).count()
    } else {
        0
    };
    Ok(vectors.columns(0, k).into_owned())
}

fn projected_energy(basis: &nalgebra::DMatrix<Complex64>, u: &DVector<Complex64>) -> f64 {
    let total = u.norm_squared();
    let inside = (basis.adjoint() * u).norm_squared();
    (total - inside).max(0.0)
}

/// `‖P⊥u‖²/σ²` in linear units, with the number of clutter eigenvectors removed.
pub fn scnr_approx_linear(
    gramian: &ClutterGramian,
    sigma2: f64,
    target: &SteeringVector,
    rel_tol: f64,
) -> Result<(f64, usize)> {
    check_inputs(gramian, sigma2, target)?;
    let basis = clutter_subspace(gramian, rel_tol)?;
    let u = target.to_dvector();
    Ok((projected_energy(&basis, &u) / sigma2, basis.ncols()))
}

pub fn scnr_approx(
    gramian: &ClutterGramian,
    sigma2: f64,
    target: &SteeringVector,
    rel_tol: f64,
) -> Result<f64> {
    scnr_approx_linear(gramian, sigma2, target, rel_tol).map(|(v, _)| to_db(v))
}

pub fn scnr(
    gramian: &ClutterGramian,
    sigma2: f64,
    target: &SteeringVector,
    rel_tol: f64,
) -> Result<ScnrResult> {
    let exact = scnr_exact_linear(gramian, sigma2, target)?;
    let (approx, used) = scnr_approx_linear(gramian, sigma2, target, rel_tol)?;
    Ok(ScnrResult {
        exact_db: to_db(exact),
        approx_db: to_db(approx),
        sigma2,
        clutter_rank_used: used,
    })
}

/// Targets per independently seeded Monte Carlo chunk.
const CHUNK: usize = 256;

/// Monte Carlo mean of `‖P⊥u‖²/‖u‖²` over targets drawn uniformly on the
/// unambiguous range, velocity and direction intervals.
pub fn mean_projected_power(
    gramian: &ClutterGramian,
    model: &SteeringModel,
    rel_tol: f64,
    sample_count: usize,
    seed: u64,
) -> Result<f64> {
    if sample_count == 0 {
        return Err(Error::InvalidScenario("sample_count must be >= 1".into()));
    }
    if model.dimension() != gramian.dim() {
        return Err(Error::DimensionMismatch {
            expected: gramian.dim(),
            found: model.dimension(),
        });
    }
    let basis = clutter_subspace(gramian, rel_tol)?;
    let cfg = model.config();
    let range = cfg.unambiguous_range();
    let vel = if cfg.has_temporal_aperture() {
        cfg.unambiguous_velocity_extent()
    } else {
        0.0
    };
    let dir = if cfg.has_spatial_aperture() {
        cfg.unambiguous_direction_extent()
    } else {
        0.0
    };
    let chunks = sample_count.div_ceil(CHUNK);
    let total: f64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = CHUNK.min(sample_count - c * CHUNK);
            let mut acc = 0.0;
            for _ in 0..n {
                let d = rng.random::<f64>() * range;
                let v = (rng.random::<f64>() - 0.5) * vel;
                let a = (rng.random::<f64>() - 0.5) * dir;
                let u = model.steering_vector(d, v, a).to_dvector();
                let norm = u.norm_squared();
                if norm > 0.0 {
                    acc += projected_energy(&basis, &u) / norm;
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(total / sample_count as f64)
}

/// Frequency diversity loss `10·log10((1 − ncr_fd)/(1 − ncr_fixed))`.
pub fn fdl(ncr_fd: f64, ncr_fixed: f64) -> Result<f64> {
    for x in [ncr_fd, ncr_fixed] {
        if !(0.0..1.0).contains(&x) {
            return Err(Error::FdlUndefined(x));
        }
    }
    Ok(to_db((1.0 - ncr_fd) / (1.0 - ncr_fixed)))
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}
