//! Hermitian eigen-solvers and solves over `Complex64`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest `|A − Aᴴ|` entry.
pub fn hermitian_asymmetry(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Rejects non-square input and asymmetry above 8 ulps of the largest entry.
pub fn check_hermitian(m: &DMatrix<Complex64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let allowed = 8.0 * f64::EPSILON * scale;
    let asymmetry = hermitian_asymmetry(m);
    if asymmetry > allowed {
        return Err(Error::NotHermitian { asymmetry, allowed });
    }
    Ok(())
}

/// Eigenvalues in ascending order.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    check_hermitian(m)?;
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut values: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Eigenpairs sorted by descending eigenvalue.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    check_hermitian(m)?;
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    Ok((values, vectors))
}

/// Solves `A·x = b` for Hermitian positive definite `A`.
pub fn solve_hermitian_pd(
    a: DMatrix<Complex64>,
    b: &DVector<Complex64>,
) -> Result<DVector<Complex64>> {
    let chol = a.cholesky().ok_or(Error::NotPositiveDefinite)?;
    // Complex square roots never fail, so a negative pivot shows up as a
    // non-real diagonal entry of the factor.
    let l = chol.l_dirty();
    for i in 0..l.nrows() {
        let d = l[(i, i)];
        if !(d.re > 0.0 && d.im.abs() <= 1e-12 * d.re) {
            return Err(Error::NotPositiveDefinite);
        }
    }
    Ok(chol.solve(b))
}

/// `xᴴ·y`.
pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}
