use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular-value threshold for numerical rank, relative to `max(sigma_max, 1)`.
pub const RANK_RTOL: f64 = 1e-8;

/// Numerical rank and singular values (descending).
pub fn rank(m: &DMatrix<f64>) -> (usize, Vec<f64>) {
    rank_above(m, 0.0)
}

/// As [`rank`], but singular values at or below `floor` never count.
pub fn rank_above(m: &DMatrix<f64>, floor: f64) -> (usize, Vec<f64>) {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    let max = s.first().copied().unwrap_or(0.0);
    let tol = (RANK_RTOL * max.max(1.0)).max(floor);
    let r = s.iter().filter(|&&x| x > tol).count();
    (r, s)
}

/// Solves `m x = b` for a square `m`, failing with the numerical rank when
/// `m` is singular. Returns the solution and the 2-norm condition number.
pub fn solve(m: &DMatrix<f64>, b: &DVector<f64>, floor: f64) -> Result<(DVector<f64>, f64)> {
    let (r, s) = rank_above(m, floor);
    if r < m.nrows() {
        return Err(Error::DegenerateLagrangian {
            rank: r,
            dim: m.nrows(),
        });
    }
    let cond = s[0] / s[s.len() - 1];
    let x = m
        .clone()
        .lu()
        .solve(b)
        .ok_or(Error::DegenerateLagrangian {
            rank: r,
            dim: m.nrows(),
        })?;
    Ok((x, cond))
}

/// Minimum-norm least-squares solution of `m x = b` and its residual norm.
/// Singular values at or below `floor` are treated as zero.
pub fn least_squares(m: &DMatrix<f64>, b: &DVector<f64>, floor: f64) -> (DVector<f64>, f64) {
    let svd = m.clone().svd(true, true);
    let max = svd.singular_values.max();
    let eps = if max > 0.0 { (RANK_RTOL * max).max(floor) } else { 1.0 };
    let x = svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(m.ncols()));
    let res = (m * &x - b).norm();
    (x, res)
}
