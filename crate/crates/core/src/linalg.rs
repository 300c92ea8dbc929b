//! Small dense least-squares helpers shared by the fitting code.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct LeastSquares {
    pub coefficients: DMatrix<f64>,
    pub residual_norms: Vec<f64>,
    pub condition_number: f64,
}

/// Condition number of the column-normalized design matrix.
pub(crate) fn condition_number(design: &DMatrix<f64>) -> f64 {
    let (scaled, _) = normalize_columns(design);
    let sv = scaled.svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        (max / min).max(1.0)
    }
}

fn normalize_columns(design: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let mut scaled = design.clone();
    let mut norms = Vec::with_capacity(design.ncols());
    for j in 0..design.ncols() {
        let norm = design.column(j).norm();
        let s = if norm > 0.0 { norm } else { 1.0 };
        scaled.column_mut(j).scale_mut(1.0 / s);
        norms.push(s);
    }
    (scaled, norms)
}

/// Solves `design * x ≈ rhs` column by column with Householder QR on the
/// column-normalized design. Fails when the system is underdetermined or its
/// condition number exceeds `max_condition`.
pub(crate) fn solve_least_squares(
    design: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
    max_condition: f64,
) -> Result<LeastSquares> {
    let (m, p) = design.shape();
    if m < p {
        return Err(Error::SingularFit(format!(
            "{m} data points cannot determine {p} unknowns"
        )));
    }
    let condition_number = condition_number(design);
    if !(condition_number <= max_condition) {
        return Err(Error::SingularFit(format!(
            "design matrix condition number {condition_number:.3e} exceeds {max_condition:.1e}"
        )));
    }
    let (scaled, norms) = normalize_columns(design);
    let qr = scaled.qr();
    let q = qr.q();
    let r = qr.r();
    let qtb = q.transpose() * rhs;
    let mut coefficients = r
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::SingularFit("triangular factor is singular".into()))?;
    for (j, s) in norms.iter().enumerate() {
        coefficients.row_mut(j).scale_mut(1.0 / s);
    }
    let resid = design * &coefficients - rhs;
    let residual_norms = (0..rhs.ncols()).map(|k| resid.column(k).norm()).collect();
    Ok(LeastSquares {
        coefficients,
        residual_norms,
        condition_number,
    })
}

pub(crate) fn solve_least_squares_vec(
    design: &DMatrix<f64>,
    rhs: &[f64],
    max_condition: f64,
) -> Result<(Vec<f64>, f64, f64)> {
    let b = DMatrix::from_column_slice(rhs.len(), 1, rhs);
    let sol = solve_least_squares(design, &b, max_condition)?;
    let coef = DVector::from_column_slice(sol.coefficients.column(0).as_slice());
    Ok((
        coef.iter().cloned().collect(),
        sol.residual_norms[0],
        sol.condition_number,
    ))
}

/// Ordinary least-squares slope of `y` against `x`.
pub(crate) fn linear_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `m` Chebyshev nodes of the first kind mapped onto `[lo, hi]`, ascending.
pub fn chebyshev_nodes(m: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut nodes: Vec<f64> = (0..m)
        .map(|k| {
            let x = ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * m) as f64).cos();
            let v = mid + half * x;
            // snap the centre node so symmetric grids stay exactly symmetric
            if x.abs() < 1e-15 {
                mid
            } else {
                v
            }
        })
        .collect();
    nodes.sort_by(f64::total_cmp);
    nodes
}

/// `m` geometrically spaced points from `lo` to `hi` inclusive.
pub fn geometric_grid(m: usize, lo: f64, hi: f64) -> Vec<f64> {
    if m == 1 {
        return vec![lo];
    }
    let ratio = (hi / lo).ln() / (m - 1) as f64;
    (0..m)
        .map(|k| {
            if k == m - 1 {
                hi
            } else {
                lo * (ratio * k as f64).exp()
            }
        })
        .collect()
}
