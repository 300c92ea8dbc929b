use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{chebyshev_nodes, solve_least_squares_vec};

/// Condition-number gate applied to every profile fit.
pub const MAX_FIT_CONDITION: f64 = 1e8;
const GRID_LO: f64 = -0.5;
const GRID_HI: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub a: f64,
    pub value: f64,
}

/// Fit model: constant plus `a^s + ā^s` for each order, optionally with
/// `a^s - ā^s` companions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisSpec {
    orders: Vec<u32>,
    include_antisymmetric: bool,
}

impl BasisSpec {
    pub fn new(mut orders: Vec<u32>, include_antisymmetric: bool, alpha: u32) -> Result<Self> {
        orders.sort_unstable();
        orders.dedup();
        if let Some(&s) = orders.first() {
            if s < alpha {
                return Err(Error::invalid(format!(
                    "basis order {s} is below the formula order {alpha}"
                )));
            }
        }
        Ok(BasisSpec {
            orders,
            include_antisymmetric,
        })
    }

    /// Every order from `alpha` to `2 alpha - 2`.
    pub fn full_window(alpha: u32, include_antisymmetric: bool) -> Self {
        BasisSpec {
            orders: (alpha..=(2 * alpha).saturating_sub(2).max(alpha)).collect(),
            include_antisymmetric,
        }
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn include_antisymmetric(&self) -> bool {
        self.include_antisymmetric
    }

    /// Number of non-constant basis functions.
    pub fn num_functions(&self) -> usize {
        self.orders.len() * if self.include_antisymmetric { 2 } else { 1 }
    }

    /// `2n + 1` Chebyshev nodes on `[-0.5, 1.5]` for `n` orders. With
    /// antisymmetric columns this is exactly one node per unknown.
    pub fn default_grid(&self) -> Vec<f64> {
        chebyshev_nodes(2 * self.orders.len().max(1) + 1, GRID_LO, GRID_HI)
    }

    fn row(&self, a: f64) -> Vec<f64> {
        let b = 1.0 - a;
        let mut r = Vec::with_capacity(self.num_functions() + 1);
        r.push(1.0);
        for &s in &self.orders {
            let (x, y) = (a.powi(s as i32), b.powi(s as i32));
            r.push(x + y);
            if self.include_antisymmetric {
                r.push(x - y);
            }
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub y_star: f64,
    /// Coefficients of `a^s + ā^s`.
    pub coefficients: BTreeMap<u32, f64>,
    /// Coefficients of `a^s - ā^s`; empty without antisymmetric columns.
    pub antisymmetric: BTreeMap<u32, f64>,
    pub residual_norm: f64,
    pub condition_number: f64,
}

pub(crate) fn check_distinct(grid: &[f64]) -> Result<()> {
    let mut sorted: Vec<f64> = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateGrid(w[0]));
    }
    if let Some(a) = grid.iter().find(|a| !a.is_finite()) {
        return Err(Error::invalid(format!("grid value {a} is not finite")));
    }
    Ok(())
}

/// Least-squares fit of the averaged profile; the intercept is the mitigated value.
pub fn fit_profile(samples: &[ProfileSample], basis: &BasisSpec, alpha: u32) -> Result<FitResult> {
    if let Some(&s) = basis.orders.first() {
        if s < alpha {
            return Err(Error::invalid(format!(
                "basis order {s} is below alpha = {alpha}"
            )));
        }
    }
    let unknowns = basis.num_functions() + 1;
    if samples.len() < unknowns {
        return Err(Error::SingularFit(format!(
            "{} samples cannot determine {unknowns} unknowns",
            samples.len()
        )));
    }
    let grid: Vec<f64> = samples.iter().map(|s| s.a).collect();
    check_distinct(&grid)?;
    if let Some(s) = samples.iter().find(|s| !s.value.is_finite()) {
        return Err(Error::invalid(format!(
            "profile value at a = {} is not finite",
            s.a
        )));
    }
    let rows: Vec<Vec<f64>> = grid.iter().map(|&a| basis.row(a)).collect();
    let design = DMatrix::from_fn(samples.len(), unknowns, |i, j| rows[i][j]);
    let values: Vec<f64> = samples.iter().map(|s| s.value).collect();
    let (coef, residual_norm, condition_number) =
        solve_least_squares_vec(&design, &values, MAX_FIT_CONDITION)?;

    let mut coefficients = BTreeMap::new();
    let mut antisymmetric = BTreeMap::new();
    let mut idx = 1;
    for &s in &basis.orders {
        coefficients.insert(s, coef[idx]);
        idx += 1;
        if basis.include_antisymmetric {
            antisymmetric.insert(s, coef[idx]);
            idx += 1;
        }
    }
    Ok(FitResult {
        y_star: coef[0],
        coefficients,
        antisymmetric,
        residual_norm,
        condition_number,
    })
}
