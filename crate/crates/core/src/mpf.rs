//! Multi-product formulas: Richardson extrapolation over Trotter step counts.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::formula::{compile_circuit, PartitionedHamiltonian, ProductFormula};
use crate::pauli::OperatorSum;
use crate::simulator::{apply_circuit, expectation, StateVector};

/// Weight systems above this condition number are flagged.
pub const CONDITION_WARNING: f64 = 1e10;
const RESIDUAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct MpfWeights {
    step_counts: Vec<usize>,
    weights: Vec<f64>,
    exact: Vec<BigRational>,
    symmetric: bool,
    alpha: u32,
    condition_number: f64,
}

impl MpfWeights {
    pub fn step_counts(&self) -> &[usize] {
        &self.step_counts
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The weights as exact fractions.
    pub fn exact_weights(&self) -> &[BigRational] {
        &self.exact
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn alpha(&self) -> u32 {
        self.alpha
    }

    pub fn condition_number(&self) -> f64 {
        self.condition_number
    }

    pub fn ill_conditioned(&self) -> bool {
        self.condition_number > CONDITION_WARNING
    }

    /// Error orders the weights remove.
    pub fn cancelled_orders(&self) -> Vec<u32> {
        cancelled_orders(self.step_counts.len(), self.alpha, self.symmetric)
    }

    /// `|sum w - 1|` followed by `|sum w / s^(k-1)|` for every cancelled `k`.
    pub fn residuals(&self) -> Vec<f64> {
        let mut out = vec![(self.weights.iter().sum::<f64>() - 1.0).abs()];
        for k in self.cancelled_orders() {
            let r: f64 = self
                .weights
                .iter()
                .zip(&self.step_counts)
                .map(|(w, &s)| w / (s as f64).powi(k as i32 - 1))
                .sum();
            out.push(r.abs());
        }
        out
    }
}

fn cancelled_orders(n: usize, alpha: u32, symmetric: bool) -> Vec<u32> {
    let stride = if symmetric { 2 } else { 1 };
    (0..n.saturating_sub(1) as u32)
        .map(|i| alpha + stride * i)
        .collect()
}

fn solve_exact(
    mut m: Vec<Vec<BigRational>>,
    mut rhs: Vec<BigRational>,
) -> Option<Vec<BigRational>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let pivot_row = m[col].clone();
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &pivot_row[col];
            for (x, p) in m[r][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= &factor * p;
            }
            let delta = &factor * &rhs[col];
            rhs[r] -= delta;
        }
    }
    Some((0..n).map(|i| &rhs[i] / &m[i][i]).collect())
}

/// Weights with `sum w = 1` that cancel the leading `N - 1` error orders:
/// `alpha, alpha + 1, ...` in general and `alpha, alpha + 2, ...` for
/// symmetric formulas. Solved exactly in rational arithmetic.
pub fn mpf_weights(step_counts: &[usize], alpha: u32, symmetric: bool) -> Result<MpfWeights> {
    if step_counts.is_empty() {
        return Err(Error::invalid("at least one step count is required"));
    }
    if alpha < 2 {
        return Err(Error::invalid("alpha must be at least 2"));
    }
    if let Some(&s) = step_counts.iter().find(|&&s| s == 0) {
        return Err(Error::invalid(format!("step count {s} must be at least 1")));
    }
    let mut sorted = step_counts.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::SingularFit(format!(
            "step count {} appears twice",
            w[0]
        )));
    }

    let orders = cancelled_orders(step_counts.len(), alpha, symmetric);
    let mut rows = vec![vec![BigRational::one(); step_counts.len()]];
    for &k in &orders {
        rows.push(
            step_counts
                .iter()
                .map(|&s| BigRational::new(BigInt::one(), BigInt::from(s).pow(k - 1)))
                .collect(),
        );
    }
    let mut rhs = vec![BigRational::zero(); step_counts.len()];
    rhs[0] = BigRational::one();
    let float_rows: Vec<f64> = rows
        .iter()
        .flat_map(|r| r.iter().map(|x| x.to_f64().unwrap_or(0.0)))
        .collect();
    let design = DMatrix::from_row_slice(step_counts.len(), step_counts.len(), &float_rows);
    let sv = design.svd(false, false).singular_values;
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let condition_number = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };

    let exact = solve_exact(rows, rhs)
        .ok_or_else(|| Error::SingularFit("the weight system is singular".into()))?;
    let weights: Vec<f64> = exact
        .iter()
        .map(|w| w.to_f64().unwrap_or(f64::NAN))
        .collect();
    let result = MpfWeights {
        step_counts: step_counts.to_vec(),
        weights,
        exact,
        symmetric,
        alpha,
        condition_number,
    };
    let worst = result.residuals().into_iter().fold(0.0, f64::max);
    if !(worst < RESIDUAL_TOLERANCE) {
        return Err(Error::SingularFit(format!(
            "weight residual {worst:e} exceeds {RESIDUAL_TOLERANCE:e}"
        )));
    }
    Ok(result)
}

/// `sum_j w_j * value(s_j)`; the constituent values are computed in parallel
/// and combined in step-count order.
pub fn mpf_combine<F>(weights: &MpfWeights, value: F) -> Result<f64>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    let values = weights
        .step_counts
        .par_iter()
        .map(|&s| value(s))
        .collect::<Result<Vec<f64>>>()?;
    Ok(values
        .iter()
        .zip(&weights.weights)
        .map(|(v, w)| v * w)
        .sum())
}

/// Extrapolated expectation of `obs` from `(V(t/s))^s` at every step count `s`.
pub fn mpf_estimate(
    t: f64,
    weights: &MpfWeights,
    f: &ProductFormula,
    partition: &PartitionedHamiltonian,
    obs: &OperatorSum,
    psi: &StateVector,
) -> Result<f64> {
    mpf_combine(weights, |s| {
        let c = compile_circuit(f, partition, t, s)?;
        expectation(&apply_circuit(psi, &c)?, obs)
    })
}

/// Step count at which extrapolation reaches the profiling limit:
/// `alpha - 1`, or `(alpha - 1) / 2` for symmetric formulas.
pub fn critical_n(alpha: u32, symmetric: bool) -> Result<Ratio<i64>> {
    if alpha < 2 {
        return Err(Error::invalid("alpha must be at least 2"));
    }
    let base = Ratio::from_integer(alpha as i64 - 1);
    Ok(if symmetric { base / 2 } else { base })
}
