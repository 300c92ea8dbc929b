use nalgebra::DMatrix;

use super::composite::{averaged_expectation_with, Dynamics};
use super::fit::BasisSpec;
use crate::error::{Error, Result};
use crate::linalg::{geometric_grid, solve_least_squares};
use crate::pauli::OperatorSum;
use crate::simulator::{expectation, ExactPropagator, StateVector};

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOptions {
    pub t_probe: Vec<f64>,
    pub a_probe: Vec<f64>,
    /// Orders fitted beyond `2 alpha - 2` to soak up truncation.
    pub n_extra_orders: u32,
    /// Orders whose largest coefficient falls below this fraction of the
    /// largest fitted coefficient are dropped.
    pub relative_threshold: f64,
    /// Profiles whose mirrored values differ by more than this fraction of
    /// their magnitude get antisymmetric columns.
    pub symmetry_tolerance: f64,
    /// Below this absolute coefficient size the profile counts as flat.
    pub flat_floor: f64,
    pub max_condition: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            t_probe: geometric_grid(12, 0.02, 0.1),
            a_probe: vec![-0.5, 0.0, 0.25, 0.75, 1.0, 1.5],
            n_extra_orders: 3,
            relative_threshold: 1e-4,
            symmetry_tolerance: 1e-3,
            flat_floor: 1e-10,
            max_condition: 1e8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub basis: BasisSpec,
    /// `(order, max |coefficient| / largest)` over every fitted order.
    pub relative_magnitudes: Vec<(u32, f64)>,
    pub largest_coefficient: f64,
    /// Largest mirrored-pair mismatch relative to the profile size; `None`
    /// when the probe has no `(a, 1 - a)` pairs.
    pub asymmetry: Option<f64>,
    /// The profile sat at round-off and the full window was kept.
    pub flat: bool,
    pub condition_number: f64,
}

/// Decides which orders of the averaged error survive by fitting it as a
/// polynomial in `t` at each probe `a`.
pub fn calibrate_basis<D: Dynamics + ?Sized>(
    dynamics: &D,
    exact: &ExactPropagator,
    obs: &OperatorSum,
    psi: &StateVector,
    alpha: u32,
    opts: &CalibrationOptions,
) -> Result<CalibrationReport> {
    if opts.t_probe.is_empty() || opts.a_probe.is_empty() {
        return Err(Error::Calibration("probe grids must be non-empty".into()));
    }
    if opts.t_probe.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Calibration("probe times must be positive".into()));
    }
    let hi = 2 * alpha - 2 + opts.n_extra_orders;
    let powers: Vec<u32> = (alpha..=hi.max(alpha)).collect();
    let t_max = opts.t_probe.iter().cloned().fold(0.0, f64::max);
    let design = DMatrix::from_fn(opts.t_probe.len(), powers.len(), |i, j| {
        (opts.t_probe[i] / t_max).powi(powers[j] as i32)
    });

    let exact_values = opts
        .t_probe
        .iter()
        .map(|&t| expectation(&exact.evolve(t, psi)?, obs))
        .collect::<Result<Vec<_>>>()?;
    let mut errors = DMatrix::<f64>::zeros(opts.t_probe.len(), opts.a_probe.len());
    for (j, &a) in opts.a_probe.iter().enumerate() {
        for (i, &t) in opts.t_probe.iter().enumerate() {
            errors[(i, j)] = averaged_expectation_with(dynamics, a, t, obs, psi)? - exact_values[i];
        }
    }

    let sol = solve_least_squares(&design, &errors, opts.max_condition).map_err(|e| match e {
        Error::SingularFit(msg) => {
            Error::Calibration(format!("probe fit is ill-conditioned: {msg}"))
        }
        other => other,
    })?;
    let magnitudes: Vec<f64> = (0..powers.len())
        .map(|r| {
            sol.coefficients
                .row(r)
                .iter()
                .map(|c| c.abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let largest = magnitudes.iter().cloned().fold(0.0, f64::max);
    let relative_magnitudes: Vec<(u32, f64)> = powers
        .iter()
        .zip(&magnitudes)
        .map(|(&s, &m)| (s, if largest > 0.0 { m / largest } else { 0.0 }))
        .collect();

    let asymmetry = mirror_asymmetry(&opts.a_probe, &errors);
    let flat = largest < opts.flat_floor;
    let window_top = (2 * alpha - 2).max(alpha);
    let basis = if flat {
        BasisSpec::full_window(alpha, false)
    } else {
        let orders = relative_magnitudes
            .iter()
            .filter(|(s, r)| *s <= window_top && *r > opts.relative_threshold)
            .map(|(s, _)| *s)
            .collect::<Vec<_>>();
        if orders.is_empty() {
            return Err(Error::Calibration(format!(
                "no order in [{alpha}, {window_top}] rises above the relative threshold {:e}",
                opts.relative_threshold
            )));
        }
        let anti = asymmetry.is_none_or(|x| x > opts.symmetry_tolerance);
        BasisSpec::new(orders, anti, alpha)?
    };
    Ok(CalibrationReport {
        basis,
        relative_magnitudes,
        largest_coefficient: largest,
        asymmetry,
        flat,
        condition_number: sol.condition_number,
    })
}

fn mirror_asymmetry(a_probe: &[f64], errors: &DMatrix<f64>) -> Option<f64> {
    let scale = errors.iter().map(|e| e.abs()).fold(0.0, f64::max);
    let mut worst: Option<f64> = None;
    for (j, &a) in a_probe.iter().enumerate() {
        for (k, &b) in a_probe.iter().enumerate().skip(j + 1) {
            if (a + b - 1.0).abs() > 1e-12 {
                continue;
            }
            let diff = (errors.column(j) - errors.column(k)).amax();
            let rel = if scale > 0.0 { diff / scale } else { 0.0 };
            worst = Some(worst.map_or(rel, |w: f64| w.max(rel)));
        }
    }
    worst
}
