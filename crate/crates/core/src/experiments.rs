//! End-to-end error curves for the TFIM and XXZ chains.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::formula::{
    builtin_formula, compile_circuit, FormulaName, Fragment, PartitionedHamiltonian, ProductFormula,
};
use crate::linalg::{geometric_grid, linear_slope};
use crate::mpf::{mpf_combine, mpf_weights, MpfWeights};
use crate::pauli::{OperatorSum, C64};
use crate::profiling::{
    calibrate_basis, composite_circuit, fit_profile, profile_sweep, BasisSpec, CalibrationOptions,
    CalibrationReport, CompositeSpec, FitResult, ProfileSample, TrotterDynamics, Variant,
};
use crate::simulator::{
    apply_circuit, expectation, init_product_state, ExactPropagator, NoiseModel, StateVector,
};

/// Errors below this are at the double-precision floor.
pub const ERROR_FLOOR: f64 = 1e-15;
const SLOPE_FLOOR: f64 = 1e-14;
/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "TROTTERPROF_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub enum BasisChoice {
    Calibrated(CalibrationOptions),
    Fixed(BasisSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfilingOptions {
    pub trotter_steps: usize,
    pub basis: BasisChoice,
    /// Explicit `a` grid; the basis default grid otherwise.
    pub a_grid: Option<Vec<f64>>,
}

impl Default for ProfilingOptions {
    fn default() -> Self {
        ProfilingOptions {
            trotter_steps: 1,
            basis: BasisChoice::Calibrated(CalibrationOptions::default()),
            a_grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpfOptions {
    pub step_counts: Vec<usize>,
    pub symmetric: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub partition: PartitionedHamiltonian,
    pub formula: ProductFormula,
    pub observable: OperatorSum,
    pub initial_state: StateVector,
    pub times: Vec<f64>,
    pub profiling: ProfilingOptions,
    pub mpf: MpfOptions,
    pub noise: NoiseModel,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.partition.num_qubits();
        if self.observable.num_qubits() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.observable.num_qubits(),
            });
        }
        if self.initial_state.num_qubits() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.initial_state.num_qubits(),
            });
        }
        if !self.observable.is_hermitian() {
            return Err(Error::NotHermitian(format!(
                "observable {}",
                self.observable
            )));
        }
        if self.times.is_empty() {
            return Err(Error::invalid("times must not be empty"));
        }
        if self.times.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(Error::invalid("times must be positive and finite"));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("times must be strictly increasing"));
        }
        if self.profiling.trotter_steps == 0 {
            return Err(Error::invalid("profiling.trotter_steps must be at least 1"));
        }
        if self.formula.fragment_span() > self.partition.len() {
            return Err(Error::IndexOutOfRange {
                index: self.formula.fragment_span() - 1,
                len: self.partition.len(),
            });
        }
        if !(self.noise.sigma >= 0.0) || !self.noise.sigma.is_finite() {
            return Err(Error::invalid(
                "noise.sigma must be finite and non-negative",
            ));
        }
        if let Some(grid) = &self.profiling.a_grid {
            let mut sorted = grid.clone();
            sorted.sort_by(f64::total_cmp);
            if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::DuplicateGrid(w[0]));
            }
        }
        Ok(())
    }
}

fn pair(n: usize, i: usize, a: char, b: char) -> String {
    (0..n)
        .map(|k| {
            if k == i {
                a
            } else if k == i + 1 {
                b
            } else {
                'I'
            }
        })
        .collect()
}

fn single(n: usize, i: usize, a: char) -> String {
    (0..n).map(|k| if k == i { a } else { 'I' }).collect()
}

fn fragment(n: usize, terms: &[(String, f64)]) -> Result<Fragment> {
    let t: Vec<(&str, f64)> = terms.iter().map(|(w, c)| (w.as_str(), *c)).collect();
    Fragment::new(OperatorSum::from_real_terms(n, &t)?)
}

/// `(1/2) (1,0) x (1,i) x (1,1) x (0,1)`.
pub fn paper_initial_state() -> StateVector {
    let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
    init_product_state(&[[o, z], [o, i], [o, o], [z, o]]).expect("factors are nonzero")
}

pub fn default_times() -> Vec<f64> {
    geometric_grid(20, 0.1, 1.0)
}

fn assemble(
    partition: PartitionedHamiltonian,
    name: FormulaName,
    observable: OperatorSum,
) -> Result<ExperimentConfig> {
    let formula = builtin_formula(name, &partition)?;
    Ok(ExperimentConfig {
        mpf: MpfOptions {
            step_counts: vec![1, 2],
            symmetric: formula.is_symmetric(),
        },
        partition,
        formula,
        observable,
        initial_state: paper_initial_state(),
        times: default_times(),
        profiling: ProfilingOptions::default(),
        noise: NoiseModel::noiseless(),
    })
}

/// Four-site open transverse-field Ising chain with `J = 1`, `h = 1/3`.
pub fn tfim_config(name: FormulaName) -> Result<ExperimentConfig> {
    let n = 4;
    let (j, h) = (1.0, 1.0 / 3.0);
    // odd bonds, then even bonds
    let zz: Vec<(String, f64)> = [0, 2, 1]
        .iter()
        .map(|&i| (pair(n, i, 'Z', 'Z'), j))
        .collect();
    let x: Vec<(String, f64)> = (0..n).map(|i| (single(n, i, 'X'), h)).collect();
    let partition = PartitionedHamiltonian::new(vec![fragment(n, &zz)?, fragment(n, &x)?])?;
    let mut obs: Vec<(String, f64)> = (0..n).map(|i| (single(n, i, 'X'), 0.25)).collect();
    obs.extend((0..n - 1).map(|i| (pair(n, i, 'Z', 'Z'), 1.0 / 3.0)));
    let obs: Vec<(&str, f64)> = obs.iter().map(|(w, c)| (w.as_str(), *c)).collect();
    assemble(partition, name, OperatorSum::from_real_terms(n, &obs)?)
}

/// Four-site open XXZ chain with `eta = 1/3`; bonds (1,2) and (3,4) form one
/// fragment, bond (2,3) the other.
pub fn xxz_config(name: FormulaName) -> Result<ExperimentConfig> {
    let n = 4;
    let eta = 1.0 / 3.0;
    let bond = |i: usize| {
        vec![
            (pair(n, i, 'X', 'X'), 1.0),
            (pair(n, i, 'Y', 'Y'), 1.0),
            (pair(n, i, 'Z', 'Z'), eta),
        ]
    };
    let outer: Vec<(String, f64)> = bond(0).into_iter().chain(bond(2)).collect();
    let partition =
        PartitionedHamiltonian::new(vec![fragment(n, &outer)?, fragment(n, &bond(1))?])?;
    let obs: Vec<(String, f64)> = (0..n).map(|i| (single(n, i, 'Z'), 0.25)).collect();
    let obs: Vec<(&str, f64)> = obs.iter().map(|(w, c)| (w.as_str(), *c)).collect();
    assemble(partition, name, OperatorSum::from_real_terms(n, &obs)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Trotter,
    Ep,
    Mpf,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Trotter, Method::Ep, Method::Mpf];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Trotter => "trotter",
            Method::Ep => "ep",
            Method::Mpf => "mpf",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown method `{s}` (expected trotter, ep or mpf)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    /// Trotter steps per circuit for `trotter` and `ep`, the largest step
    /// count for `mpf`.
    pub a_or_steps: f64,
    pub estimate: f64,
    pub exact: f64,
    pub abs_error: f64,
    /// `abs_error` is below the double-precision floor.
    pub at_floor: bool,
}

impl CurvePoint {
    fn new(t: f64, a_or_steps: f64, estimate: f64, exact: f64) -> Self {
        let abs_error = (estimate - exact).abs();
        CurvePoint {
            t,
            a_or_steps,
            estimate,
            exact,
            abs_error,
            at_floor: abs_error < ERROR_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub method: Method,
    pub points: Vec<CurvePoint>,
}

/// Worker pool sized by `TROTTERPROF_THREADS` when set.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))
        })?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))
}

/// A validated configuration with its exact propagator, formula dynamics,
/// fit basis and MPF weights prepared.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    dynamics: TrotterDynamics,
    exact: ExactPropagator,
    basis: BasisSpec,
    calibration: Option<CalibrationReport>,
    weights: MpfWeights,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let dynamics = TrotterDynamics::new(
            config.formula.clone(),
            config.partition.clone(),
            config.profiling.trotter_steps,
        )?;
        let exact = ExactPropagator::new(&config.partition.hamiltonian())?;
        let alpha = config.formula.alpha();
        let (basis, calibration) = match &config.profiling.basis {
            BasisChoice::Fixed(b) => (b.clone(), None),
            BasisChoice::Calibrated(opts) => {
                let report = calibrate_basis(
                    &dynamics,
                    &exact,
                    &config.observable,
                    &config.initial_state,
                    alpha,
                    opts,
                )?;
                (report.basis.clone(), Some(report))
            }
        };
        let weights = mpf_weights(&config.mpf.step_counts, alpha, config.mpf.symmetric)?;
        Ok(Experiment {
            config,
            dynamics,
            exact,
            basis,
            calibration,
            weights,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn calibration(&self) -> Option<&CalibrationReport> {
        self.calibration.as_ref()
    }

    pub fn mpf_weights(&self) -> &MpfWeights {
        &self.weights
    }

    pub fn a_grid(&self) -> Vec<f64> {
        self.config
            .profiling
            .a_grid
            .clone()
            .unwrap_or_else(|| self.basis.default_grid())
    }

    pub fn exact_value(&self, t: f64) -> Result<f64> {
        expectation(
            &self.exact.evolve(t, &self.config.initial_state)?,
            &self.config.observable,
        )
    }

    fn trotter_expectation(&self, t: f64, steps: usize) -> Result<f64> {
        let c = compile_circuit(&self.config.formula, &self.config.partition, t, steps)?;
        expectation(
            &apply_circuit(&self.config.initial_state, &c)?,
            &self.config.observable,
        )
    }

    /// Plain `V_N(t)` expectation.
    pub fn trotter_value(&self, t: f64) -> Result<f64> {
        let v = self.trotter_expectation(t, self.config.profiling.trotter_steps)?;
        Ok(self.config.noise.perturb(v, &[0, t.to_bits()]))
    }

    pub fn profile(&self, t: f64) -> Result<Vec<ProfileSample>> {
        profile_sweep(
            &self.dynamics,
            &self.a_grid(),
            t,
            &self.config.observable,
            &self.config.initial_state,
            &self.config.noise,
        )
    }

    /// Mitigated value and the fit behind it.
    pub fn mitigated_estimate(&self, t: f64) -> Result<(f64, FitResult)> {
        let fit = fit_profile(&self.profile(t)?, &self.basis, self.config.formula.alpha())?;
        Ok((fit.y_star, fit))
    }

    pub fn mpf_value(&self, t: f64) -> Result<f64> {
        mpf_combine(&self.weights, |s| {
            let v = self.trotter_expectation(t, s)?;
            Ok(self.config.noise.perturb(v, &[2, t.to_bits(), s as u64]))
        })
    }

    fn point(&self, method: Method, t: f64) -> Result<CurvePoint> {
        let exact = self.exact_value(t)?;
        let steps = self.config.profiling.trotter_steps as f64;
        Ok(match method {
            Method::Trotter => CurvePoint::new(t, steps, self.trotter_value(t)?, exact),
            Method::Ep => CurvePoint::new(t, steps, self.mitigated_estimate(t)?.0, exact),
            Method::Mpf => {
                let top = self
                    .weights
                    .step_counts()
                    .iter()
                    .copied()
                    .max()
                    .unwrap_or(1);
                CurvePoint::new(t, top as f64, self.mpf_value(t)?, exact)
            }
        })
    }

    /// One point per configured time, in time order.
    pub fn run_error_curve(&self, method: Method) -> Result<ErrorCurve> {
        let pool = worker_pool()?;
        let points = pool.install(|| {
            self.config
                .times
                .par_iter()
                .map(|&t| self.point(method, t))
                .collect::<Result<Vec<_>>>()
        })?;
        Ok(ErrorCurve { method, points })
    }
}

pub fn run_error_curve(config: &ExperimentConfig, method: Method) -> Result<ErrorCurve> {
    Experiment::new(config.clone())?.run_error_curve(method)
}

/// Least-squares slope of `ln(abs_error)` against `ln(t)` over the window.
pub fn slope_fit(curve: &ErrorCurve, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    let pts: Vec<&CurvePoint> = curve
        .points
        .iter()
        .filter(|p| {
            p.t >= lo * (1.0 - 1e-12) && p.t <= hi * (1.0 + 1e-12) && p.abs_error > SLOPE_FLOOR
        })
        .collect();
    if pts.len() < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            found: pts.len(),
        });
    }
    let x: Vec<f64> = pts.iter().map(|p| p.t.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.abs_error.ln()).collect();
    Ok(linear_slope(&x, &y))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CircuitCost {
    pub circuits: usize,
    /// Trotter steps summed over all circuits.
    pub trotter_steps: usize,
    pub elementary_gates: usize,
}

/// Resources for one estimate. `n` is the base step count for `trotter` and
/// `ep`, and the largest step count of `1..=n` for `mpf`; `grid_size` only
/// matters for `ep`.
pub fn circuit_cost(
    method: Method,
    f: &ProductFormula,
    partition: &PartitionedHamiltonian,
    n: usize,
    grid_size: usize,
) -> Result<CircuitCost> {
    if n == 0 {
        return Err(Error::invalid("step count must be at least 1"));
    }
    let gates = |s: usize| compile_circuit(f, partition, 0.5, s).map(|c| c.len());
    match method {
        Method::Trotter => Ok(CircuitCost {
            circuits: 1,
            trotter_steps: n,
            elementary_gates: gates(n)?,
        }),
        Method::Mpf => {
            let mut cost = CircuitCost {
                circuits: n,
                trotter_steps: 0,
                elementary_gates: 0,
            };
            for s in 1..=n {
                cost.trotter_steps += s;
                cost.elementary_gates += gates(s)?;
            }
            Ok(cost)
        }
        Method::Ep => {
            if grid_size == 0 {
                return Err(Error::invalid("grid size must be at least 1"));
            }
            let variants: &[Variant] = if f.is_symmetric() {
                &[Variant::ForwardForward]
            } else {
                &Variant::ALL
            };
            let mut per_point = 0;
            for &variant in variants {
                let spec = CompositeSpec {
                    variant,
                    a: 0.3,
                    t: 0.5,
                    trotter_steps: n,
                };
                per_point += composite_circuit(&spec, f, partition)?.len();
            }
            Ok(CircuitCost {
                circuits: grid_size * variants.len(),
                trotter_steps: grid_size * variants.len() * 2 * n,
                elementary_gates: grid_size * per_point,
            })
        }
    }
}

/// Closed-form counterpart of [`circuit_cost`] from the single-step gate count.
pub fn analytic_cost(
    method: Method,
    f: &ProductFormula,
    partition: &PartitionedHamiltonian,
    n: usize,
    grid_size: usize,
) -> Result<CircuitCost> {
    let per_step = compile_circuit(f, partition, 0.5, 1)?.len();
    let variants = if f.is_symmetric() { 1 } else { 4 };
    Ok(match method {
        Method::Trotter => CircuitCost {
            circuits: 1,
            trotter_steps: n,
            elementary_gates: n * per_step,
        },
        Method::Mpf => CircuitCost {
            circuits: n,
            trotter_steps: n * (n + 1) / 2,
            elementary_gates: per_step * n * (n + 1) / 2,
        },
        Method::Ep => CircuitCost {
            circuits: grid_size * variants,
            trotter_steps: grid_size * variants * 2 * n,
            elementary_gates: grid_size * variants * 2 * n * per_step,
        },
    })
}
