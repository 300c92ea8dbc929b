use crate::error::{Error, Result};
use crate::formula::{compile_circuit, invert_circuit, PartitionedHamiltonian, ProductFormula};
use crate::pauli::OperatorSum;
use crate::simulator::{apply_circuit, expectation, Circuit, ExactPropagator, StateVector};

/// Which of the four forward/inverted products to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// `V_N(at) V_N(āt)`
    ForwardForward,
    /// `V_N†(-at) V_N(āt)`
    InvertedForward,
    /// `V_N(at) V_N†(-āt)`
    ForwardInverted,
    /// `V_N†(-at) V_N†(-āt)`
    InvertedInverted,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::ForwardForward,
        Variant::InvertedForward,
        Variant::ForwardInverted,
        Variant::InvertedInverted,
    ];

    pub fn index(self) -> u8 {
        match self {
            Variant::ForwardForward => 1,
            Variant::InvertedForward => 2,
            Variant::ForwardInverted => 3,
            Variant::InvertedInverted => 4,
        }
    }

    fn left_inverted(self) -> bool {
        matches!(self, Variant::InvertedForward | Variant::InvertedInverted)
    }

    fn right_inverted(self) -> bool {
        matches!(self, Variant::ForwardInverted | Variant::InvertedInverted)
    }
}

impl TryFrom<u8> for Variant {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|x| x.index() == v)
            .ok_or(Error::InvalidVariant(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeSpec {
    pub variant: Variant,
    pub a: f64,
    pub t: f64,
    pub trotter_steps: usize,
}

impl CompositeSpec {
    pub fn a_bar(&self) -> f64 {
        1.0 - self.a
    }
}

fn factor(
    f: &ProductFormula,
    partition: &PartitionedHamiltonian,
    s: f64,
    n: usize,
    inverted: bool,
) -> Result<Circuit> {
    if inverted {
        Ok(invert_circuit(&compile_circuit(f, partition, -s, n)?))
    } else {
        compile_circuit(f, partition, s, n)
    }
}

/// The composite circuit; the right factor (time `āt`) runs first.
pub fn composite_circuit(
    spec: &CompositeSpec,
    f: &ProductFormula,
    partition: &PartitionedHamiltonian,
) -> Result<Circuit> {
    let v = spec.variant;
    let right = factor(
        f,
        partition,
        spec.a_bar() * spec.t,
        spec.trotter_steps,
        v.right_inverted(),
    )?;
    let left = factor(
        f,
        partition,
        spec.a * spec.t,
        spec.trotter_steps,
        v.left_inverted(),
    )?;
    right.then(&left)
}

/// Time evolution that can be run forward or as the inverse of its
/// time-reversed self. Trotter circuits and the exact propagator both qualify.
pub trait Dynamics: Sync {
    fn num_qubits(&self) -> usize;

    /// Whether `V(-s)` equals `V†(s)`, so one composite variant suffices.
    fn is_symmetric(&self) -> bool;

    /// Applies `V_N(s)`.
    fn forward(&self, s: f64, state: &StateVector) -> Result<StateVector>;

    /// Applies `V_N†(-s)`.
    fn inverted(&self, s: f64, state: &StateVector) -> Result<StateVector>;

    fn apply(&self, s: f64, inverted: bool, state: &StateVector) -> Result<StateVector> {
        if inverted {
            self.inverted(s, state)
        } else {
            self.forward(s, state)
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrotterDynamics {
    pub formula: ProductFormula,
    pub partition: PartitionedHamiltonian,
    pub trotter_steps: usize,
}

impl TrotterDynamics {
    pub fn new(
        formula: ProductFormula,
        partition: PartitionedHamiltonian,
        trotter_steps: usize,
    ) -> Result<Self> {
        if trotter_steps == 0 {
            return Err(Error::invalid("trotter_steps must be at least 1"));
        }
        // compile once to surface index errors early
        compile_circuit(&formula, &partition, 0.0, 1)?;
        Ok(TrotterDynamics {
            formula,
            partition,
            trotter_steps,
        })
    }

    pub fn with_steps(&self, trotter_steps: usize) -> Result<Self> {
        TrotterDynamics::new(self.formula.clone(), self.partition.clone(), trotter_steps)
    }
}

impl Dynamics for TrotterDynamics {
    fn num_qubits(&self) -> usize {
        self.partition.num_qubits()
    }

    fn is_symmetric(&self) -> bool {
        self.formula.is_symmetric()
    }

    fn forward(&self, s: f64, state: &StateVector) -> Result<StateVector> {
        apply_circuit(
            state,
            &compile_circuit(&self.formula, &self.partition, s, self.trotter_steps)?,
        )
    }

    fn inverted(&self, s: f64, state: &StateVector) -> Result<StateVector> {
        let c = compile_circuit(&self.formula, &self.partition, -s, self.trotter_steps)?;
        apply_circuit(state, &invert_circuit(&c))
    }
}

/// The ideal propagator standing in for a product formula.
#[derive(Debug, Clone)]
pub struct ExactDynamics {
    propagator: ExactPropagator,
}

impl ExactDynamics {
    pub fn new(h: &OperatorSum) -> Result<Self> {
        Ok(ExactDynamics {
            propagator: ExactPropagator::new(h)?,
        })
    }

    pub fn propagator(&self) -> &ExactPropagator {
        &self.propagator
    }
}

impl Dynamics for ExactDynamics {
    fn num_qubits(&self) -> usize {
        self.propagator.num_qubits()
    }

    fn is_symmetric(&self) -> bool {
        true
    }

    fn forward(&self, s: f64, state: &StateVector) -> Result<StateVector> {
        self.propagator.evolve(s, state)
    }

    fn inverted(&self, s: f64, state: &StateVector) -> Result<StateVector> {
        self.propagator.evolve(s, state)
    }
}

/// Expectation of `obs` after one composite variant.
pub fn variant_expectation<D: Dynamics + ?Sized>(
    dynamics: &D,
    variant: Variant,
    a: f64,
    t: f64,
    obs: &OperatorSum,
    psi: &StateVector,
) -> Result<f64> {
    let mid = dynamics.apply((1.0 - a) * t, variant.right_inverted(), psi)?;
    let out = dynamics.apply(a * t, variant.left_inverted(), &mid)?;
    expectation(&out, obs)
}

/// Expectations of all four variants, in variant order.
pub fn all_variant_expectations<D: Dynamics + ?Sized>(
    dynamics: &D,
    a: f64,
    t: f64,
    obs: &OperatorSum,
    psi: &StateVector,
) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for (slot, v) in out.iter_mut().zip(Variant::ALL) {
        *slot = variant_expectation(dynamics, v, a, t, obs, psi)?;
    }
    Ok(out)
}

/// Mean over the four variants, or variant 1 alone for symmetric dynamics.
pub fn averaged_expectation_with<D: Dynamics + ?Sized>(
    dynamics: &D,
    a: f64,
    t: f64,
    obs: &OperatorSum,
    psi: &StateVector,
) -> Result<f64> {
    if dynamics.is_symmetric() {
        return variant_expectation(dynamics, Variant::ForwardForward, a, t, obs, psi);
    }
    let v = all_variant_expectations(dynamics, a, t, obs, psi)?;
    Ok(v.iter().sum::<f64>() / 4.0)
}

#[allow(clippy::too_many_arguments)]
pub fn averaged_expectation(
    a: f64,
    t: f64,
    f: &ProductFormula,
    partition: &PartitionedHamiltonian,
    obs: &OperatorSum,
    psi: &StateVector,
    trotter_steps: usize,
) -> Result<f64> {
    let dynamics = TrotterDynamics::new(f.clone(), partition.clone(), trotter_steps)?;
    averaged_expectation_with(&dynamics, a, t, obs, psi)
}

/// Simulates all four variants even for symmetric dynamics and checks they
/// agree with the single-variant shortcut to within `tol`.
pub fn check_symmetric_reduction<D: Dynamics + ?Sized>(
    dynamics: &D,
    a: f64,
    t: f64,
    obs: &OperatorSum,
    psi: &StateVector,
    tol: f64,
) -> Result<f64> {
    let all = all_variant_expectations(dynamics, a, t, obs, psi)?;
    let spread = all.iter().map(|v| (v - all[0]).abs()).fold(0.0, f64::max);
    if dynamics.is_symmetric() && spread > tol {
        return Err(Error::invalid(format!(
            "composite variants disagree by {spread:e} for a symmetric formula"
        )));
    }
    Ok(spread)
}
