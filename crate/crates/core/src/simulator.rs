//! Dense statevector simulation with Pauli-rotation gates.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::pauli::{
    to_dense_capped, DenseOperator, OperatorSum, PauliWord, C64, DEFAULT_DENSE_CAP,
};

/// Largest register the statevector simulator accepts.
pub const MAX_STATE_QUBITS: usize = 26;
const NORM_TOLERANCE: f64 = 1e-10;
const IMAGINARY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Normalizes `amplitudes`, whose length must be a power of two.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::invalid(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let n = len.trailing_zeros() as usize;
        if n > MAX_STATE_QUBITS {
            return Err(Error::ResourceCap {
                what: "statevector",
                qubits: n,
                cap: MAX_STATE_QUBITS,
            });
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::DegenerateInput("state has zero norm".into()));
        }
        Ok(StateVector {
            n,
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        if n == 0 || n > MAX_STATE_QUBITS || index >= 1 << n {
            return Err(Error::invalid(format!("basis state {index} on {n} qubits")));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << n];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(StateVector { n, amplitudes })
    }

    /// Haar-ish random state drawn from independent complex Gaussians.
    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let amps = (0..1usize << n)
            .map(|_| C64::new(normal.sample(rng), normal.sample(rng)))
            .collect();
        StateVector::from_amplitudes(amps).expect("gaussian draw is nonzero")
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_qubits(self.n, other.n)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn rotate_in_place(&mut self, word: &PauliWord, angle: f64) {
        let masks = word.masks();
        let (c, s) = (angle.cos(), angle.sin());
        let minus_i_sin = C64::new(0.0, -s);
        let x = masks.x as usize;
        if x == 0 {
            // diagonal: each amplitude only picks up its own phase
            for (j, a) in self.amplitudes.iter_mut().enumerate() {
                *a *= c + minus_i_sin * masks.phase(j);
            }
            return;
        }
        let high = 1usize << (usize::BITS - 1 - x.leading_zeros());
        for j in 0..self.amplitudes.len() {
            if j & high != 0 {
                continue;
            }
            let k = j ^ x;
            let (aj, ak) = (self.amplitudes[j], self.amplitudes[k]);
            // (P psi)[j] = phase(k) psi[k], (P psi)[k] = phase(j) psi[j]
            self.amplitudes[j] = c * aj + minus_i_sin * masks.phase(k) * ak;
            self.amplitudes[k] = c * ak + minus_i_sin * masks.phase(j) * aj;
        }
    }

    fn check_unit_norm(&self) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::invalid(format!("state norm drifted to {norm}")));
        }
        Ok(())
    }
}

fn check_qubits(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Normalized Kronecker product of per-qubit `(amp0, amp1)` factors, qubit 1 first.
pub fn init_product_state(factors: &[[C64; 2]]) -> Result<StateVector> {
    if factors.is_empty() {
        return Err(Error::DegenerateInput("no qubit factors given".into()));
    }
    if let Some(k) = factors
        .iter()
        .position(|f| f[0].norm() == 0.0 && f[1].norm() == 0.0)
    {
        return Err(Error::DegenerateInput(format!(
            "factor for qubit {} is zero",
            k + 1
        )));
    }
    let mut amps = vec![C64::new(1.0, 0.0)];
    for f in factors {
        amps = amps.iter().flat_map(|a| [a * f[0], a * f[1]]).collect();
    }
    StateVector::from_amplitudes(amps)
}

/// The gate `exp(-i * angle * P)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliRotation {
    word: PauliWord,
    angle: f64,
}

impl PauliRotation {
    pub fn new(word: PauliWord, angle: f64) -> Result<Self> {
        if word.is_identity() {
            return Err(Error::invalid("a rotation needs a non-identity Pauli word"));
        }
        Ok(PauliRotation { word, angle })
    }

    pub fn word(&self) -> &PauliWord {
        &self.word
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn num_qubits(&self) -> usize {
        self.word.len()
    }

    pub fn inverse(&self) -> PauliRotation {
        PauliRotation {
            word: self.word.clone(),
            angle: -self.angle,
        }
    }
}

pub fn apply_pauli_rotation(state: &StateVector, gate: &PauliRotation) -> Result<StateVector> {
    check_qubits(state.n, gate.num_qubits())?;
    let mut out = state.clone();
    out.rotate_in_place(&gate.word, gate.angle);
    Ok(out)
}

/// An ordered gate list; the first gate acts first. `global_phase` is the
/// angle of an overall `exp(-i * global_phase)` factor from identity terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n: usize,
    gates: Vec<PauliRotation>,
    global_phase: f64,
}

impl Circuit {
    pub fn new(n: usize, gates: Vec<PauliRotation>) -> Result<Self> {
        Circuit::with_phase(n, gates, 0.0)
    }

    pub fn with_phase(n: usize, gates: Vec<PauliRotation>, global_phase: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("circuits need at least one qubit"));
        }
        for g in &gates {
            check_qubits(n, g.num_qubits())?;
        }
        Ok(Circuit {
            n,
            gates,
            global_phase,
        })
    }

    pub fn empty(n: usize) -> Self {
        Circuit {
            n,
            gates: vec![],
            global_phase: 0.0,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[PauliRotation] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn global_phase(&self) -> f64 {
        self.global_phase
    }

    /// Gate order reversed and every angle negated.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            n: self.n,
            gates: self
                .gates
                .iter()
                .rev()
                .map(PauliRotation::inverse)
                .collect(),
            global_phase: -self.global_phase,
        }
    }

    /// `self` followed by `next`.
    pub fn then(mut self, next: &Circuit) -> Result<Circuit> {
        check_qubits(self.n, next.n)?;
        self.gates.extend(next.gates.iter().cloned());
        self.global_phase += next.global_phase;
        Ok(self)
    }

    pub fn repeat(&self, times: usize) -> Circuit {
        let mut gates = Vec::with_capacity(self.gates.len() * times);
        for _ in 0..times {
            gates.extend(self.gates.iter().cloned());
        }
        Circuit {
            n: self.n,
            gates,
            global_phase: self.global_phase * times as f64,
        }
    }

    /// Dense unitary, built column by column from basis states.
    pub fn to_dense(&self, cap: usize) -> Result<DenseOperator> {
        if self.n > cap {
            return Err(Error::ResourceCap {
                what: "dense circuit unitary",
                qubits: self.n,
                cap,
            });
        }
        let dim = 1usize << self.n;
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        for col in 0..dim {
            let out = apply_circuit(&StateVector::basis(self.n, col)?, self)?;
            for (row, a) in out.amplitudes.iter().enumerate() {
                m[(row, col)] = *a;
            }
        }
        DenseOperator::from_matrix(self.n, m)
    }

    /// Lexicographic normal form under swaps of adjacent commuting gates.
    ///
    /// Two circuits that differ only by reordering commuting neighbours map to
    /// the same gate sequence, so they can be compared gate for gate.
    pub fn commutation_normal_form(&self) -> Vec<PauliRotation> {
        let mut remaining: Vec<PauliRotation> = self.gates.clone();
        let mut out = Vec::with_capacity(remaining.len());
        while !remaining.is_empty() {
            let mut best: Option<usize> = None;
            for i in 0..remaining.len() {
                let movable = remaining[..i]
                    .iter()
                    .all(|g| g.word.commutes_with(&remaining[i].word));
                if !movable {
                    continue;
                }
                let better = |b: usize| {
                    remaining[i]
                        .word
                        .cmp(&remaining[b].word)
                        .then(remaining[i].angle.total_cmp(&remaining[b].angle))
                        .is_lt()
                };
                best = match best {
                    Some(b) if !better(b) => Some(b),
                    _ => Some(i),
                };
            }
            out.push(remaining.remove(best.expect("first gate is always movable")));
        }
        out
    }

    /// Gate-for-gate equality of normal forms with angles compared to `tol`.
    pub fn equivalent_to(&self, other: &Circuit, tol: f64) -> bool {
        if self.n != other.n || self.gates.len() != other.gates.len() {
            return false;
        }
        if (self.global_phase - other.global_phase).abs() > tol {
            return false;
        }
        let a = self.commutation_normal_form();
        let b = other.commutation_normal_form();
        a.iter()
            .zip(&b)
            .all(|(g, h)| g.word == h.word && (g.angle - h.angle).abs() <= tol)
    }
}

/// Applies the gates in list order; the leftmost gate acts first.
pub fn apply_circuit(state: &StateVector, circuit: &Circuit) -> Result<StateVector> {
    check_qubits(state.n, circuit.n)?;
    let mut out = state.clone();
    for g in &circuit.gates {
        out.rotate_in_place(&g.word, g.angle);
    }
    if circuit.global_phase != 0.0 {
        let phase = C64::from_polar(1.0, -circuit.global_phase);
        out.amplitudes.iter_mut().for_each(|a| *a *= phase);
    }
    Ok(out)
}

/// `exp(-iHt)` from a Hermitian eigendecomposition of the dense Hamiltonian.
#[derive(Debug, Clone)]
pub struct ExactPropagator {
    n: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<C64>,
}

impl ExactPropagator {
    pub fn new(h: &OperatorSum) -> Result<Self> {
        ExactPropagator::with_cap(h, DEFAULT_DENSE_CAP)
    }

    pub fn with_cap(h: &OperatorSum, cap: usize) -> Result<Self> {
        if !h.is_hermitian() {
            return Err(Error::NotHermitian(format!("Hamiltonian {h}")));
        }
        let dense = to_dense_capped(h, cap)?;
        let eig = dense.into_matrix().symmetric_eigen();
        Ok(ExactPropagator {
            n: h.num_qubits(),
            eigenvalues: eig.eigenvalues.iter().cloned().collect(),
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn evolve(&self, t: f64, state: &StateVector) -> Result<StateVector> {
        check_qubits(self.n, state.n)?;
        let psi = DVector::from_column_slice(&state.amplitudes);
        let mut coeffs = self.eigenvectors.adjoint() * psi;
        for (c, &lambda) in coeffs.iter_mut().zip(&self.eigenvalues) {
            *c *= C64::from_polar(1.0, -lambda * t);
        }
        let out = &self.eigenvectors * coeffs;
        Ok(StateVector {
            n: self.n,
            amplitudes: out.iter().cloned().collect(),
        })
    }

    /// Dense `exp(-iHt)`.
    pub fn unitary(&self, t: f64) -> DenseOperator {
        let mut scaled = self.eigenvectors.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let phase = C64::from_polar(1.0, -lambda * t);
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= phase);
        }
        let m = scaled * self.eigenvectors.adjoint();
        DenseOperator::from_matrix(self.n, m).expect("propagator dimension is consistent")
    }
}

/// `exp(-iHt)|state>`.
pub fn exact_evolve(h: &OperatorSum, t: f64, state: &StateVector) -> Result<StateVector> {
    check_qubits(h.num_qubits(), state.n)?;
    ExactPropagator::new(h)?.evolve(t, state)
}

/// `<psi|O|psi>` for a Hermitian observable.
pub fn expectation(state: &StateVector, obs: &OperatorSum) -> Result<f64> {
    check_qubits(state.n, obs.num_qubits())?;
    if !obs.is_hermitian() {
        return Err(Error::NotHermitian(format!("observable {obs}")));
    }
    state.check_unit_norm()?;
    let mut total = C64::new(0.0, 0.0);
    for term in obs.terms() {
        let masks = term.word.masks();
        let x = masks.x as usize;
        let mut acc = C64::new(0.0, 0.0);
        for (j, a) in state.amplitudes.iter().enumerate() {
            acc += state.amplitudes[j ^ x].conj() * masks.phase(j) * a;
        }
        total += term.coeff * acc;
    }
    if total.im.abs() > IMAGINARY_TOLERANCE * obs.one_norm().max(1.0) {
        return Err(Error::invalid(format!(
            "expectation has imaginary residue {:e}",
            total.im
        )));
    }
    Ok(total.re)
}

/// Optional additive Gaussian perturbation of expectation values, keyed so
/// every evaluation draws from its own reproducible stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel {
            sigma: 0.0,
            seed: 0,
        }
    }

    pub fn is_active(&self) -> bool {
        self.sigma > 0.0
    }

    pub fn perturb(&self, value: f64, key: &[u64]) -> f64 {
        if !self.is_active() {
            return value;
        }
        let mut h = self.seed ^ 0x9e37_79b9_7f4a_7c15;
        for &k in key {
            h = splitmix(h ^ k);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(h);
        let normal = Normal::new(0.0, self.sigma).expect("sigma is finite and positive");
        value + normal.sample(&mut rng)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
