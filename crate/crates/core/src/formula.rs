//! Product formulas, Hamiltonian partitions and circuit compilation.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::linear_slope;
use crate::pauli::{mutually_commuting, OperatorSum, PauliTerm, DEFAULT_DENSE_CAP};
use crate::simulator::{Circuit, ExactPropagator, PauliRotation};

const CONSISTENCY_TOLERANCE: f64 = 1e-12;
const DEVIATION_FLOOR: f64 = 1e-14;
const DEVIATION_CEILING: f64 = 0.1;

/// A Hermitian sum of mutually commuting Pauli terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    terms: OperatorSum,
}

impl Fragment {
    pub fn new(terms: OperatorSum) -> Result<Self> {
        if !terms.is_hermitian() {
            return Err(Error::NotHermitian(format!("fragment {terms}")));
        }
        if !mutually_commuting(terms.terms()) {
            return Err(Error::invalid(format!(
                "fragment terms do not commute: {terms}"
            )));
        }
        Ok(Fragment { terms })
    }

    pub fn terms(&self) -> &OperatorSum {
        &self.terms
    }

    pub fn num_qubits(&self) -> usize {
        self.terms.num_qubits()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedHamiltonian {
    n: usize,
    fragments: Vec<Fragment>,
}

impl PartitionedHamiltonian {
    pub fn new(fragments: Vec<Fragment>) -> Result<Self> {
        let n = fragments
            .first()
            .ok_or_else(|| Error::invalid("a partition needs at least one fragment"))?
            .num_qubits();
        for f in &fragments {
            if f.num_qubits() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: f.num_qubits(),
                });
            }
        }
        Ok(PartitionedHamiltonian { n, fragments })
    }

    /// Groups the terms of `h` by index; every term must land in exactly one group.
    pub fn from_cover(h: &OperatorSum, groups: &[Vec<usize>]) -> Result<Self> {
        let terms = h.terms();
        let mut seen = vec![false; terms.len()];
        let mut fragments = Vec::with_capacity(groups.len());
        for group in groups {
            let mut chosen: Vec<PauliTerm> = Vec::with_capacity(group.len());
            for &idx in group {
                if idx >= terms.len() {
                    return Err(Error::IndexOutOfRange {
                        index: idx,
                        len: terms.len(),
                    });
                }
                if seen[idx] {
                    return Err(Error::invalid(format!(
                        "term {idx} ({}) appears in more than one fragment",
                        terms[idx].word
                    )));
                }
                seen[idx] = true;
                chosen.push(terms[idx].clone());
            }
            fragments.push(Fragment::new(OperatorSum::new(h.num_qubits(), chosen)?)?);
        }
        if let Some(idx) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!(
                "term {idx} ({}) is not assigned to any fragment",
                terms[idx].word
            )));
        }
        PartitionedHamiltonian::new(fragments)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn fragments(&self) -> &[Fragment] {
        &self.fragments
    }

    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    /// Sum of all fragments.
    pub fn hamiltonian(&self) -> OperatorSum {
        self.fragments
            .iter()
            .fold(OperatorSum::zero(self.n), |acc, f| {
                acc.add(f.terms()).expect("fragments share a qubit count")
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormulaName {
    Lie1,
    Strang2,
    Ruth3,
    Suzuki4,
}

impl FormulaName {
    pub const ALL: [FormulaName; 4] = [
        FormulaName::Lie1,
        FormulaName::Strang2,
        FormulaName::Ruth3,
        FormulaName::Suzuki4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FormulaName::Lie1 => "lie1",
            FormulaName::Strang2 => "strang2",
            FormulaName::Ruth3 => "ruth3",
            FormulaName::Suzuki4 => "suzuki4",
        }
    }

    pub fn alpha(self) -> u32 {
        match self {
            FormulaName::Lie1 => 2,
            FormulaName::Strang2 => 3,
            FormulaName::Ruth3 => 4,
            FormulaName::Suzuki4 => 5,
        }
    }

    pub fn is_symmetric(self) -> bool {
        matches!(self, FormulaName::Strang2 | FormulaName::Suzuki4)
    }
}

impl fmt::Display for FormulaName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormulaName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FormulaName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::UnknownFormula(s.to_string()))
    }
}

/// One factor `exp(-i * coeff * t * H_fragment)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub fragment: usize,
    pub coeff: f64,
}

impl Step {
    pub fn new(fragment: usize, coeff: f64) -> Self {
        Step { fragment, coeff }
    }
}

/// An ordered product of fragment exponentials.
///
/// Steps are listed in operator-product order as written on paper: the last
/// step is the rightmost factor and acts on the state first.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductFormula {
    name: String,
    steps: Vec<Step>,
    alpha: u32,
    symmetric: bool,
}

/// `1 / (4 - 4^(1/3))`, the outer Suzuki weight.
pub fn suzuki_p() -> f64 {
    1.0 / (4.0 - 4f64.cbrt())
}

fn strang_steps(k: usize, scale: f64) -> Vec<Step> {
    let mut steps: Vec<Step> = (0..k - 1).map(|j| Step::new(j, 0.5 * scale)).collect();
    steps.push(Step::new(k - 1, scale));
    steps.extend((0..k - 1).rev().map(|j| Step::new(j, 0.5 * scale)));
    steps
}

impl ProductFormula {
    /// A user-defined formula over `num_fragments` fragments. Every fragment's
    /// coefficients must sum to one.
    pub fn custom(
        name: impl Into<String>,
        steps: Vec<Step>,
        alpha: u32,
        symmetric: bool,
        num_fragments: usize,
    ) -> Result<Self> {
        let name = name.into();
        if alpha < 2 {
            return Err(Error::invalid(format!(
                "formula `{name}`: alpha must be at least 2"
            )));
        }
        if steps.is_empty() {
            return Err(Error::invalid(format!("formula `{name}` has no steps")));
        }
        let mut sums = vec![0.0; num_fragments];
        for s in &steps {
            if s.fragment >= num_fragments {
                return Err(Error::IndexOutOfRange {
                    index: s.fragment,
                    len: num_fragments,
                });
            }
            if !s.coeff.is_finite() {
                return Err(Error::invalid(format!(
                    "formula `{name}` has a non-finite coefficient"
                )));
            }
            sums[s.fragment] += s.coeff;
        }
        for (k, sum) in sums.iter().enumerate() {
            if (sum - 1.0).abs() > CONSISTENCY_TOLERANCE {
                return Err(Error::invalid(format!(
                    "formula `{name}`: coefficients of fragment {k} sum to {sum}, expected 1"
                )));
            }
        }
        Ok(ProductFormula {
            name,
            steps,
            alpha,
            symmetric,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn alpha(&self) -> u32 {
        self.alpha
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Largest fragment index referenced, plus one.
    pub fn fragment_span(&self) -> usize {
        self.steps.iter().map(|s| s.fragment + 1).max().unwrap_or(0)
    }
}

pub fn builtin_formula(
    name: FormulaName,
    partition: &PartitionedHamiltonian,
) -> Result<ProductFormula> {
    let k = partition.len();
    let needed = match name {
        FormulaName::Ruth3 => k == 2,
        _ => k >= 2,
    };
    if !needed {
        return Err(Error::FragmentCount {
            name: name.to_string(),
            expected: if name == FormulaName::Ruth3 {
                "exactly 2".into()
            } else {
                "at least 2".into()
            },
            found: k,
        });
    }
    let steps = match name {
        FormulaName::Lie1 => (0..k).map(|j| Step::new(j, 1.0)).collect(),
        FormulaName::Strang2 => strang_steps(k, 1.0),
        FormulaName::Ruth3 => [
            (0, 7.0 / 24.0),
            (1, 2.0 / 3.0),
            (0, 3.0 / 4.0),
            (1, -2.0 / 3.0),
            (0, -1.0 / 24.0),
            (1, 1.0),
        ]
        .into_iter()
        .map(|(j, c)| Step::new(j, c))
        .collect(),
        FormulaName::Suzuki4 => {
            let p = suzuki_p();
            [p, p, 1.0 - 4.0 * p, p, p]
                .into_iter()
                .flat_map(|w| strang_steps(k, w))
                .collect()
        }
    };
    ProductFormula::custom(name.as_str(), steps, name.alpha(), name.is_symmetric(), k)
}

fn check_span(f: &ProductFormula, partition: &PartitionedHamiltonian) -> Result<()> {
    if let Some(s) = f.steps.iter().find(|s| s.fragment >= partition.len()) {
        return Err(Error::IndexOutOfRange {
            index: s.fragment,
            len: partition.len(),
        });
    }
    Ok(())
}

/// Circuit for `(V(t/N))^N`.
pub fn compile_circuit(
    f: &ProductFormula,
    partition: &PartitionedHamiltonian,
    t: f64,
    trotter_steps: usize,
) -> Result<Circuit> {
    if trotter_steps == 0 {
        return Err(Error::invalid("trotter_steps must be at least 1"));
    }
    check_span(f, partition)?;
    let dt = t / trotter_steps as f64;
    let mut gates = Vec::new();
    let mut phase = 0.0;
    for step in f.steps.iter().rev() {
        for term in partition.fragments[step.fragment].terms().terms() {
            let angle = step.coeff * dt * term.coeff.re;
            if term.word.is_identity() {
                phase += angle;
            } else {
                gates.push(PauliRotation::new(term.word.clone(), angle)?);
            }
        }
    }
    let single = Circuit::with_phase(partition.num_qubits(), gates, phase)?;
    Ok(single.repeat(trotter_steps))
}

/// Reversed gate order with negated angles.
pub fn invert_circuit(c: &Circuit) -> Circuit {
    c.inverse()
}

/// Log-log slope of the spectral-norm deviation `||V(t) - U(t)||` over `probe`.
pub fn empirical_order(
    f: &ProductFormula,
    partition: &PartitionedHamiltonian,
    probe: &[f64],
) -> Result<f64> {
    if probe.len() < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            found: probe.len(),
        });
    }
    let exact = ExactPropagator::new(&partition.hamiltonian())?;
    let mut logs_t = Vec::with_capacity(probe.len());
    let mut logs_d = Vec::with_capacity(probe.len());
    for &t in probe {
        if !(t > 0.0) {
            return Err(Error::invalid(format!("probe time {t} must be positive")));
        }
        let v = compile_circuit(f, partition, t, 1)?.to_dense(DEFAULT_DENSE_CAP)?;
        let dev = (&v - &exact.unitary(t)).spectral_norm();
        if dev < DEVIATION_FLOOR {
            return Err(Error::DegenerateInput(format!(
                "deviation {dev:e} at t = {t} is below the {DEVIATION_FLOOR:e} floor"
            )));
        }
        if dev > DEVIATION_CEILING {
            return Err(Error::invalid(format!(
                "deviation {dev:e} at t = {t} is outside the small-t regime"
            )));
        }
        logs_t.push(t.ln());
        logs_d.push(dev.ln());
    }
    Ok(linear_slope(&logs_t, &logs_d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::geometric_grid;
    use crate::simulator::{apply_circuit, StateVector};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tfim() -> PartitionedHamiltonian {
        let zz = OperatorSum::from_real_terms(4, &[("ZZII", 1.0), ("IIZZ", 1.0), ("IZZI", 1.0)])
            .unwrap();
        let x = OperatorSum::from_real_terms(
            4,
            &[
                ("XIII", 1.0 / 3.0),
                ("IXII", 1.0 / 3.0),
                ("IIXI", 1.0 / 3.0),
                ("IIIX", 1.0 / 3.0),
            ],
        )
        .unwrap();
        PartitionedHamiltonian::new(vec![Fragment::new(zz).unwrap(), Fragment::new(x).unwrap()])
            .unwrap()
    }

    fn three_fragments() -> PartitionedHamiltonian {
        let f =
            |t: &[(&str, f64)]| Fragment::new(OperatorSum::from_real_terms(3, t).unwrap()).unwrap();
        PartitionedHamiltonian::new(vec![
            f(&[("XXI", 0.8), ("IXX", 0.5)]),
            f(&[("YIY", 0.3)]),
            f(&[("ZII", 0.4), ("IZI", -0.2), ("IIZ", 0.9)]),
        ])
        .unwrap()
    }

    #[test]
    fn ruth_coefficients() {
        let f = builtin_formula(FormulaName::Ruth3, &tfim()).unwrap();
        let coeffs: Vec<f64> = f.steps().iter().map(|s| s.coeff).collect();
        assert_eq!(
            coeffs,
            vec![7.0 / 24.0, 2.0 / 3.0, 0.75, -2.0 / 3.0, -1.0 / 24.0, 1.0]
        );
        let frags: Vec<usize> = f.steps().iter().map(|s| s.fragment).collect();
        assert_eq!(frags, vec![0, 1, 0, 1, 0, 1]);
        assert_eq!((f.alpha(), f.is_symmetric()), (4, false));
    }

    #[test]
    fn lie_steps() {
        let f = builtin_formula(FormulaName::Lie1, &tfim()).unwrap();
        assert_eq!(f.steps(), &[Step::new(0, 1.0), Step::new(1, 1.0)]);
        assert_eq!(f.alpha(), 2);
    }

    #[test]
    fn suzuki_weight_and_sums() {
        assert!((suzuki_p() - 0.414_490_771_794_375_7).abs() < 1e-15);
        for p in [tfim(), three_fragments()] {
            let f = builtin_formula(FormulaName::Suzuki4, &p).unwrap();
            for k in 0..p.len() {
                let sum: f64 = f
                    .steps()
                    .iter()
                    .filter(|s| s.fragment == k)
                    .map(|s| s.coeff)
                    .sum();
                assert!((sum - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fragment_count_checked() {
        assert!(matches!(
            builtin_formula(FormulaName::Ruth3, &three_fragments()),
            Err(Error::FragmentCount { .. })
        ));
        let one = PartitionedHamiltonian::new(vec![tfim().fragments()[0].clone()]).unwrap();
        assert!(builtin_formula(FormulaName::Lie1, &one).is_err());
        assert!(matches!(
            "ruth4".parse::<FormulaName>(),
            Err(Error::UnknownFormula(_))
        ));
    }

    #[test]
    fn custom_sum_violation_rejected() {
        let steps = vec![
            Step::new(0, 0.5),
            Step::new(1, 1.0),
            Step::new(0, 0.5 + 1e-9),
        ];
        assert!(ProductFormula::custom("bad", steps, 2, false, 2).is_err());
    }

    #[test]
    fn fragments_must_commute() {
        let bad = OperatorSum::from_real_terms(1, &[("X", 1.0), ("Z", 1.0)]).unwrap();
        assert!(Fragment::new(bad).is_err());
    }

    #[test]
    fn cover_validation() {
        let h = tfim().hamiltonian();
        assert!(PartitionedHamiltonian::from_cover(&h, &[vec![0, 1, 2], vec![3, 4, 5, 6]]).is_ok());
        let err =
            PartitionedHamiltonian::from_cover(&h, &[vec![0, 1, 2], vec![3, 4, 5]]).unwrap_err();
        assert!(err.to_string().contains("IIIX"), "{err}");
        assert!(
            PartitionedHamiltonian::from_cover(&h, &[vec![0, 1, 2, 2], vec![3, 4, 5, 6]]).is_err()
        );
    }

    #[test]
    fn zero_time_is_identity() {
        let p = tfim();
        let c = compile_circuit(
            &builtin_formula(FormulaName::Ruth3, &p).unwrap(),
            &p,
            0.0,
            1,
        )
        .unwrap();
        assert!(c.gates().iter().all(|g| g.angle() == 0.0));
        let psi = StateVector::basis(4, 5).unwrap();
        assert_eq!(apply_circuit(&psi, &c).unwrap(), psi);
    }

    #[test]
    fn lie_circuit_angles() {
        let p = tfim();
        let t = 0.3;
        let c =
            compile_circuit(&builtin_formula(FormulaName::Lie1, &p).unwrap(), &p, t, 1).unwrap();
        assert_eq!(c.len(), 7);
        // the X layer is the right factor, so it acts first
        for g in &c.gates()[..4] {
            assert!(g.word().to_string().contains('X'));
            assert!((g.angle() - t / 3.0).abs() < 1e-15);
        }
        for g in &c.gates()[4..] {
            assert!((g.angle() - t).abs() < 1e-15);
        }
    }

    #[test]
    fn trotter_steps_split_angles() {
        let p = tfim();
        let f = builtin_formula(FormulaName::Suzuki4, &p).unwrap();
        let one = compile_circuit(&f, &p, 0.8, 1).unwrap();
        let two = compile_circuit(&f, &p, 0.8, 2).unwrap();
        assert_eq!(two.len(), 2 * one.len());
        for (g, h) in one.gates().iter().zip(two.gates()) {
            assert!((h.angle() - g.angle() / 2.0).abs() < 1e-15);
        }
        for n in 1..5 {
            assert_eq!(
                compile_circuit(&f, &p, 0.8, n).unwrap().len(),
                n * one.len()
            );
        }
        assert!(compile_circuit(&f, &p, 0.8, 0).is_err());
    }

    #[test]
    fn inversion_of_lie_layer() {
        let zz: PauliRotation = PauliRotation::new("ZZ".parse().unwrap(), 0.3).unwrap();
        let x = PauliRotation::new("XI".parse().unwrap(), 0.1).unwrap();
        let c = Circuit::new(2, vec![zz.clone(), x.clone()]).unwrap();
        let inv = invert_circuit(&c);
        assert_eq!(inv.gates(), &[x.inverse(), zz.inverse()]);
        assert!(invert_circuit(&Circuit::empty(2)).is_empty());
    }

    #[test]
    fn symmetric_flag_is_honest() {
        for p in [tfim(), three_fragments()] {
            for name in FormulaName::ALL {
                if name == FormulaName::Ruth3 && p.len() != 2 {
                    continue;
                }
                let f = builtin_formula(name, &p).unwrap();
                let fwd = invert_circuit(&compile_circuit(&f, &p, 0.37, 1).unwrap());
                let back = compile_circuit(&f, &p, -0.37, 1).unwrap();
                assert_eq!(fwd.equivalent_to(&back, 1e-15), f.is_symmetric(), "{name}");
            }
        }
    }

    #[test]
    fn identity_terms_become_global_phase() {
        let h = OperatorSum::from_real_terms(1, &[("I", 2.0), ("Z", 1.0)]).unwrap();
        let x = OperatorSum::from_real_terms(1, &[("X", 1.0)]).unwrap();
        let p =
            PartitionedHamiltonian::new(vec![Fragment::new(h).unwrap(), Fragment::new(x).unwrap()])
                .unwrap();
        let c =
            compile_circuit(&builtin_formula(FormulaName::Lie1, &p).unwrap(), &p, 0.5, 2).unwrap();
        assert_eq!(c.len(), 4);
        assert!((c.global_phase() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empirical_orders_on_tfim() {
        let p = tfim();
        for name in FormulaName::ALL {
            let f = builtin_formula(name, &p).unwrap();
            let probe = geometric_grid(6, 0.01, 0.1);
            let slope = empirical_order(&f, &p, &probe).unwrap();
            assert!((slope - name.alpha() as f64).abs() < 0.3, "{name}: {slope}");
        }
    }

    #[test]
    fn empirical_order_needs_points() {
        let p = tfim();
        let f = builtin_formula(FormulaName::Lie1, &p).unwrap();
        assert!(empirical_order(&f, &p, &[0.01, 0.02, 0.03]).is_err());
        assert!(matches!(
            empirical_order(&f, &p, &[1e-9, 2e-9, 3e-9, 4e-9]),
            Err(Error::DegenerateInput(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn compiled_round_trip(t in -2.0f64..2.0, n in 1usize..4, seed in 0u64..500) {
            let p = tfim();
            let f = builtin_formula(FormulaName::Ruth3, &p).unwrap();
            let c = compile_circuit(&f, &p, t, n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let psi = StateVector::random(4, &mut rng);
            let back = apply_circuit(&apply_circuit(&psi, &c).unwrap(), &invert_circuit(&c)).unwrap();
            prop_assert!(back.distance(&psi) < 1e-10);
        }
    }
}
