//! Weighted Pauli strings and sums of them.
//!
//! Qubit 1 is the leftmost letter of a word and the most significant bit of
//! a statevector index, so `"ZI"` acts on the high bit of a two-qubit index.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Terms whose coefficient magnitude falls below this are dropped.
pub const DROP_TOLERANCE: f64 = 1e-15;
/// Imaginary parts below this count as zero for hermiticity checks.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
/// Default largest qubit count realized as a dense matrix.
pub const DEFAULT_DENSE_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// Single-site product `self · other` as (phase, letter).
    pub fn times(self, other: Pauli) -> (C64, Pauli) {
        use Pauli::*;
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match (self, other) {
            (I, p) | (p, I) => (one, p),
            (a, b) if a == b => (one, I),
            (X, Y) => (i, Z),
            (Y, Z) => (i, X),
            (Z, X) => (i, Y),
            (Y, X) => (-i, Z),
            (Z, Y) => (-i, X),
            (X, Z) => (-i, Y),
            _ => unreachable!(),
        }
    }

    fn anticommutes(self, other: Pauli) -> bool {
        self != Pauli::I && other != Pauli::I && self != other
    }
}

/// A tensor product of single-qubit Pauli letters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliWord(Vec<Pauli>);

/// Bit masks describing how a word acts on computational basis states:
/// `P|j> = i^y_count * (-1)^popcount(j & z) |j ^ x>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PauliMasks {
    pub x: u64,
    pub z: u64,
    pub y_count: u32,
}

impl PauliMasks {
    /// Phase picked up by basis state `j`.
    #[inline]
    pub fn phase(&self, j: usize) -> C64 {
        let sign = if (j as u64 & self.z).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        let base = match self.y_count % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
        base * sign
    }
}

impl PauliWord {
    pub fn new(letters: Vec<Pauli>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::invalid("a Pauli word needs at least one qubit"));
        }
        if letters.len() > 64 {
            return Err(Error::invalid("Pauli words are limited to 64 qubits"));
        }
        Ok(PauliWord(letters))
    }

    pub fn identity(n: usize) -> Self {
        PauliWord(vec![Pauli::I; n])
    }

    /// Word with `letter` on each listed zero-based site and identity elsewhere.
    pub fn with_sites(n: usize, sites: &[(usize, Pauli)]) -> Result<Self> {
        let mut letters = vec![Pauli::I; n];
        for &(site, letter) in sites {
            if site >= n {
                return Err(Error::invalid(format!("site {site} outside {n} qubits")));
            }
            letters[site] = letter;
        }
        PauliWord::new(letters)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    pub fn commutes_with(&self, other: &PauliWord) -> bool {
        self.0
            .iter()
            .zip(&other.0)
            .filter(|(a, b)| a.anticommutes(**b))
            .count()
            % 2
            == 0
    }

    pub fn masks(&self) -> PauliMasks {
        let n = self.0.len();
        let mut m = PauliMasks {
            x: 0,
            z: 0,
            y_count: 0,
        };
        for (k, &p) in self.0.iter().enumerate() {
            let bit = 1u64 << (n - 1 - k);
            match p {
                Pauli::I => {}
                Pauli::X => m.x |= bit,
                Pauli::Z => m.z |= bit,
                Pauli::Y => {
                    m.x |= bit;
                    m.z |= bit;
                    m.y_count += 1;
                }
            }
        }
        m
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .trim()
            .chars()
            .map(|c| {
                Pauli::from_char(c)
                    .ok_or_else(|| Error::invalid(format!("invalid Pauli letter `{c}` in `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        PauliWord::new(letters)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub word: PauliWord,
    pub coeff: C64,
}

impl PauliTerm {
    pub fn new(word: PauliWord, coeff: C64) -> Self {
        PauliTerm { word, coeff }
    }

    pub fn real(word: PauliWord, coeff: f64) -> Self {
        PauliTerm {
            word,
            coeff: C64::new(coeff, 0.0),
        }
    }

    /// Parses a word such as `"ZZII"` with a real coefficient.
    pub fn parse(word: &str, coeff: f64) -> Result<Self> {
        Ok(PauliTerm::real(word.parse()?, coeff))
    }

    pub fn num_qubits(&self) -> usize {
        self.word.len()
    }
}

/// Product `p · q` including the accumulated phase.
pub fn pauli_product(p: &PauliTerm, q: &PauliTerm) -> Result<PauliTerm> {
    if p.num_qubits() != q.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: p.num_qubits(),
            found: q.num_qubits(),
        });
    }
    let mut phase = p.coeff * q.coeff;
    let letters = p
        .word
        .letters()
        .iter()
        .zip(q.word.letters())
        .map(|(&a, &b)| {
            let (ph, r) = a.times(b);
            phase *= ph;
            r
        })
        .collect();
    Ok(PauliTerm {
        word: PauliWord(letters),
        coeff: phase,
    })
}

/// True iff every pair of terms commutes.
pub fn mutually_commuting(terms: &[PauliTerm]) -> bool {
    terms
        .iter()
        .enumerate()
        .all(|(i, a)| terms[i + 1..].iter().all(|b| a.word.commutes_with(&b.word)))
}

/// A linear combination of Pauli words over a common qubit count.
///
/// Duplicate words are merged on construction and terms below
/// [`DROP_TOLERANCE`] are dropped. Term order follows first insertion, which
/// is the order fragments are compiled in; equality ignores order.
#[derive(Debug, Clone)]
pub struct OperatorSum {
    n: usize,
    terms: Vec<PauliTerm>,
}

impl OperatorSum {
    pub fn zero(n: usize) -> Self {
        OperatorSum { n, terms: vec![] }
    }

    pub fn new(n: usize, terms: impl IntoIterator<Item = PauliTerm>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("operators need at least one qubit"));
        }
        let mut merged: IndexMap<PauliWord, C64> = IndexMap::new();
        for term in terms {
            if term.num_qubits() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: term.num_qubits(),
                });
            }
            *merged.entry(term.word).or_insert(C64::new(0.0, 0.0)) += term.coeff;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| c.norm() >= DROP_TOLERANCE)
            .map(|(word, coeff)| PauliTerm { word, coeff })
            .collect();
        Ok(OperatorSum { n, terms })
    }

    /// Convenience constructor from `(word, real coefficient)` pairs.
    pub fn from_real_terms(n: usize, terms: &[(&str, f64)]) -> Result<Self> {
        let parsed = terms
            .iter()
            .map(|(w, c)| PauliTerm::parse(w, *c))
            .collect::<Result<Vec<_>>>()?;
        OperatorSum::new(n, parsed)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_hermitian(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.coeff.im.abs() <= HERMITIAN_TOLERANCE)
    }

    /// Sum of coefficient magnitudes, an upper bound on the operator norm.
    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).sum()
    }

    pub fn add(&self, other: &OperatorSum) -> Result<OperatorSum> {
        self.check_same(other)?;
        OperatorSum::new(self.n, self.terms.iter().chain(&other.terms).cloned())
    }

    pub fn scale(&self, factor: C64) -> OperatorSum {
        OperatorSum::new(
            self.n,
            self.terms
                .iter()
                .map(|t| PauliTerm::new(t.word.clone(), t.coeff * factor)),
        )
        .expect("scaling preserves qubit count")
    }

    pub fn mul(&self, other: &OperatorSum) -> Result<OperatorSum> {
        self.check_same(other)?;
        let mut out = Vec::with_capacity(self.len() * other.len());
        for p in &self.terms {
            for q in &other.terms {
                out.push(pauli_product(p, q)?);
            }
        }
        Ok(OperatorSum::new(self.n, out)?.canonical())
    }

    /// Terms sorted by word.
    pub fn canonical(mut self) -> OperatorSum {
        self.terms.sort_by(|a, b| a.word.cmp(&b.word));
        self
    }

    pub fn approx_eq(&self, other: &OperatorSum, tol: f64) -> bool {
        if self.n != other.n {
            return false;
        }
        let diff = match self.add(&other.scale(C64::new(-1.0, 0.0))) {
            Ok(d) => d,
            Err(_) => return false,
        };
        diff.terms.iter().all(|t| t.coeff.norm() <= tol)
    }

    fn check_same(&self, other: &OperatorSum) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }
}

impl PartialEq for OperatorSum {
    fn eq(&self, other: &Self) -> bool {
        if self.n != other.n || self.terms.len() != other.terms.len() {
            return false;
        }
        let a = self.clone().canonical();
        let b = other.clone().canonical();
        a.terms == b.terms
    }
}

impl fmt::Display for OperatorSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if t.coeff.im == 0.0 {
                write!(f, "{}*{}", t.coeff.re, t.word)?;
            } else {
                write!(f, "({}{:+}i)*{}", t.coeff.re, t.coeff.im, t.word)?;
            }
        }
        Ok(())
    }
}

/// `[a, b] = ab - ba`. Commuting word pairs contribute nothing; anticommuting
/// pairs contribute `2pq`.
pub fn commutator(a: &OperatorSum, b: &OperatorSum) -> Result<OperatorSum> {
    a.check_same(b)?;
    let mut out = Vec::new();
    for p in &a.terms {
        for q in &b.terms {
            if !p.word.commutes_with(&q.word) {
                let mut r = pauli_product(p, q)?;
                r.coeff *= 2.0;
                out.push(r);
            }
        }
    }
    Ok(OperatorSum::new(a.n, out)?.canonical())
}

/// A dense `2^n x 2^n` complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    n: usize,
    matrix: DMatrix<C64>,
}

impl DenseOperator {
    pub fn from_matrix(n: usize, matrix: DMatrix<C64>) -> Result<Self> {
        let dim = 1usize << n;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::invalid(format!(
                "a {n}-qubit operator needs a {dim}x{dim} matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(DenseOperator { n, matrix })
    }

    pub fn identity(n: usize) -> Self {
        let dim = 1usize << n;
        DenseOperator {
            n,
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn adjoint(&self) -> DenseOperator {
        DenseOperator {
            n: self.n,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        self.matrix
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .all(|z| z.norm() <= tol)
    }
}

impl std::ops::Sub for &DenseOperator {
    type Output = DenseOperator;
    fn sub(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator {
            n: self.n,
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl std::ops::Add for &DenseOperator {
    type Output = DenseOperator;
    fn add(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator {
            n: self.n,
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl std::ops::Mul for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator {
            n: self.n,
            matrix: &self.matrix * &rhs.matrix,
        }
    }
}

/// Kronecker-product realization of `op`, refusing more than `cap` qubits.
pub fn to_dense_capped(op: &OperatorSum, cap: usize) -> Result<DenseOperator> {
    let n = op.num_qubits();
    if n > cap {
        return Err(Error::ResourceCap {
            what: "dense realization",
            qubits: n,
            cap,
        });
    }
    let dim = 1usize << n;
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for term in op.terms() {
        let masks = term.word.masks();
        for j in 0..dim {
            let row = j ^ masks.x as usize;
            m[(row, j)] += term.coeff * masks.phase(j);
        }
    }
    Ok(DenseOperator { n, matrix: m })
}

pub fn to_dense(op: &OperatorSum) -> Result<DenseOperator> {
    to_dense_capped(op, DEFAULT_DENSE_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn single(p: Pauli) -> DMatrix<C64> {
        let z = c(0.0, 0.0);
        let o = c(1.0, 0.0);
        let i = c(0.0, 1.0);
        match p {
            Pauli::I => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
            Pauli::X => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            Pauli::Y => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            Pauli::Z => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        }
    }

    // Independent Kronecker-product oracle.
    fn kron_oracle(word: &PauliWord) -> DMatrix<C64> {
        word.letters()
            .iter()
            .fold(DMatrix::from_element(1, 1, c(1.0, 0.0)), |acc, &p| {
                acc.kronecker(&single(p))
            })
    }

    fn term(w: &str, coeff: C64) -> PauliTerm {
        PauliTerm::new(w.parse().unwrap(), coeff)
    }

    #[test]
    fn product_examples() {
        let r = pauli_product(&term("Z", c(1.0, 0.0)), &term("X", c(1.0, 0.0))).unwrap();
        assert_eq!(r.word.to_string(), "Y");
        assert_eq!(r.coeff, c(0.0, 1.0));

        let q = term("XYZ", c(0.5, -2.0));
        let r = pauli_product(&term("III", c(1.0, 0.0)), &q).unwrap();
        assert_eq!(r, q);

        let r = pauli_product(&term("XX", c(1.0, 0.0)), &term("YY", c(1.0, 0.0))).unwrap();
        assert_eq!(r.word.to_string(), "ZZ");
        assert_eq!(r.coeff, c(-1.0, 0.0));
        let dense = kron_oracle(&"XX".parse().unwrap()) * kron_oracle(&"YY".parse().unwrap());
        assert!((dense - kron_oracle(&"ZZ".parse().unwrap()) * c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn product_length_mismatch() {
        let err = pauli_product(&term("Z", c(1.0, 0.0)), &term("ZZ", c(1.0, 0.0))).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn all_single_qubit_products_match_dense() {
        let letters = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
        for &a in &letters {
            for &b in &letters {
                let (phase, r) = a.times(b);
                let lhs = single(a) * single(b);
                let rhs = single(r) * phase;
                assert!((lhs - rhs).norm() < 1e-15, "{a:?}*{b:?}");
            }
        }
    }

    #[test]
    fn commutator_examples() {
        let z = OperatorSum::from_real_terms(1, &[("Z", 1.0)]).unwrap();
        let x = OperatorSum::from_real_terms(1, &[("X", 1.0)]).unwrap();
        let zx = commutator(&z, &x).unwrap();
        assert_eq!(zx.len(), 1);
        assert_eq!(zx.terms()[0].word.to_string(), "Y");
        assert_eq!(zx.terms()[0].coeff, c(0.0, 2.0));

        let zz = OperatorSum::from_real_terms(2, &[("ZZ", 1.0)]).unwrap();
        let ii = OperatorSum::from_real_terms(2, &[("II", 1.0)]).unwrap();
        assert!(commutator(&zz, &ii).unwrap().is_empty());
    }

    #[test]
    fn tfim_layer_commutator_matches_dense() {
        let zz = OperatorSum::from_real_terms(4, &[("ZZII", 1.0), ("IIZZ", 1.0), ("IZZI", 1.0)])
            .unwrap();
        let xs = OperatorSum::from_real_terms(
            4,
            &[
                ("XIII", 1.0 / 3.0),
                ("IXII", 1.0 / 3.0),
                ("IIXI", 1.0 / 3.0),
                ("IIIX", 1.0 / 3.0),
            ],
        )
        .unwrap();
        let comm = to_dense(&commutator(&zz, &xs).unwrap()).unwrap();
        let a = to_dense(&zz).unwrap();
        let b = to_dense(&xs).unwrap();
        let oracle = &(&a * &b) - &(&b * &a);
        assert!((comm.matrix() - oracle.matrix())
            .iter()
            .all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn dense_examples() {
        let z = to_dense(&OperatorSum::from_real_terms(1, &[("Z", 1.0)]).unwrap()).unwrap();
        assert_eq!(z.matrix(), &single(Pauli::Z));
        let x = to_dense(&OperatorSum::from_real_terms(1, &[("X", 1.0)]).unwrap()).unwrap();
        assert_eq!(x.matrix(), &single(Pauli::X));
        let zz = to_dense(&OperatorSum::from_real_terms(2, &[("ZZ", 1.0)]).unwrap()).unwrap();
        let diag: Vec<f64> = (0..4).map(|k| zz.matrix()[(k, k)].re).collect();
        assert_eq!(diag, vec![1.0, -1.0, -1.0, 1.0]);
        // qubit 1 is the most significant bit
        let xi = to_dense(&OperatorSum::from_real_terms(2, &[("XI", 1.0)]).unwrap()).unwrap();
        assert_eq!(xi.matrix()[(2, 0)], c(1.0, 0.0));
    }

    #[test]
    fn dense_cap_enforced() {
        let op = OperatorSum::from_real_terms(3, &[("ZZZ", 1.0)]).unwrap();
        assert!(matches!(
            to_dense_capped(&op, 2),
            Err(Error::ResourceCap {
                qubits: 3,
                cap: 2,
                ..
            })
        ));
    }

    #[test]
    fn commuting_sets() {
        let ts = |ws: &[&str]| ws.iter().map(|w| term(w, c(1.0, 0.0))).collect::<Vec<_>>();
        assert!(mutually_commuting(&ts(&["ZZII", "IZZI", "IIZZ"])));
        assert!(mutually_commuting(&ts(&["XXII", "YYII", "ZZII"])));
        assert!(!mutually_commuting(&ts(&["ZI", "XI"])));
    }

    #[test]
    fn canonicalization_merges_and_drops() {
        let op =
            OperatorSum::from_real_terms(2, &[("ZZ", 1.0), ("XI", 0.5), ("ZZ", -1.0)]).unwrap();
        assert_eq!(op.len(), 1);
        assert_eq!(op.terms()[0].word.to_string(), "XI");
        assert!(OperatorSum::from_real_terms(2, &[("ZQ", 1.0)]).is_err());
    }

    fn arb_sum(n: usize) -> impl Strategy<Value = OperatorSum> {
        let letter = prop_oneof![Just('I'), Just('X'), Just('Y'), Just('Z')];
        let word =
            proptest::collection::vec(letter, n).prop_map(|v| v.into_iter().collect::<String>());
        let coeff = (-1.0f64..1.0, -1.0f64..1.0);
        proptest::collection::vec((word, coeff), 1..6).prop_map(move |ts| {
            OperatorSum::new(
                n,
                ts.into_iter()
                    .map(|(w, (re, im))| PauliTerm::new(w.parse().unwrap(), C64::new(re, im))),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn commutator_is_antisymmetric(a in arb_sum(3), b in arb_sum(3)) {
            let ab = commutator(&a, &b).unwrap();
            let ba = commutator(&b, &a).unwrap();
            prop_assert!(ab.approx_eq(&ba.scale(C64::new(-1.0, 0.0)), 1e-14));
        }

        #[test]
        fn commutator_matches_dense(a in arb_sum(3), b in arb_sum(3)) {
            let da = to_dense(&a).unwrap();
            let db = to_dense(&b).unwrap();
            let oracle = &(&da * &db) - &(&db * &da);
            let got = to_dense(&commutator(&a, &b).unwrap()).unwrap();
            prop_assert!((got.matrix() - oracle.matrix()).iter().all(|z| z.norm() < 1e-12));
        }

        #[test]
        fn product_is_associative_and_dense(a in arb_sum(2), b in arb_sum(2), c in arb_sum(2)) {
            let left = a.mul(&b).unwrap().mul(&c).unwrap();
            let right = a.mul(&b.mul(&c).unwrap()).unwrap();
            prop_assert!(left.approx_eq(&right, 1e-12));
            let dense = &(&to_dense(&a).unwrap() * &to_dense(&b).unwrap()) * &to_dense(&c).unwrap();
            prop_assert!((to_dense(&left).unwrap().matrix() - dense.matrix()).iter().all(|z| z.norm() < 1e-12));
        }

        #[test]
        fn commuting_check_matches_dense(ws in proptest::collection::vec(arb_sum(2), 2..4)) {
            let terms: Vec<PauliTerm> = ws.iter().map(|s| s.terms()[0].clone()).collect();
            let dense_ok = terms.iter().enumerate().all(|(i, p)| terms[i+1..].iter().all(|q| {
                let a = kron_oracle(&p.word);
                let b = kron_oracle(&q.word);
                (&a * &b - &b * &a).norm() < 1e-12
            }));
            prop_assert_eq!(mutually_commuting(&terms), dense_ok);
        }
    }
}
