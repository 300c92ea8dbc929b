use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::formula::{compile_circuit, PartitionedHamiltonian, ProductFormula};
use crate::linalg::{condition_number, solve_least_squares};
use crate::pauli::{to_dense, DenseOperator, OperatorSum, C64, DEFAULT_DENSE_CAP};
use crate::simulator::{ExactPropagator, StateVector};

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionOptions {
    /// Half-width of the time window, in units of `1 / ||H||_1`.
    pub window_scale: f64,
    /// Number of powers fitted above `alpha`.
    pub degree: u32,
    /// Smallest degree tried when the fit is ill-conditioned.
    pub min_degree: u32,
    pub max_condition: f64,
}

impl Default for ExtractionOptions {
    fn default() -> Self {
        ExtractionOptions {
            window_scale: 1.0,
            degree: 18,
            min_degree: 12,
            max_condition: 1e8,
        }
    }
}

/// Coefficients `E_s` of `V(t) - U(t) = sum_s E_s t^s`.
#[derive(Debug, Clone)]
pub struct ErrorSeries {
    start_order: u32,
    operators: Vec<DenseOperator>,
    condition_number: f64,
    window: f64,
}

impl ErrorSeries {
    pub fn start_order(&self) -> u32 {
        self.start_order
    }

    pub fn max_order(&self) -> u32 {
        self.start_order + self.operators.len() as u32 - 1
    }

    pub fn operators(&self) -> &[DenseOperator] {
        &self.operators
    }

    pub fn get(&self, order: u32) -> Result<&DenseOperator> {
        order
            .checked_sub(self.start_order)
            .and_then(|k| self.operators.get(k as usize))
            .ok_or(Error::MissingOrder(order))
    }

    pub fn condition_number(&self) -> f64 {
        self.condition_number
    }

    /// Half-width of the time window the series was fitted on.
    pub fn window(&self) -> f64 {
        self.window
    }

    /// `||E_alpha† + E_alpha||`, zero for a unitary product.
    pub fn unitarity_defect(&self) -> f64 {
        let e = &self.operators[0];
        (&e.adjoint() + e).spectral_norm()
    }

    /// `sum_s E_s t^s`.
    pub fn evaluate(&self, t: f64) -> DenseOperator {
        let n = self.operators[0].num_qubits();
        let dim = self.operators[0].dim();
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        for (k, e) in self.operators.iter().enumerate() {
            m += e.matrix() * C64::new(t.powi((self.start_order as usize + k) as i32), 0.0);
        }
        DenseOperator::from_matrix(n, m).expect("series dimension is consistent")
    }
}

pub fn extract_error_operators(
    f: &ProductFormula,
    partition: &PartitionedHamiltonian,
    max_order: u32,
) -> Result<ErrorSeries> {
    extract_error_operators_with(f, partition, max_order, &ExtractionOptions::default())
}

/// Fits the entries of `V(t) - U(t)` on Chebyshev nodes in `[-T, T]`. Even
/// and odd parts are fitted separately so each system only carries half the
/// powers.
pub fn extract_error_operators_with(
    f: &ProductFormula,
    partition: &PartitionedHamiltonian,
    max_order: u32,
    opts: &ExtractionOptions,
) -> Result<ErrorSeries> {
    let alpha = f.alpha();
    if max_order < alpha || max_order > 2 * alpha {
        return Err(Error::Extraction(format!(
            "max_order {max_order} must lie in [{alpha}, {}]",
            2 * alpha
        )));
    }
    let n = partition.num_qubits();
    if n > DEFAULT_DENSE_CAP {
        return Err(Error::ResourceCap {
            what: "error-operator extraction",
            qubits: n,
            cap: DEFAULT_DENSE_CAP,
        });
    }
    let h = partition.hamiltonian();
    let norm = h.one_norm();
    if norm == 0.0 {
        return Err(Error::Extraction("the Hamiltonian is zero".into()));
    }
    let window = opts.window_scale / norm;
    let exact = ExactPropagator::new(&h)?;
    let dim = 1usize << n;

    let mut degree = opts.degree.max(max_order - alpha);
    loop {
        let top = alpha + degree;
        let nodes = (degree + 1) as usize;
        let m = 2 * nodes;
        let u: Vec<f64> = (0..nodes)
            .map(|k| ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * m) as f64).cos())
            .collect();
        let even: Vec<u32> = (alpha..=top).filter(|p| p % 2 == 0).collect();
        let odd: Vec<u32> = (alpha..=top).filter(|p| p % 2 == 1).collect();
        let design = |powers: &[u32]| {
            DMatrix::from_fn(nodes, powers.len(), |i, j| u[i].powi(powers[j] as i32))
        };
        let (de, dodd) = (design(&even), design(&odd));
        let cond = condition_number(&de).max(condition_number(&dodd));
        if cond > opts.max_condition {
            if degree > opts.min_degree.max(max_order - alpha) {
                degree -= 2;
                continue;
            }
            return Err(Error::Extraction(format!(
                "fit condition number {cond:.2e} exceeds {:.1e}; use a smaller time window",
                opts.max_condition
            )));
        }

        let deviation = |t: f64| -> Result<DMatrix<C64>> {
            let v = compile_circuit(f, partition, t, 1)?.to_dense(DEFAULT_DENSE_CAP)?;
            Ok(v.matrix() - exact.unitary(t).matrix())
        };
        // columns hold real then imaginary parts of every entry
        let mut rhs_even = DMatrix::<f64>::zeros(nodes, 2 * dim * dim);
        let mut rhs_odd = DMatrix::<f64>::zeros(nodes, 2 * dim * dim);
        for (i, &x) in u.iter().enumerate() {
            let plus = deviation(window * x)?;
            let minus = deviation(-window * x)?;
            for (k, (p, q)) in plus.iter().zip(minus.iter()).enumerate() {
                let e = (p + q) * 0.5;
                let o = (p - q) * 0.5;
                rhs_even[(i, k)] = e.re;
                rhs_even[(i, dim * dim + k)] = e.im;
                rhs_odd[(i, k)] = o.re;
                rhs_odd[(i, dim * dim + k)] = o.im;
            }
        }
        let se = solve_least_squares(&de, &rhs_even, opts.max_condition)
            .map_err(|e| Error::Extraction(e.to_string()))?;
        let so = solve_least_squares(&dodd, &rhs_odd, opts.max_condition)
            .map_err(|e| Error::Extraction(e.to_string()))?;

        let mut operators = Vec::with_capacity((max_order - alpha + 1) as usize);
        for s in alpha..=max_order {
            let (sol, powers) = if s % 2 == 0 {
                (&se, &even)
            } else {
                (&so, &odd)
            };
            let row = powers
                .iter()
                .position(|&p| p == s)
                .expect("order is in the fitted range");
            let scale = window.powi(s as i32);
            let mut mat = DMatrix::<C64>::zeros(dim, dim);
            for (k, z) in mat.iter_mut().enumerate() {
                *z = C64::new(
                    sol.coefficients[(row, k)],
                    sol.coefficients[(row, dim * dim + k)],
                ) / scale;
            }
            operators.push(DenseOperator::from_matrix(n, mat)?);
        }
        return Ok(ErrorSeries {
            start_order: alpha,
            operators,
            condition_number: cond,
            window,
        });
    }
}

/// `<psi| (E_alpha† + (-1)^alpha E_alpha) O + h.c. |psi>`.
pub fn matrix_element_m(
    series: &ErrorSeries,
    obs: &OperatorSum,
    psi: &StateVector,
    alpha: u32,
) -> Result<f64> {
    let e = series.get(alpha)?;
    if e.num_qubits() != obs.num_qubits() || e.num_qubits() != psi.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: e.num_qubits(),
            found: obs.num_qubits(),
        });
    }
    if !obs.is_hermitian() {
        return Err(Error::NotHermitian(format!("observable {obs}")));
    }
    let sign = if alpha.is_multiple_of(2) { 1.0 } else { -1.0 };
    let k = e.adjoint().matrix() + e.matrix() * C64::new(sign, 0.0);
    let a = k * to_dense(obs)?.matrix();
    let total = &a + a.adjoint();
    let v = DVector::from_column_slice(psi.amplitudes());
    let value = (v.adjoint() * total * &v)[(0, 0)];
    Ok(value.re)
}
