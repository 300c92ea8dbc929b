//! Error profiling: composite circuits swept over the auxiliary parameter
//! `a`, a least-squares fit of the averaged profile, and the operator-level
//! extraction used to cross-check it.

mod calibrate;
mod composite;
mod extract;
mod fit;

pub use calibrate::{calibrate_basis, CalibrationOptions, CalibrationReport};
pub use composite::{
    all_variant_expectations, averaged_expectation, averaged_expectation_with,
    check_symmetric_reduction, composite_circuit, variant_expectation, CompositeSpec, Dynamics,
    ExactDynamics, TrotterDynamics, Variant,
};
pub use extract::{
    extract_error_operators, extract_error_operators_with, matrix_element_m, ErrorSeries,
    ExtractionOptions,
};
pub use fit::{fit_profile, BasisSpec, FitResult, ProfileSample, MAX_FIT_CONDITION};

use rayon::prelude::*;

use crate::error::Result;
use crate::pauli::OperatorSum;
use crate::simulator::{NoiseModel, StateVector};

/// One averaged sample per grid value, in grid order.
pub fn profile_sweep<D: Dynamics + ?Sized>(
    dynamics: &D,
    a_grid: &[f64],
    t: f64,
    obs: &OperatorSum,
    psi: &StateVector,
    noise: &NoiseModel,
) -> Result<Vec<ProfileSample>> {
    fit::check_distinct(a_grid)?;
    a_grid
        .par_iter()
        .map(|&a| {
            let value = averaged_expectation_with(dynamics, a, t, obs, psi)?;
            Ok(ProfileSample {
                a,
                value: noise.perturb(value, &[1, t.to_bits(), a.to_bits()]),
            })
        })
        .collect()
}

/// Sweeps `a` and fits; the intercept of the fit is the mitigated value.
/// Without an explicit grid the basis default grid is used.
#[allow(clippy::too_many_arguments)]
pub fn mitigated_estimate_with<D: Dynamics + ?Sized>(
    dynamics: &D,
    t: f64,
    obs: &OperatorSum,
    psi: &StateVector,
    basis: &BasisSpec,
    alpha: u32,
    a_grid: Option<&[f64]>,
    noise: &NoiseModel,
) -> Result<(f64, FitResult)> {
    let default;
    let grid = match a_grid {
        Some(g) => g,
        None => {
            default = basis.default_grid();
            &default
        }
    };
    let samples = profile_sweep(dynamics, grid, t, obs, psi, noise)?;
    let fit = fit_profile(&samples, basis, alpha)?;
    Ok((fit.y_star, fit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::formula::{builtin_formula, FormulaName, Fragment, PartitionedHamiltonian};
    use crate::pauli::{commutator, to_dense, C64};
    use crate::simulator::{
        apply_circuit, exact_evolve, expectation, init_product_state, ExactPropagator,
    };
    use nalgebra::DMatrix;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn tfim() -> (PartitionedHamiltonian, OperatorSum, StateVector) {
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
        let p = PartitionedHamiltonian::new(vec![
            Fragment::new(zz).unwrap(),
            Fragment::new(x).unwrap(),
        ])
        .unwrap();
        let obs = OperatorSum::from_real_terms(
            4,
            &[
                ("XIII", 0.25),
                ("IXII", 0.25),
                ("IIXI", 0.25),
                ("IIIX", 0.25),
                ("ZZII", 1.0 / 3.0),
                ("IZZI", 1.0 / 3.0),
                ("IIZZ", 1.0 / 3.0),
            ],
        )
        .unwrap();
        let psi = init_product_state(&[
            [c(1.0, 0.0), c(0.0, 0.0)],
            [c(1.0, 0.0), c(0.0, 1.0)],
            [c(1.0, 0.0), c(1.0, 0.0)],
            [c(0.0, 0.0), c(1.0, 0.0)],
        ])
        .unwrap();
        (p, obs, psi)
    }

    fn zx() -> PartitionedHamiltonian {
        let z = OperatorSum::from_real_terms(1, &[("Z", 1.0)]).unwrap();
        let x = OperatorSum::from_real_terms(1, &[("X", 1.0)]).unwrap();
        PartitionedHamiltonian::new(vec![Fragment::new(z).unwrap(), Fragment::new(x).unwrap()])
            .unwrap()
    }

    fn trotter(name: FormulaName) -> (TrotterDynamics, OperatorSum, StateVector) {
        let (p, obs, psi) = tfim();
        let f = builtin_formula(name, &p).unwrap();
        (TrotterDynamics::new(f, p, 1).unwrap(), obs, psi)
    }

    fn exact_value(d: &TrotterDynamics, obs: &OperatorSum, psi: &StateVector, t: f64) -> f64 {
        expectation(
            &exact_evolve(&d.partition.hamiltonian(), t, psi).unwrap(),
            obs,
        )
        .unwrap()
    }

    fn max_entry(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn variant_numbers() {
        assert_eq!(Variant::try_from(3).unwrap(), Variant::ForwardInverted);
        assert!(matches!(
            Variant::try_from(5),
            Err(Error::InvalidVariant(5))
        ));
    }

    #[test]
    fn composite_matches_dynamics_path() {
        let (d, obs, psi) = trotter(FormulaName::Ruth3);
        for v in Variant::ALL {
            let spec = CompositeSpec {
                variant: v,
                a: 0.3,
                t: 0.6,
                trotter_steps: 1,
            };
            let circ = composite_circuit(&spec, &d.formula, &d.partition).unwrap();
            let via_circuit = expectation(&apply_circuit(&psi, &circ).unwrap(), &obs).unwrap();
            let via_dyn = variant_expectation(&d, v, 0.3, 0.6, &obs, &psi).unwrap();
            assert!((via_circuit - via_dyn).abs() < 1e-13);
        }
    }

    #[test]
    fn composite_edge_cases() {
        let (d, obs, psi) = trotter(FormulaName::Ruth3);
        let t = 0.45;
        let plain = expectation(
            &apply_circuit(
                &psi,
                &crate::formula::compile_circuit(&d.formula, &d.partition, t, 1).unwrap(),
            )
            .unwrap(),
            &obs,
        )
        .unwrap();
        let v1 = variant_expectation(&d, Variant::ForwardForward, 1.0, t, &obs, &psi).unwrap();
        assert!((v1 - plain).abs() < 1e-13);

        let v4 = variant_expectation(&d, Variant::InvertedInverted, 0.0, t, &obs, &psi).unwrap();
        let inv = crate::formula::invert_circuit(
            &crate::formula::compile_circuit(&d.formula, &d.partition, -t, 1).unwrap(),
        );
        let direct = expectation(&apply_circuit(&psi, &inv).unwrap(), &obs).unwrap();
        assert!((v4 - direct).abs() < 1e-13);
        let spec = CompositeSpec {
            variant: Variant::InvertedInverted,
            a: 0.0,
            t,
            trotter_steps: 2,
        };
        assert_eq!(
            composite_circuit(&spec, &d.formula, &d.partition)
                .unwrap()
                .len(),
            4 * 6 * 7 / 2
        );
    }

    #[test]
    fn ideal_invariance() {
        let (d, obs, psi) = trotter(FormulaName::Ruth3);
        let exact = ExactDynamics::new(&d.partition.hamiltonian()).unwrap();
        let reference = exact_value(&d, &obs, &psi, 0.7);
        for a in [-0.5, 0.0, 0.25, 0.5, 1.0, 1.5] {
            for v in Variant::ALL {
                let val = variant_expectation(&exact, v, a, 0.7, &obs, &psi).unwrap();
                assert!((val - reference).abs() < 1e-10);
            }
        }
        let grid = [-0.5, 0.1, 0.5, 0.9, 1.5];
        let samples =
            profile_sweep(&exact, &grid, 0.7, &obs, &psi, &NoiseModel::noiseless()).unwrap();
        assert!(samples.iter().all(|s| (s.value - reference).abs() < 1e-10));
        let basis = BasisSpec::full_window(4, true);
        let (est, _) = mitigated_estimate_with(
            &exact,
            0.7,
            &obs,
            &psi,
            &basis,
            4,
            None,
            &NoiseModel::noiseless(),
        )
        .unwrap();
        assert!((est - reference).abs() < 1e-10);
    }

    #[test]
    fn symmetric_shortcut_agrees_with_all_variants() {
        let (d, obs, psi) = trotter(FormulaName::Suzuki4);
        for a in [-0.5, 0.3, 1.2] {
            let spread = check_symmetric_reduction(&d, a, 0.8, &obs, &psi, 1e-10).unwrap();
            assert!(spread < 1e-10);
        }
        let (d, obs, psi) = trotter(FormulaName::Ruth3);
        assert!(check_symmetric_reduction(&d, 0.3, 0.8, &obs, &psi, 1e-10).unwrap() > 1e-8);
        let one = averaged_expectation_with(&d, 1.0, 0.5, &obs, &psi).unwrap();
        let zero = averaged_expectation_with(&d, 0.0, 0.5, &obs, &psi).unwrap();
        assert!((one - zero).abs() < 1e-13);
    }

    #[test]
    fn averaged_error_shrinks_like_t_alpha() {
        let (d, obs, psi) = trotter(FormulaName::Ruth3);
        let err = |t: f64| {
            (averaged_expectation_with(&d, 0.5, t, &obs, &psi).unwrap()
                - exact_value(&d, &obs, &psi, t))
            .abs()
        };
        let (e1, e2) = (err(0.05), err(0.1));
        assert!(e1 > 0.0 && e1.is_finite());
        assert!((e2 / e1).log2() > 3.7, "{}", (e2 / e1).log2());
        assert!(
            averaged_expectation(0.5, 0.4, &d.formula, &d.partition, &obs, &psi, 1)
                .unwrap()
                .is_finite()
        );
    }

    #[test]
    fn sweep_order_and_duplicates() {
        let (d, obs, psi) = trotter(FormulaName::Ruth3);
        let grid = [1.5, -0.5, 0.2, 0.8, 0.5];
        let samples = profile_sweep(&d, &grid, 0.4, &obs, &psi, &NoiseModel::noiseless()).unwrap();
        assert_eq!(
            samples.iter().map(|s| s.a).collect::<Vec<_>>(),
            grid.to_vec()
        );
        let spread = samples
            .iter()
            .map(|s| s.value)
            .fold(f64::NEG_INFINITY, f64::max)
            - samples
                .iter()
                .map(|s| s.value)
                .fold(f64::INFINITY, f64::min);
        assert!(spread > 1e-12);
        // non-symmetric: at a = 1 the average mixes V(t) and V†(-t) equally
        let one = profile_sweep(&d, &[1.0], 0.4, &obs, &psi, &NoiseModel::noiseless()).unwrap();
        let fwd = variant_expectation(&d, Variant::ForwardForward, 1.0, 0.4, &obs, &psi).unwrap();
        let inv = variant_expectation(&d, Variant::InvertedForward, 1.0, 0.4, &obs, &psi).unwrap();
        assert!((one[0].value - 0.5 * (fwd + inv)).abs() < 1e-13);
        let (s, obs, psi) = trotter(FormulaName::Suzuki4);
        let one = profile_sweep(&s, &[1.0], 0.4, &obs, &psi, &NoiseModel::noiseless()).unwrap();
        let plain = variant_expectation(&s, Variant::ForwardForward, 1.0, 0.4, &obs, &psi).unwrap();
        assert_eq!(one[0].value, plain);
        assert!(matches!(
            profile_sweep(&d, &[0.1, 0.1], 0.4, &obs, &psi, &NoiseModel::noiseless()),
            Err(Error::DuplicateGrid(_))
        ));
    }

    #[test]
    fn mitigation_beats_plain_trotter_at_t_03() {
        let (d, obs, psi) = trotter(FormulaName::Ruth3);
        let t = 0.3;
        let exact = exact_value(&d, &obs, &psi, t);
        let plain = variant_expectation(&d, Variant::ForwardForward, 1.0, t, &obs, &psi).unwrap();
        let basis = BasisSpec::full_window(4, true);
        let (est, fit) =
            mitigated_estimate_with(&d, t, &obs, &psi, &basis, 4, None, &NoiseModel::noiseless())
                .unwrap();
        assert!((est - exact).abs() * 10.0 < (plain - exact).abs());
        assert!(fit.condition_number < MAX_FIT_CONDITION);
    }

    #[test]
    fn calibration_finds_surviving_orders() {
        let (d, obs, psi) = trotter(FormulaName::Ruth3);
        let exact = ExactPropagator::new(&d.partition.hamiltonian()).unwrap();
        let report =
            calibrate_basis(&d, &exact, &obs, &psi, 4, &CalibrationOptions::default()).unwrap();
        assert_eq!(report.basis.orders(), &[5, 6]);
        assert!(report.basis.include_antisymmetric());
        assert!(!report.flat);

        let (d, obs, psi) = trotter(FormulaName::Suzuki4);
        let report =
            calibrate_basis(&d, &exact, &obs, &psi, 5, &CalibrationOptions::default()).unwrap();
        assert!(report.basis.orders().iter().all(|s| (5..=8).contains(s)));
        assert!(report.basis.orders().contains(&5));

        let (d, obs, psi) = trotter(FormulaName::Lie1);
        let report =
            calibrate_basis(&d, &exact, &obs, &psi, 2, &CalibrationOptions::default()).unwrap();
        assert!(report.basis.orders().iter().all(|&s| s == 2));
    }

    #[test]
    fn calibration_rejects_collapsed_probe() {
        let (d, obs, psi) = trotter(FormulaName::Ruth3);
        let exact = ExactPropagator::new(&d.partition.hamiltonian()).unwrap();
        let opts = CalibrationOptions {
            t_probe: vec![
                0.05,
                0.05 + 1e-12,
                0.05 + 2e-12,
                0.05 + 3e-12,
                0.05 + 4e-12,
                0.05 + 5e-12,
                0.05 + 6e-12,
                0.05 + 7e-12,
                0.05 + 8e-12,
            ],
            ..CalibrationOptions::default()
        };
        assert!(matches!(
            calibrate_basis(&d, &exact, &obs, &psi, 4, &opts),
            Err(Error::Calibration(_))
        ));
    }

    #[test]
    fn lie_error_operators_match_brackets() {
        let p = zx();
        let f = builtin_formula(FormulaName::Lie1, &p).unwrap();
        let series = extract_error_operators(&f, &p, 3).unwrap();
        let h1 = to_dense(&p.fragments()[0].terms().clone()).unwrap();
        let h2 = to_dense(&p.fragments()[1].terms().clone()).unwrap();
        let (a, b) = (h1.matrix(), h2.matrix());
        let comm =
            to_dense(&commutator(p.fragments()[0].terms(), p.fragments()[1].terms()).unwrap())
                .unwrap();
        let e2 = comm.matrix() * c(-0.5, 0.0);
        assert!(max_entry(&(series.get(2).unwrap().matrix() - &e2)) < 1e-8);
        // (-i/3!)(H1[H2,H1] + [H2,H1^2] + [H2,H1]H2 + [H2^2,H1])
        let br = |x: &DMatrix<C64>, y: &DMatrix<C64>| x * y - y * x;
        let e3 =
            (a * br(b, a) + br(b, &(a * a)) + br(b, a) * b + br(&(b * b), a)) * c(0.0, -1.0 / 6.0);
        assert!(max_entry(&(series.get(3).unwrap().matrix() - &e3)) < 1e-8);
        assert!(matches!(series.get(4), Err(Error::MissingOrder(4))));
    }

    #[test]
    fn leading_error_is_anti_hermitian() {
        let (p, _, _) = tfim();
        for name in FormulaName::ALL {
            let f = builtin_formula(name, &p).unwrap();
            let series = extract_error_operators(&f, &p, f.alpha() + 1).unwrap();
            assert!(
                series.unitarity_defect() < 1e-8,
                "{name}: {}",
                series.unitarity_defect()
            );
        }
    }

    #[test]
    fn extraction_rebuilds_the_product() {
        let (p, _, _) = tfim();
        let f = builtin_formula(FormulaName::Ruth3, &p).unwrap();
        let series = extract_error_operators(&f, &p, 8).unwrap();
        let exact = ExactPropagator::new(&p.hamiltonian()).unwrap();
        let remainder = |t: f64| {
            let v = crate::formula::compile_circuit(&f, &p, t, 1)
                .unwrap()
                .to_dense(12)
                .unwrap();
            let rebuilt = &exact.unitary(t) + &series.evaluate(t);
            (&v - &rebuilt).spectral_norm()
        };
        let (r1, r2) = (remainder(0.08), remainder(0.16));
        assert!((r2 / r1).log2() > 8.0, "{}", (r2 / r1).log2());
        assert!(extract_error_operators(&f, &p, 9).is_err());
    }

    #[test]
    fn even_order_matrix_element_vanishes() {
        let (p, obs, psi) = tfim();
        let f = builtin_formula(FormulaName::Ruth3, &p).unwrap();
        let series = extract_error_operators(&f, &p, 4).unwrap();
        assert!(matrix_element_m(&series, &obs, &psi, 4).unwrap().abs() < 1e-8);
        assert!(matches!(
            matrix_element_m(&series, &obs, &psi, 5),
            Err(Error::MissingOrder(5))
        ));
    }

    #[test]
    fn lie_single_qubit_matrix_element() {
        let p = zx();
        let f = builtin_formula(FormulaName::Lie1, &p).unwrap();
        let series = extract_error_operators(&f, &p, 2).unwrap();
        let z = OperatorSum::from_real_terms(1, &[("Z", 1.0)]).unwrap();
        let zero = crate::simulator::StateVector::basis(1, 0).unwrap();
        // E2 = -iY is anti-Hermitian, so the even-order combination vanishes
        assert!(matrix_element_m(&series, &z, &zero, 2).unwrap().abs() < 1e-8);
    }

    #[test]
    fn noise_perturbs_deterministically() {
        let (d, obs, psi) = trotter(FormulaName::Ruth3);
        let noise = NoiseModel {
            sigma: 1e-6,
            seed: 11,
        };
        let grid = [0.0, 0.5, 1.0];
        let a = profile_sweep(&d, &grid, 0.3, &obs, &psi, &noise).unwrap();
        let b = profile_sweep(&d, &grid, 0.3, &obs, &psi, &noise).unwrap();
        assert_eq!(a, b);
        let clean = profile_sweep(&d, &grid, 0.3, &obs, &psi, &NoiseModel::noiseless()).unwrap();
        assert!(a
            .iter()
            .zip(&clean)
            .all(|(x, y)| x.value != y.value && (x.value - y.value).abs() < 1e-4));
    }
}
