//! TOML experiment documents and the built-in presets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{
    tfim_config, xxz_config, BasisChoice, ExperimentConfig, MpfOptions, ProfilingOptions,
};
use crate::formula::{FormulaName, PartitionedHamiltonian, ProductFormula, Step};
use crate::linalg::geometric_grid;
use crate::pauli::{OperatorSum, PauliTerm, C64};
use crate::profiling::{BasisSpec, CalibrationOptions};
use crate::simulator::{init_product_state, NoiseModel, StateVector};

pub const PRESETS: [&str; 4] = ["tfim-ruth3", "tfim-suzuki4", "xxz-ruth3", "xxz-suzuki4"];

/// A number, or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexValue {
    fn to_c64(self) -> C64 {
        match self {
            ComplexValue::Real(x) => C64::new(x, 0.0),
            ComplexValue::Pair([re, im]) => C64::new(re, im),
        }
    }

    fn from_c64(z: C64) -> Self {
        if z.im == 0.0 {
            ComplexValue::Real(z.re)
        } else {
            ComplexValue::Pair([z.re, z.im])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub pauli: String,
    pub coeff: ComplexValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub num_qubits: usize,
    pub hamiltonian: Vec<TermSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomFormula {
    /// `[fragment, coefficient]` pairs in operator-product order.
    pub steps: Vec<(usize, f64)>,
    pub alpha: u32,
    pub symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormulaSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomFormula>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    /// Per-qubit `[amp0, amp1]`, qubit 1 first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product: Option<Vec<[ComplexValue; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<ComplexValue>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeScale {
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimesSection {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub scale: TimeScale,
}

impl Default for TimesSection {
    fn default() -> Self {
        TimesSection {
            start: 0.1,
            stop: 1.0,
            points: 20,
            scale: TimeScale::Log,
        }
    }
}

impl TimesSection {
    fn values(&self) -> Result<Vec<f64>> {
        if self.points == 0 {
            return Err(field("times.points", "must be at least 1"));
        }
        if !(self.start > 0.0) || !(self.stop >= self.start) || !self.stop.is_finite() {
            return Err(field("times", "need 0 < start <= stop"));
        }
        if self.points > 1 && self.stop == self.start {
            return Err(field("times", "start equals stop with more than one point"));
        }
        Ok(match self.scale {
            TimeScale::Log => geometric_grid(self.points, self.start, self.stop),
            TimeScale::Linear if self.points == 1 => vec![self.start],
            TimeScale::Linear => (0..self.points)
                .map(|k| {
                    if k + 1 == self.points {
                        self.stop
                    } else {
                        self.start + (self.stop - self.start) * k as f64 / (self.points - 1) as f64
                    }
                })
                .collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfilingSection {
    #[serde(default = "one")]
    pub trotter_steps: usize,
    /// Orders fitted past `2 alpha - 2` during calibration.
    #[serde(default = "three")]
    pub n_extra_orders: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_grid: Option<Vec<f64>>,
    /// Fixed basis orders; calibrated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orders: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antisymmetric: Option<bool>,
}

fn one() -> usize {
    1
}

fn three() -> u32 {
    3
}

impl Default for ProfilingSection {
    fn default() -> Self {
        ProfilingSection {
            trotter_steps: 1,
            n_extra_orders: 3,
            a_grid: None,
            orders: None,
            antisymmetric: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpfSection {
    pub step_counts: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetric: Option<bool>,
}

impl Default for MpfSection {
    fn default() -> Self {
        MpfSection {
            step_counts: vec![1, 2],
            symmetric: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default = "csv_format")]
    pub format: String,
}

fn csv_format() -> String {
    "csv".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    /// Hamiltonian term indices per fragment.
    pub partition: Vec<Vec<usize>>,
    pub system: SystemSection,
    pub formula: FormulaSection,
    pub initial_state: StateSection,
    pub observable: Vec<TermSpec>,
    #[serde(default)]
    pub times: TimesSection,
    #[serde(default)]
    pub profiling: ProfilingSection,
    #[serde(default)]
    pub mpf: MpfSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

fn field(name: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("field `{name}`: {msg}"))
}

fn operator(name: &str, n: usize, terms: &[TermSpec]) -> Result<OperatorSum> {
    let mut out = Vec::with_capacity(terms.len());
    for (i, t) in terms.iter().enumerate() {
        let word = t
            .pauli
            .parse()
            .map_err(|e| field(&format!("{name}[{i}].pauli"), e))?;
        let term = PauliTerm::new(word, t.coeff.to_c64());
        if term.num_qubits() != n {
            return Err(field(
                &format!("{name}[{i}].pauli"),
                format!(
                    "`{}` has {} letters, expected {n}",
                    t.pauli,
                    term.num_qubits()
                ),
            ));
        }
        if t.coeff.to_c64().im != 0.0 {
            return Err(field(
                &format!("{name}[{i}].coeff"),
                "coefficients of a Hermitian operator must be real",
            ));
        }
        out.push(term);
    }
    OperatorSum::new(n, out).map_err(|e| field(name, e))
}

fn terms_of(op: &OperatorSum) -> Vec<TermSpec> {
    op.terms()
        .iter()
        .map(|t| TermSpec {
            pauli: t.word.to_string(),
            coeff: ComplexValue::from_c64(t.coeff),
        })
        .collect()
}

impl ConfigDocument {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config syntax: {e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (model, formula) = name.split_once('-').ok_or_else(|| {
            Error::Config(format!(
                "unknown preset `{name}` (expected one of {})",
                PRESETS.join(", ")
            ))
        })?;
        let formula: FormulaName = formula.parse().map_err(|_| {
            Error::Config(format!(
                "unknown preset `{name}` (expected one of {})",
                PRESETS.join(", ")
            ))
        })?;
        let cfg = match model {
            "tfim" => tfim_config(formula)?,
            "xxz" => xxz_config(formula)?,
            _ => {
                return Err(Error::Config(format!(
                    "unknown preset `{name}` (expected one of {})",
                    PRESETS.join(", ")
                )))
            }
        };
        let mut doc = ConfigDocument::describe(&cfg, TimesSection::default())?;
        let (o, z, i) = (
            ComplexValue::Real(1.0),
            ComplexValue::Real(0.0),
            ComplexValue::Pair([0.0, 1.0]),
        );
        doc.initial_state = StateSection {
            product: Some(vec![[o, z], [o, i], [o, o], [z, o]]),
            amplitudes: None,
        };
        Ok(doc)
    }

    /// A document that parses back to `cfg`, with times written as `times`.
    pub fn describe(cfg: &ExperimentConfig, times: TimesSection) -> Result<Self> {
        let n = cfg.partition.num_qubits();
        let mut hamiltonian = Vec::new();
        let mut partition = Vec::new();
        for f in cfg.partition.fragments() {
            let start = hamiltonian.len();
            hamiltonian.extend(terms_of(f.terms()));
            partition.push((start..hamiltonian.len()).collect());
        }
        let builtin = cfg
            .formula
            .name()
            .parse::<FormulaName>()
            .ok()
            .filter(|&name| {
                crate::formula::builtin_formula(name, &cfg.partition)
                    .ok()
                    .as_ref()
                    == Some(&cfg.formula)
            });
        let formula = match builtin {
            Some(name) => FormulaSection {
                name: Some(name.to_string()),
                custom: None,
            },
            None => FormulaSection {
                name: Some(cfg.formula.name().to_string()),
                custom: Some(CustomFormula {
                    steps: cfg
                        .formula
                        .steps()
                        .iter()
                        .map(|s| (s.fragment, s.coeff))
                        .collect(),
                    alpha: cfg.formula.alpha(),
                    symmetric: cfg.formula.is_symmetric(),
                }),
            },
        };
        let (n_extra_orders, orders, antisymmetric) = match &cfg.profiling.basis {
            BasisChoice::Calibrated(opts) => (opts.n_extra_orders, None, None),
            BasisChoice::Fixed(b) => (
                3,
                Some(b.orders().to_vec()),
                Some(b.include_antisymmetric()),
            ),
        };
        Ok(ConfigDocument {
            partition,
            system: SystemSection {
                num_qubits: n,
                hamiltonian,
            },
            formula,
            initial_state: StateSection {
                product: None,
                amplitudes: Some(
                    cfg.initial_state
                        .amplitudes()
                        .iter()
                        .map(|&z| ComplexValue::from_c64(z))
                        .collect(),
                ),
            },
            observable: terms_of(&cfg.observable),
            times,
            profiling: ProfilingSection {
                trotter_steps: cfg.profiling.trotter_steps,
                n_extra_orders,
                a_grid: cfg.profiling.a_grid.clone(),
                orders,
                antisymmetric,
            },
            mpf: MpfSection {
                step_counts: cfg.mpf.step_counts.clone(),
                symmetric: Some(cfg.mpf.symmetric),
            },
            noise: NoiseSection {
                sigma: cfg.noise.sigma,
                seed: cfg.noise.seed,
            },
            output: None,
        })
    }

    /// Validates the document and builds the experiment it describes.
    pub fn to_config(&self) -> Result<ExperimentConfig> {
        let n = self.system.num_qubits;
        if n == 0 {
            return Err(field("system.num_qubits", "must be at least 1"));
        }
        let h = operator("system.hamiltonian", n, &self.system.hamiltonian)?;
        if h.len() != self.system.hamiltonian.len() {
            return Err(field(
                "system.hamiltonian",
                "duplicate or zero terms are not allowed",
            ));
        }
        let partition = PartitionedHamiltonian::from_cover(&h, &self.partition)
            .map_err(|e| field("partition", e))?;

        let formula = match (&self.formula.name, &self.formula.custom) {
            (_, Some(c)) => {
                let steps = c.steps.iter().map(|&(k, x)| Step::new(k, x)).collect();
                let name = self.formula.name.clone().unwrap_or_else(|| "custom".into());
                ProductFormula::custom(name, steps, c.alpha, c.symmetric, partition.len())
                    .map_err(|e| field("formula.custom", e))?
            }
            (Some(name), None) => {
                let name: FormulaName = name.parse().map_err(|e| field("formula.name", e))?;
                crate::formula::builtin_formula(name, &partition)
                    .map_err(|e| field("formula.name", e))?
            }
            (None, None) => return Err(field("formula", "needs `name` or `custom`")),
        };

        let initial_state = match (&self.initial_state.product, &self.initial_state.amplitudes) {
            (Some(p), None) => {
                if p.len() != n {
                    return Err(field(
                        "initial_state.product",
                        format!("{} factors for {n} qubits", p.len()),
                    ));
                }
                let factors: Vec<[C64; 2]> =
                    p.iter().map(|f| [f[0].to_c64(), f[1].to_c64()]).collect();
                init_product_state(&factors).map_err(|e| field("initial_state.product", e))?
            }
            (None, Some(a)) => {
                if a.len() != 1 << n {
                    return Err(field(
                        "initial_state.amplitudes",
                        format!("{} amplitudes for {n} qubits", a.len()),
                    ));
                }
                StateVector::from_amplitudes(a.iter().map(|z| z.to_c64()).collect())
                    .map_err(|e| field("initial_state.amplitudes", e))?
            }
            _ => {
                return Err(field(
                    "initial_state",
                    "give exactly one of `product` or `amplitudes`",
                ))
            }
        };

        let observable = operator("observable", n, &self.observable)?;
        let times = self.times.values()?;
        let alpha = formula.alpha();
        let basis = match (&self.profiling.orders, self.profiling.antisymmetric) {
            (Some(orders), anti) => BasisChoice::Fixed(
                BasisSpec::new(orders.clone(), anti.unwrap_or(true), alpha)
                    .map_err(|e| field("profiling.orders", e))?,
            ),
            (None, Some(_)) => {
                return Err(field(
                    "profiling.antisymmetric",
                    "only applies together with `orders`",
                ))
            }
            (None, None) => BasisChoice::Calibrated(CalibrationOptions {
                n_extra_orders: self.profiling.n_extra_orders,
                ..CalibrationOptions::default()
            }),
        };
        if let Some(grid) = &self.profiling.a_grid {
            let mut sorted = grid.clone();
            sorted.sort_by(f64::total_cmp);
            if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
                return Err(field(
                    "profiling.a_grid",
                    format!("duplicate value a = {}", w[0]),
                ));
            }
        }
        if self.mpf.step_counts.is_empty() {
            return Err(field("mpf.step_counts", "must not be empty"));
        }
        if let Some(out) = &self.output {
            if out.format != "csv" {
                return Err(field(
                    "output.format",
                    format!("unsupported format `{}`", out.format),
                ));
            }
        }
        let cfg = ExperimentConfig {
            mpf: MpfOptions {
                step_counts: self.mpf.step_counts.clone(),
                symmetric: self.mpf.symmetric.unwrap_or(formula.is_symmetric()),
            },
            partition,
            formula,
            observable,
            initial_state,
            times,
            profiling: ProfilingOptions {
                trotter_steps: self.profiling.trotter_steps,
                basis,
                a_grid: self.profiling.a_grid.clone(),
            },
            noise: NoiseModel {
                sigma: self.noise.sigma,
                seed: self.noise.seed,
            },
        };
        cfg.validate().map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })?;
        Ok(cfg)
    }
}

/// Parses and validates a TOML experiment document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    ConfigDocument::parse(text)?.to_config()
}
