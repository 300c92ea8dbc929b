//! Command-line driver. Exit codes: 0 success, 1 config or usage error,
//! 2 numerical or I/O failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand};

use crate::config::ConfigDocument;
use crate::error::{Error, Result};
use crate::experiments::{analytic_cost, slope_fit, Experiment, Method};
use crate::profiling::fit_profile;
use crate::table::{config_hash, format_f64, write_atomic, ResultTable, Row, TOOL_VERSION};

#[derive(Debug, Parser)]
#[command(
    name = "trotterprof",
    version,
    about = "Trotter-error profiling and multi-product baselines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment document.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in experiment: tfim-ruth3, tfim-suzuki4, xxz-ruth3, xxz-suzuki4.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// Output file, written atomically. Defaults to the config's output path, then stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Overrides the noise seed.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Comma-separated methods out of trotter, ep, mpf.
    #[arg(long, global = true, value_name = "LIST", value_delimiter = ',')]
    method: Option<Vec<String>>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Error curves for every configured time.
    Run,
    /// One profile sweep at a single time, with the fit.
    Profile {
        /// Evolution time; defaults to the first configured time.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Multi-product curve and its weights.
    Mpf,
    /// Report the calibrated fit basis.
    Calibrate,
    /// Log-log slopes of the error curves.
    Slope {
        #[arg(long)]
        t_min: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
    },
    /// Circuit counts per method and step count.
    Cost {
        #[arg(long, default_value_t = 8)]
        max_steps: usize,
    },
}

struct Loaded {
    experiment: Experiment,
    hash: String,
    seed: u64,
    out: Option<PathBuf>,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 1,
        _ => 2,
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run_command<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    if cli.config.is_none() && cli.preset.is_none() {
        let _ = writeln!(
            stderr,
            "error: one of --config or --preset is required\n\n{}",
            Cli::command().render_usage()
        );
        return 1;
    }
    match dispatch(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn load(cli: &Cli) -> Result<Loaded> {
    let mut doc = match (&cli.config, &cli.preset) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "give only one of --config and --preset".into(),
            ))
        }
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read config `{}`: {e}", path.display()))
            })?;
            ConfigDocument::parse(&text)?
        }
        (None, Some(name)) => ConfigDocument::preset(name)?,
        (None, None) => unreachable!("checked by the caller"),
    };
    if let Some(seed) = cli.seed {
        doc.noise.seed = seed;
    }
    let hash = config_hash(&doc.to_toml()?);
    let seed = doc.noise.seed;
    let out = cli.out.clone().or_else(|| {
        doc.output
            .as_ref()
            .and_then(|o| o.path.as_ref())
            .map(PathBuf::from)
    });
    let config = doc.to_config()?;
    Ok(Loaded {
        experiment: Experiment::new(config)?,
        hash,
        seed,
        out,
    })
}

fn methods(cli: &Cli) -> Result<Vec<Method>> {
    let Some(list) = &cli.method else {
        return Ok(Method::ALL.to_vec());
    };
    let mut out = Vec::new();
    for m in list {
        let m: Method = m
            .trim()
            .parse()
            .map_err(|e: Error| Error::Config(e.to_string()))?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("--method lists no methods".into()));
    }
    Ok(out)
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

fn basis_label(exp: &Experiment) -> String {
    let b = exp.basis();
    let orders: Vec<String> = b.orders().iter().map(|s| s.to_string()).collect();
    format!(
        "orders={} antisymmetric={}",
        orders.join(" "),
        b.include_antisymmetric()
    )
}

/// A plain CSV with the usual metadata lines, for reports outside the
/// results-table layout.
fn small_csv(meta: &[(String, String)], header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut buf = Vec::new();
    for (k, v) in meta {
        writeln!(buf, "# {k}: {v}")?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(buf);
    let table = |e: csv::Error| Error::Table(e.to_string());
    w.write_record(header).map_err(table)?;
    for r in rows {
        w.write_record(r).map_err(table)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Table(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Table(e.to_string()))
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let methods = methods(cli)?;
    let loaded = load(cli)?;
    let exp = &loaded.experiment;
    let out = loaded.out.as_deref();
    let mut table = ResultTable::new(&loaded.hash, loaded.seed);
    let meta = table.metadata.clone();

    match &cli.command {
        Command::Run => {
            table.metadata.push(("basis".into(), basis_label(exp)));
            for &m in &methods {
                table.push_curve(&exp.run_error_curve(m)?);
            }
            table.sort();
            emit(&table.to_csv()?, out, stdout)
        }
        Command::Profile { t } => {
            let t = t.unwrap_or(exp.config().times[0]);
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Config(format!("--t must be positive, got {t}")));
            }
            let exact = exp.exact_value(t)?;
            let samples = exp.profile(t)?;
            let fit = fit_profile(&samples, exp.basis(), exp.config().formula.alpha())?;
            table.metadata.push(("basis".into(), basis_label(exp)));
            table
                .metadata
                .push(("fit_condition".into(), format_f64(fit.condition_number)));
            table
                .metadata
                .push(("fit_residual".into(), format_f64(fit.residual_norm)));
            for (s, c) in &fit.coefficients {
                table
                    .metadata
                    .push((format!("fit_sym_{s}"), format_f64(*c)));
            }
            for (s, c) in &fit.antisymmetric {
                table
                    .metadata
                    .push((format!("fit_anti_{s}"), format_f64(*c)));
            }
            for p in &samples {
                table.rows.push(Row {
                    method: "profile".into(),
                    t,
                    a_or_steps: p.a,
                    estimate: p.value,
                    exact,
                    abs_error: (p.value - exact).abs(),
                });
            }
            table.rows.push(Row {
                method: Method::Ep.to_string(),
                t,
                a_or_steps: exp.config().profiling.trotter_steps as f64,
                estimate: fit.y_star,
                exact,
                abs_error: (fit.y_star - exact).abs(),
            });
            table.sort();
            emit(&table.to_csv()?, out, stdout)
        }
        Command::Mpf => {
            let w = exp.mpf_weights();
            if w.ill_conditioned() {
                writeln!(
                    stderr,
                    "warning: MPF weights are ill-conditioned (condition number {:.3e})",
                    w.condition_number()
                )?;
            }
            let join = |v: Vec<String>| v.join(" ");
            table.metadata.push((
                "mpf_step_counts".into(),
                join(w.step_counts().iter().map(|s| s.to_string()).collect()),
            ));
            table.metadata.push((
                "mpf_weights".into(),
                join(w.exact_weights().iter().map(|x| x.to_string()).collect()),
            ));
            table
                .metadata
                .push(("mpf_condition".into(), format_f64(w.condition_number())));
            table.push_curve(&exp.run_error_curve(Method::Mpf)?);
            table.sort();
            emit(&table.to_csv()?, out, stdout)
        }
        Command::Calibrate => {
            let mut text = String::new();
            for (k, v) in &meta {
                text += &format!("# {k}: {v}\n");
            }
            text += &format!("basis: {}\n", basis_label(exp));
            match exp.calibration() {
                None => text += "calibrated: false\n",
                Some(r) => {
                    text += "calibrated: true\n";
                    text += &format!(
                        "largest_coefficient: {}\n",
                        format_f64(r.largest_coefficient)
                    );
                    match r.asymmetry {
                        Some(x) => text += &format!("asymmetry: {}\n", format_f64(x)),
                        None => text += "asymmetry: none\n",
                    }
                    text += &format!("flat: {}\n", r.flat);
                    text += &format!("condition_number: {}\n", format_f64(r.condition_number));
                    for (s, m) in &r.relative_magnitudes {
                        text += &format!("relative_magnitude_{s}: {}\n", format_f64(*m));
                    }
                }
            }
            text += &format!(
                "a_grid: {}\n",
                exp.a_grid()
                    .iter()
                    .map(|&a| format_f64(a))
                    .collect::<Vec<_>>()
                    .join(" ")
            );
            emit(&text, out, stdout)
        }
        Command::Slope { t_min, t_max } => {
            let times = &exp.config().times;
            let lo = t_min.unwrap_or_else(|| times.iter().copied().fold(f64::INFINITY, f64::min));
            let hi = t_max.unwrap_or_else(|| times.iter().copied().fold(0.0, f64::max));
            if !(lo > 0.0 && hi >= lo) {
                return Err(Error::Config(format!("slope window [{lo}, {hi}] is empty")));
            }
            let mut rows = Vec::new();
            for &m in &methods {
                let slope = slope_fit(&exp.run_error_curve(m)?, (lo, hi))?;
                rows.push(vec![
                    m.to_string(),
                    format_f64(lo),
                    format_f64(hi),
                    format_f64(slope),
                ]);
            }
            emit(
                &small_csv(&meta, &["method", "t_min", "t_max", "slope"], &rows)?,
                out,
                stdout,
            )
        }
        Command::Cost { max_steps } => {
            if *max_steps == 0 {
                return Err(Error::Config("--max-steps must be at least 1".into()));
            }
            let cfg = exp.config();
            let grid = exp.a_grid().len();
            let mut rows = Vec::new();
            for &m in &methods {
                for n in 1..=*max_steps {
                    let c = analytic_cost(m, &cfg.formula, &cfg.partition, n, grid)?;
                    rows.push(vec![
                        m.to_string(),
                        n.to_string(),
                        c.circuits.to_string(),
                        c.trotter_steps.to_string(),
                        c.elementary_gates.to_string(),
                    ]);
                }
            }
            let header = [
                "method",
                "n",
                "circuits",
                "trotter_steps",
                "elementary_gates",
            ];
            emit(&small_csv(&meta, &header, &rows)?, out, stdout)
        }
    }
}

pub fn version() -> &'static str {
    TOOL_VERSION
}
