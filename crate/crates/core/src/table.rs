//! CSV results tables with `#` metadata lines.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::ErrorCurve;

pub const HEADER: [&str; 6] = [
    "method",
    "t",
    "a_or_steps",
    "estimate",
    "exact",
    "abs_error",
];
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub method: String,
    pub t: f64,
    pub a_or_steps: f64,
    pub estimate: f64,
    pub exact: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    /// `key: value` pairs written as `#` lines, in order.
    pub metadata: Vec<(String, String)>,
    pub rows: Vec<Row>,
}

/// Shortest decimal that parses back to the same bits, positional or
/// exponent form, whichever is shorter.
pub fn format_f64(x: f64) -> String {
    let plain = x.to_string();
    let exp = format!("{x:e}");
    if exp.len() < plain.len() {
        exp
    } else {
        plain
    }
}

/// Hex sha256 of a serialized config.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl ResultTable {
    pub fn new(config_hash: &str, seed: u64) -> Self {
        ResultTable {
            metadata: vec![
                ("config_hash".into(), config_hash.into()),
                ("seed".into(), seed.to_string()),
                ("tool_version".into(), TOOL_VERSION.into()),
            ],
            rows: Vec::new(),
        }
    }

    pub fn push_curve(&mut self, curve: &ErrorCurve) {
        self.rows.extend(curve.points.iter().map(|p| Row {
            method: curve.method.to_string(),
            t: p.t,
            a_or_steps: p.a_or_steps,
            estimate: p.estimate,
            exact: p.exact,
            abs_error: p.abs_error,
        }));
    }

    pub fn metadata(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Sorts rows by method, then `t`, then `a_or_steps`.
    pub fn sort(&mut self) {
        self.rows.sort_by(|x, y| {
            x.method
                .cmp(&y.method)
                .then(x.t.total_cmp(&y.t))
                .then(x.a_or_steps.total_cmp(&y.a_or_steps))
        });
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = Vec::new();
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {v}")?;
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(HEADER).map_err(table_err)?;
        for r in &self.rows {
            w.write_record([
                r.method.clone(),
                format_f64(r.t),
                format_f64(r.a_or_steps),
                format_f64(r.estimate),
                format_f64(r.exact),
                format_f64(r.abs_error),
            ])
            .map_err(table_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Table(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Table(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut metadata = Vec::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let body = line[1..].trim();
            let (k, v) = body.split_once(':').ok_or_else(|| {
                Error::Table(format!("metadata line `{line}` has no `key: value`"))
            })?;
            metadata.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header = r.headers().map_err(table_err)?;
        if header.iter().ne(HEADER) {
            return Err(Error::Table(format!(
                "expected header `{}`, found `{}`",
                HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(table_err)?;
            let line = rec.position().map_or(0, |p| p.line());
            let num = |i: usize| -> Result<f64> {
                rec[i].parse().map_err(|_| {
                    Error::Table(format!(
                        "line {line}: `{}` in column {} is not a number",
                        &rec[i], HEADER[i]
                    ))
                })
            };
            rows.push(Row {
                method: rec[0].to_string(),
                t: num(1)?,
                a_or_steps: num(2)?,
                estimate: num(3)?,
                exact: num(4)?,
                abs_error: num(5)?,
            });
        }
        Ok(ResultTable { metadata, rows })
    }

    pub fn write_atomic(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_csv()?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        ResultTable::from_csv(&fs::read_to_string(path)?)
    }
}

/// Writes through a temporary file in the target directory, so a failed run
/// never leaves a partial file behind.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn table_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Table(format!("{other:?}")),
    }
}
