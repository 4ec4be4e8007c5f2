//! Minimal CSV output with a provenance comment block.
//!
//! Floats are written with 9 significant digits, in plain notation when the
//! exponent is moderate and scientific otherwise.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

use super::write_atomic;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

/// `x` to 9 significant digits.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        // The exponent is taken after rounding, so this keeps exactly 9 digits.
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Lines written as `# key: value` above the header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub lines: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(command: &str, config_sha256: &str, seed: u64) -> Self {
        Provenance {
            lines: vec![
                ("generator".into(), format!("jcas {}", env!("CARGO_PKG_VERSION"))),
                ("command".into(), command.into()),
                ("config_sha256".into(), config_sha256.into()),
                ("seed".into(), seed.to_string()),
            ],
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.lines.push((key.into(), value.into()));
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        CsvTable {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn render(&self, provenance: &Provenance) -> String {
        let mut out = String::new();
        for (k, v) in &provenance.lines {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns).expect("writing to memory");
        for row in &self.rows {
            w.write_record(row.iter().map(|c| match c {
                Cell::Float(v) => format_float(*v),
                Cell::Int(v) => v.to_string(),
                Cell::Text(t) => t.clone(),
                Cell::Empty => String::new(),
            }))
            .expect("writing to memory");
        }
        let body = w.into_inner().expect("flushing to memory");
        out.push_str(std::str::from_utf8(&body).expect("cells are UTF-8"));
        out
    }

    /// Renders and writes through a temporary file, so a failed run never leaves a partial CSV.
    pub fn write(&self, path: &Path, provenance: &Provenance) -> Result<()> {
        write_atomic(path, self.render(provenance).as_bytes())
    }
}
