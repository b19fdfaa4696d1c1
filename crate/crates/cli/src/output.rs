//! Tables rendered as CSV or newline-delimited JSON.
//!
//! Floats are written with 17 significant digits so that identical runs
//! give identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::{Format, RunConfig};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i128),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v as i128)
    }
}

impl From<u32> for Value {
    fn from(v: u32) -> Self {
        Value::Int(v as i128)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v as i128)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

pub fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

impl Value {
    fn csv(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::Float(v) => float(*v),
            Value::Text(s) => s.clone(),
            Value::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::Float(v) if v.is_finite() => float(*v),
            Value::Float(_) => "null".into(),
            Value::Text(s) => serde_json::Value::from(s.as_str()).to_string(),
            Value::Bool(b) => b.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Self { name, columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }
}

/// Everything one command produced. The first table is the primary output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
    /// Verification outcome; `Some(false)` maps to exit code 1.
    pub passed: Option<bool>,
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Version string written into every header.
pub const TOOL: &str = concat!("bfree-lab ", env!("CARGO_PKG_VERSION"));

fn write_csv_header(w: &mut dyn Write, cfg: &RunConfig, notes: &[String]) -> std::io::Result<()> {
    writeln!(w, "# {TOOL}")?;
    for (k, v) in cfg.echo() {
        writeln!(w, "# {k} = {v}")?;
    }
    for n in notes {
        writeln!(w, "# note: {n}")?;
    }
    Ok(())
}

fn write_csv_table(w: &mut dyn Write, table: &Table) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(&table.columns)?;
    for row in &table.rows {
        out.write_record(row.iter().map(Value::csv))?;
    }
    out.flush()?;
    Ok(())
}

fn write_json(w: &mut dyn Write, cfg: &RunConfig, report: &Report) -> Result<(), CliError> {
    let config: Vec<String> = cfg
        .echo()
        .into_iter()
        .map(|(k, v)| format!("{}:{}", Value::from(k).json(), Value::from(v).json()))
        .collect();
    let notes: Vec<String> = report.notes.iter().map(|n| Value::from(n.as_str()).json()).collect();
    writeln!(
        w,
        "{{\"record\":\"metadata\",\"tool\":{},\"config\":{{{}}},\"tables\":[{}],\"notes\":[{}]}}",
        Value::from(TOOL).json(),
        config.join(","),
        report.tables.iter().map(|t| Value::from(t.name).json()).collect::<Vec<_>>().join(","),
        notes.join(",")
    )?;
    for table in &report.tables {
        for row in &table.rows {
            let fields: Vec<String> = table
                .columns
                .iter()
                .zip(row)
                .map(|(c, v)| format!("{}:{}", Value::from(*c).json(), v.json()))
                .collect();
            writeln!(w, "{{\"record\":{},{}}}", Value::from(table.name).json(), fields.join(","))?;
        }
    }
    Ok(())
}

/// `dir/stem.csv` becomes `dir/stem.{name}.csv`.
pub fn sibling(path: &Path, name: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let file = match path.extension() {
        Some(ext) => format!("{stem}.{name}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{name}"),
    };
    path.with_file_name(file)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Writes the report to `--output` (plus sibling files for extra CSV
/// tables) or to `stdout`.
pub fn emit(cfg: &RunConfig, report: &Report, stdout: &mut dyn Write) -> Result<(), CliError> {
    match (cfg.format, &cfg.output) {
        (Format::Json, None) => write_json(stdout, cfg, report),
        (Format::Json, Some(path)) => {
            let mut f = create(path)?;
            write_json(&mut f, cfg, report)?;
            f.flush()?;
            Ok(())
        }
        (Format::Csv, None) => {
            write_csv_header(stdout, cfg, &report.notes)?;
            for (i, table) in report.tables.iter().enumerate() {
                if i > 0 {
                    writeln!(stdout)?;
                }
                writeln!(stdout, "# table: {}", table.name)?;
                write_csv_table(stdout, table)?;
            }
            Ok(())
        }
        (Format::Csv, Some(path)) => {
            for (i, table) in report.tables.iter().enumerate() {
                let target = if i == 0 { path.clone() } else { sibling(path, table.name) };
                let mut f = create(&target)?;
                write_csv_header(&mut f, cfg, &report.notes)?;
                write_csv_table(&mut f, table)?;
                f.flush()?;
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(float(0.1), "1.0000000000000001e-1");
        assert_eq!(float(6.0), "6.0000000000000000e0");
        let back: f64 = float(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
        assert_eq!(Value::Float(f64::NAN).json(), "null");
    }

    #[test]
    fn json_text_is_escaped() {
        assert_eq!(Value::from("a\"b").json(), "\"a\\\"b\"");
    }

    #[test]
    fn sibling_paths() {
        assert_eq!(sibling(Path::new("/tmp/cov.csv"), "paths"), PathBuf::from("/tmp/cov.paths.csv"));
        assert_eq!(sibling(Path::new("out"), "cdf"), PathBuf::from("out.cdf"));
    }
}
