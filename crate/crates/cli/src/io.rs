//! Input parsing, CSV/JSON emission and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nugget_gp::{Dataset, GpError};
use serde::{Deserialize, Serialize};

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or missing input, bad options.
    Input(String),
    /// Input parsed but is not a valid design.
    Data(String),
    /// No usable correlation matrix anywhere on the grid.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Data(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<GpError> for CliError {
    fn from(e: GpError) -> Self {
        match e {
            GpError::DuplicatePoints { .. } | GpError::UnsortedPoints { .. } | GpError::DegenerateData => {
                CliError::Data(e.to_string())
            }
            GpError::AllInfeasible | GpError::NotPositiveDefinite { .. } => CliError::Numerical(e.to_string()),
            GpError::InvalidParameter(_) | GpError::DimensionMismatch { .. } => CliError::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(format!("i/o error: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Deserialize)]
struct Row {
    x: f64,
    y: f64,
}

/// Reads a `x,y` CSV. Format problems are input errors; design problems are data errors.
pub fn read_dataset(path: &Path) -> CliResult<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_dataset(&text).map_err(|e| match e {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_dataset(text: &str) -> CliResult<Dataset> {
    if text.trim().is_empty() {
        return Err(CliError::Input("input is empty".into()));
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| CliError::Input(format!("line 1: {e}")))?.clone();
    if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "y" {
        return Err(CliError::Input(format!(
            "line 1: expected header `x,y`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for record in reader.deserialize::<Row>() {
        let row = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::Input(format!("line {line}: {}", describe_csv_error(&e)))
        })?;
        xs.push(row.x);
        ys.push(row.y);
    }
    if xs.is_empty() {
        return Err(CliError::Input("input has a header but no observations".into()));
    }
    Dataset::new(xs, ys).map_err(|e| match e {
        GpError::InvalidParameter(m) => CliError::Data(m),
        other => other.into(),
    })
}

fn describe_csv_error(e: &csv::Error) -> String {
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => format!("cannot parse field: {err}"),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        _ => e.to_string(),
    }
}

/// Round-trippable 17-significant-digit rendering.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunManifest {
    pub fn new(command: &str, parameters: BTreeMap<String, String>, seed: Option<u64>) -> Self {
        Self { command: command.to_string(), parameters, tool_version: env!("CARGO_PKG_VERSION").to_string(), seed }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// A CSV table held as rows of already-formatted fields.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io_err = |e: csv::Error| CliError::Input(format!("csv write failed: {e}"));
        w.write_record(&self.header).map_err(io_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(io_err)?;
        }
        w.into_inner().map_err(|e| CliError::Input(format!("csv write failed: {e}")))
    }
}

/// Sidecar path `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Writes a CSV to `out` with its sidecar manifest, or to stdout with the
/// manifest on stderr.
pub fn emit_csv(table: &Table, manifest: &RunManifest, out: Option<&Path>) -> CliResult<()> {
    let bytes = table.to_csv()?;
    match out {
        Some(path) => {
            fs::write(path, bytes)?;
            fs::write(manifest_path(path), manifest.to_json())?;
        }
        None => {
            std::io::stdout().write_all(&bytes)?;
            eprintln!("{}", manifest.to_json());
        }
    }
    Ok(())
}

pub fn emit_json(value: &serde_json::Value, out: Option<&Path>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("json value serializes") + "\n";
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
