use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, configs or parameters outside a formula's domain. Exit 2.
    Invalid(String),
    /// Everything else. Exit 1.
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn invalid(e: impl fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

pub fn runtime(e: impl fmt::Display) -> CliError {
    CliError::Runtime(anyhow::anyhow!("{e}"))
}

/// `f64` as Rust's `Debug` prints it, so `1` shows as `1.0`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(&self.header).map_err(runtime)?;
        for r in &self.rows {
            w.write_record(r).map_err(runtime)?;
        }
        w.into_inner().map_err(runtime)
    }
}

/// Everything a command can print; which part is used depends on `--format`.
pub struct Report {
    /// Default file stem under `--out-dir`.
    pub name: &'static str,
    pub default_format: Format,
    pub json: Value,
    pub table: Option<Table>,
    pub text: Option<String>,
    /// Resolved config, written beside non-JSON output.
    pub config: Option<Value>,
}

impl Report {
    pub fn new<T: Serialize>(name: &'static str, default_format: Format, out: &T) -> Result<Self> {
        Ok(Self {
            name,
            default_format,
            json: serde_json::to_value(out).map_err(runtime)?,
            table: None,
            text: None,
            config: None,
        })
    }

    pub fn table(mut self, t: Table) -> Self {
        self.table = Some(t);
        self
    }

    pub fn text(mut self, t: impl Into<String>) -> Self {
        self.text = Some(t.into());
        self
    }

    pub fn config<T: Serialize>(mut self, c: &T) -> Result<Self> {
        self.config = Some(serde_json::to_value(c).map_err(runtime)?);
        Ok(self)
    }
}

pub struct Sink {
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

fn ext(f: Format) -> &'static str {
    match f {
        Format::Text => "txt",
        Format::Json => "json",
        Format::Csv => "csv",
    }
}

pub fn to_json_bytes(v: &Value) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v).map_err(runtime)?;
    s.push(b'\n');
    Ok(s)
}

impl Sink {
    /// `--output` relative to `--out-dir`; with only `--out-dir`, a file named
    /// after the command.
    fn destination(&self, name: &str, format: Format) -> Option<PathBuf> {
        match (&self.output, &self.out_dir) {
            (Some(p), Some(dir)) if p.is_relative() => Some(dir.join(p)),
            (Some(p), _) => Some(p.clone()),
            (None, Some(dir)) => Some(dir.join(format!("{name}.{}", ext(format)))),
            (None, None) => None,
        }
    }

    pub fn emit(&self, report: Report) -> Result<()> {
        let mut format = self.format.unwrap_or(report.default_format);
        if format == Format::Text && report.text.is_none() {
            format = Format::Json;
        }
        let body = match format {
            Format::Json => to_json_bytes(&report.json)?,
            Format::Csv => match &report.table {
                Some(t) => t.to_csv()?,
                None => return Err(invalid(format!("{} has no CSV form", report.name))),
            },
            Format::Text => {
                let mut t = report.text.clone().unwrap_or_default();
                if !t.ends_with('\n') {
                    t.push('\n');
                }
                t.into_bytes()
            }
        };
        let dest = self.destination(report.name, format);
        match &dest {
            Some(path) => write_file(path, &body)?,
            None => std::io::stdout().write_all(&body)?,
        }
        if format != Format::Json {
            if let Some(cfg) = &report.config {
                match dest {
                    Some(path) => write_file(&sidecar(&path), &to_json_bytes(cfg)?)?,
                    None => eprintln!("resolved config: {}", serde_json::to_string(cfg).map_err(runtime)?),
                }
            }
        }
        Ok(())
    }
}

pub fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

pub fn write_file(path: &Path, body: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| runtime(format!("creating {}: {e}", dir.display())))?;
    }
    fs::write(path, body).map_err(|e| runtime(format!("writing {}: {e}", path.display())))
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| runtime(format!("reading {}: {e}", path.display())))
}

/// Parses a JSON config; syntax errors and unknown keys are validation errors.
pub fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let s = read_file(path)?;
    serde_json::from_str(&s).map_err(|e| invalid(format!("{}: {e}", path.display())))
}
