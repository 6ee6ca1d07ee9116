use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use serde::Serialize;
use serde_json::Value;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_VERIFICATION: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Infeasible(String),
    Verification(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Verification(_) => EXIT_VERIFICATION,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::Io(m) => write!(f, "io: {m}"),
        }
    }
}

impl From<heraldkit::Error> for CliError {
    fn from(e: heraldkit::Error) -> Self {
        use heraldkit::Error as E;
        match e {
            E::Infeasible(_)
            | E::NoBracket(_)
            | E::BoundaryHit(_)
            | E::DegenerateHerald
            | E::NonPositiveConditioned => CliError::Infeasible(e.to_string()),
            E::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

/// Who made an artifact. Embedded in every file the CLI writes.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Provenance {
    /// The program name is fixed so outputs do not depend on how the binary
    /// was invoked.
    pub fn new(args: &[String], seed: Option<u64>) -> Self {
        let mut command = String::from("heraldkit");
        for a in args.iter().skip(1) {
            command.push(' ');
            command.push_str(a);
        }
        Self {
            tool: "heraldkit",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
        }
    }

    pub fn write_csv_header<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "# {} {}", self.tool, self.version)?;
        writeln!(out, "# command: {}", self.command)?;
        if let Some(s) = self.seed {
            writeln!(out, "# seed: {s}")?;
        }
        Ok(())
    }

    /// `{"provenance": …, <key>: body}`.
    pub fn wrap_json(&self, key: &str, body: Value) -> CliResult<String> {
        let mut map = serde_json::Map::new();
        map.insert("provenance".into(), serde_json::to_value(self)?);
        map.insert(key.into(), body);
        let mut s = serde_json::to_string_pretty(&Value::Object(map))?;
        s.push('\n');
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Destination of a command's artifacts: a directory, or stdout for
/// single-artifact commands when no directory was given.
#[derive(Debug, Clone)]
pub enum Sink {
    Dir(PathBuf),
    Stdout,
}

impl Sink {
    pub fn dir(path: Option<PathBuf>) -> CliResult<Self> {
        let path = path.unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&path)?;
        Ok(Sink::Dir(path))
    }

    pub fn dir_or_stdout(path: Option<PathBuf>) -> CliResult<Self> {
        match path {
            Some(_) => Self::dir(path),
            None => Ok(Sink::Stdout),
        }
    }

    /// Writes `bytes` as `name` inside the directory, or to stdout.
    pub fn emit(&self, name: &str, bytes: &[u8]) -> CliResult<Option<PathBuf>> {
        match self {
            Sink::Dir(d) => {
                let p = d.join(name);
                fs::write(&p, bytes)?;
                Ok(Some(p))
            }
            Sink::Stdout => {
                io::stdout().write_all(bytes)?;
                Ok(None)
            }
        }
    }
}

/// CSV bytes with the provenance header.
pub fn csv_with_header<F>(prov: &Provenance, body: F) -> CliResult<Vec<u8>>
where
    F: FnOnce(&mut Vec<u8>) -> CliResult,
{
    let mut buf = Vec::new();
    prov.write_csv_header(&mut buf)?;
    body(&mut buf)?;
    Ok(buf)
}

/// Serializes `rows` as CSV (header from the struct fields) or as a JSON
/// array under `key`.
pub fn table_bytes<T: Serialize>(
    prov: &Provenance,
    format: Format,
    key: &str,
    rows: &[T],
) -> CliResult<Vec<u8>> {
    match format {
        Format::Csv => csv_with_header(prov, |buf| {
            let mut w = csv::Writer::from_writer(buf);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
            Ok(())
        }),
        Format::Json => Ok(prov
            .wrap_json(key, serde_json::to_value(rows)?)?
            .into_bytes()),
    }
}

/// `0.5` → `"0.50"`, `-0.78` → `"m0.78"`, safe for file names.
pub fn tag(v: f64) -> String {
    let s = format!("{:.2}", v.abs());
    if v < 0.0 {
        format!("m{s}")
    } else {
        s
    }
}
