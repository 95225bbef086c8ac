//! Output sinks, deterministic float formatting and the non-finite guard.

use std::fmt;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// A verification threshold was violated.
    Threshold(String),
    /// Numerical or solver failure, including propagated library errors.
    Numeric(String),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Threshold(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Threshold(m) => write!(f, "verification failed: {m}"),
            CliError::Numeric(m) => write!(f, "solver failure: {m}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl From<hj_action::Error> for CliError {
    fn from(e: hj_action::Error) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

pub enum Sink {
    Stdout(io::Stdout),
    File(BufWriter<std::fs::File>),
}

impl Sink {
    pub fn open(path: &Option<PathBuf>) -> Result<Self, CliError> {
        Ok(match path {
            Some(p) => Sink::File(BufWriter::new(std::fs::File::create(p)?)),
            None => Sink::Stdout(io::stdout()),
        })
    }

    pub fn finish(self) -> Result<(), CliError> {
        match self {
            Sink::Stdout(mut s) => s.flush()?,
            Sink::File(mut f) => f.flush()?,
        }
        Ok(())
    }
}

impl Write for Sink {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        match self {
            Sink::Stdout(s) => s.write(buf),
            Sink::File(f) => f.write(buf),
        }
    }

    fn flush(&mut self) -> io::Result<()> {
        match self {
            Sink::Stdout(s) => s.flush(),
            Sink::File(f) => f.flush(),
        }
    }
}

/// 17 significant digits: round-trip exact for f64 and byte-deterministic.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// No silent NaN or infinity may reach an output file.
pub fn ensure_finite(label: &str, values: &[f64]) -> Result<(), CliError> {
    for &v in values {
        if !v.is_finite() {
            return Err(CliError::Numeric(format!(
                "non-finite value in {label}: {v}"
            )));
        }
    }
    Ok(())
}

/// One CSV row of floats at full precision.
pub fn write_csv_row(sink: &mut Sink, values: &[f64]) -> Result<(), CliError> {
    let row: Vec<String> = values.iter().map(|&v| fmt_f64(v)).collect();
    writeln!(sink, "{}", row.join(","))?;
    Ok(())
}
