//! On-disk formats. Readers report errors with file and line; writers are
//! deterministic so identical inputs give identical bytes.

pub mod annotations;
pub mod corpus;
pub mod counts;
pub mod features;
pub mod lexicon;
pub mod model;
pub mod reports;
pub mod scores;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{CliError, CliResult, Context};

/// `%g`-style rendering with 9 significant digits; infinities as `inf` /
/// `-inf`.
pub fn fmt_sig9(x: f64) -> String {
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
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Parses a real written by [`fmt_sig9`] or Rust's `Display`.
pub fn parse_real(s: &str) -> Option<f64> {
    match s.trim() {
        "-inf" => Some(f64::NEG_INFINITY),
        "inf" => Some(f64::INFINITY),
        t => t.parse().ok().filter(|v: &f64| !v.is_nan()),
    }
}

pub fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).in_file(dir)?;
    }
    Ok(BufWriter::new(File::create(path).in_file(path)?))
}

pub fn csv_writer(path: &Path) -> CliResult<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(create(path)?))
}

pub fn csv_reader(path: &Path) -> CliResult<csv::Reader<File>> {
    let f = File::open(path).in_file(path)?;
    Ok(csv::ReaderBuilder::new().flexible(true).from_reader(f))
}

pub fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map(|p| p.line() as usize);
    CliError::data(path, line, e)
}

/// Line number of a CSV record for error messages.
pub fn record_line(r: &csv::StringRecord) -> Option<usize> {
    r.position().map(|p| p.line() as usize)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Internal(e.to_string()))?;
    w.write_all(b"\n").in_file(path)?;
    w.flush().in_file(path)
}

pub fn finish<W: Write>(path: &Path, mut w: csv::Writer<W>) -> CliResult<()> {
    w.flush().in_file(path)
}

pub trait CsvContext<T> {
    fn in_file_csv(self, path: &Path) -> CliResult<T>;
}

impl<T> CsvContext<T> for csv::Result<T> {
    fn in_file_csv(self, path: &Path) -> CliResult<T> {
        self.map_err(|e| csv_error(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9() {
        assert_eq!(fmt_sig9(0.3367726468997534), "0.336772647");
        assert_eq!(fmt_sig9(-1.0), "-1");
        assert_eq!(fmt_sig9(12.5), "12.5");
        assert_eq!(fmt_sig9(1.5e-7), "1.5e-07");
        assert_eq!(fmt_sig9(123456789012.0), "1.23456789e+11");
        assert_eq!(fmt_sig9(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(99999.99999999), "100000");
        assert_eq!(parse_real("-inf"), Some(f64::NEG_INFINITY));
    }
}
