//! CSV and JSON files.
//!
//! Numbers are written in shortest round-trip scientific notation (`{:e}`),
//! rows in node order, with LF line endings.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{PhlError, Result};

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(File::create(path)?)))
}

pub fn fmt_num(x: f64) -> String {
    format!("{x:e}")
}

/// Numeric table with a header row.
pub fn write_table<I>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = writer(path)?;
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(PhlError::Numerical(format!("row of {} values under {} columns", row.len(), header.len())));
        }
        w.write_record(row.iter().map(|&x| fmt_num(x)))?;
    }
    w.flush()?;
    Ok(())
}

/// Numeric table; the first row is a header.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| {
                    PhlError::Validation(format!("{}: row {}: '{s}' is not a number", path.display(), k + 2))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// One `re,im` row per node; a non-numeric first row is taken as a header.
pub fn read_complex_csv(path: &Path) -> Result<Vec<Complex64>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut out = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let vals: Option<Vec<f64>> = rec.iter().map(|s| s.trim().parse().ok()).collect();
        match vals.as_deref() {
            Some([re, im]) => out.push(Complex64::new(*re, *im)),
            Some([re]) => out.push(Complex64::new(*re, 0.0)),
            None if k == 0 => continue,
            _ => return Err(PhlError::Validation(format!("{}: row {}: expected 're,im'", path.display(), k + 1))),
        }
    }
    Ok(out)
}

pub fn write_complex_csv(path: &Path, values: &[Complex64]) -> Result<()> {
    write_table(path, &["re".into(), "im".into()], values.iter().map(|z| vec![z.re, z.im]))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}
