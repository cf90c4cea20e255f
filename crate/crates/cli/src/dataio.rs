//! CSV input and output.
//!
//! Input files are long format with a header row. The subject column is
//! read as text, every other column as a number; empty cells, `NA` and
//! `.` are missing values.

use std::io::{Read, Write};
use std::path::Path;

use mixlong::LongDataset;
use sha2::{Digest, Sha256};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

fn parse_cell(s: &str) -> Option<f64> {
    let t = s.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("na") || t == "." || t.eq_ignore_ascii_case("nan") {
        return Some(f64::NAN);
    }
    t.parse().ok()
}

/// Reads a dataset; `subject` names the identifier column, which is not
/// part of the numeric columns.
pub fn read_dataset<R: Read>(input: R, subject: &str) -> Result<LongDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Format(format!("csv header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let sid = header
        .iter()
        .position(|h| h == subject)
        .ok_or_else(|| CliError::Format(format!("no subject column `{subject}` in the data")))?;
    let columns: Vec<String> = header.iter().enumerate().filter(|(i, _)| *i != sid).map(|(_, h)| h.clone()).collect();
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Format(format!("csv: {e}")))?;
        let mut values = Vec::with_capacity(columns.len());
        for (i, cell) in rec.iter().enumerate() {
            if i == sid {
                continue;
            }
            let v = parse_cell(cell).ok_or_else(|| {
                CliError::Format(format!("row {}: column `{}` is not numeric: `{cell}`", line + 2, header[i]))
            })?;
            values.push(v);
        }
        rows.push((rec[sid].to_string(), values));
    }
    Ok(LongDataset::from_rows(columns, rows)?)
}

pub fn read_dataset_file(path: &Path, subject: &str) -> Result<LongDataset> {
    let f = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_dataset(std::io::BufReader::new(f), subject)
}

/// Number formatting of every CSV output: 17 significant digits, `NA`
/// for missing values.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "NA".into()
    } else if v.is_infinite() {
        if v > 0.0 { "Inf".into() } else { "-Inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

/// A CSV table with a header row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let fail = |e: csv::Error| CliError::Format(format!("csv output: {e}"));
        w.write_record(&self.header).map_err(fail)?;
        for r in &self.rows {
            w.write_record(r).map_err(fail)?;
        }
        w.flush().map_err(|e| CliError::Format(format!("csv output: {e}")))?;
        Ok(())
    }

    pub fn to_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// Writes a dataset with the subject column first.
pub fn dataset_table(data: &LongDataset, subject: &str) -> Table {
    let mut header = vec![subject.to_string()];
    header.extend(data.columns().iter().cloned());
    let mut t = Table {
        header,
        rows: Vec::new(),
    };
    for (id, row) in data.rows() {
        let mut r = vec![id.to_string()];
        r.extend(row.iter().map(|v| fmt_float(*v)));
        t.rows.push(r);
    }
    t
}

/// Identifies a dataset independently of row order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub rows: usize,
    pub subjects: usize,
    pub columns: Vec<String>,
    pub sha256: String,
}

impl Fingerprint {
    pub fn of(data: &LongDataset) -> Self {
        let mut h = Sha256::new();
        for c in data.columns() {
            h.update(c.as_bytes());
            h.update([0u8]);
        }
        for s in data.subjects() {
            h.update(s.id.as_bytes());
            h.update([0u8]);
            let mut rows: Vec<&Vec<f64>> = s.rows.iter().collect();
            rows.sort_by(|a, b| {
                a.iter()
                    .zip(b.iter())
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            for r in rows {
                for v in r {
                    // all NaNs hash alike
                    let bits = if v.is_nan() { f64::NAN.to_bits() } else { v.to_bits() };
                    h.update(bits.to_le_bytes());
                }
            }
        }
        let digest = h.finalize();
        Self {
            rows: data.n_rows(),
            subjects: data.n_subjects(),
            columns: data.columns().to_vec(),
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        }
    }

    /// Describes the first difference, `None` when equal.
    pub fn mismatch(&self, other: &Self) -> Option<String> {
        if self.columns != other.columns {
            return Some(format!("columns {:?} vs {:?}", self.columns, other.columns));
        }
        if self.subjects != other.subjects || self.rows != other.rows {
            return Some(format!(
                "{} subjects / {} rows vs {} subjects / {} rows",
                self.subjects, self.rows, other.subjects, other.rows
            ));
        }
        if self.sha256 != other.sha256 {
            return Some("same shape, different values".into());
        }
        None
    }
}
