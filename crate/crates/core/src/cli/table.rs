//! Time-series CSV tables.
//!
//! The first column is the epoch time with 6 decimals. Values are written in
//! shortest round-trip form, so reading a table back gives identical `f64`s.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::ekf::STATE_NAMES;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Column names after `time`.
    pub columns: Vec<String>,
    pub times: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

pub fn format_time(t: f64) -> String {
    format!("{t:.6}")
}

pub fn format_value(x: f64) -> String {
    format!("{x:e}")
}

/// `prefix_name` for each of the 12 states, in state order.
pub fn state_columns(prefix: &str) -> Vec<String> {
    STATE_NAMES
        .iter()
        .map(|n| {
            if prefix.is_empty() {
                n.to_string()
            } else {
                format!("{prefix}_{n}")
            }
        })
        .collect()
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            times: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, time: f64, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::DimensionMismatch(row.len(), self.columns.len()));
        }
        if !time.is_finite() || row.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("table row"));
        }
        self.times.push(time);
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(std::iter::once("time").chain(self.columns.iter().map(String::as_str)))?;
        for (t, row) in self.times.iter().zip(&self.rows) {
            out.write_record(std::iter::once(format_time(*t)).chain(row.iter().map(|x| format_value(*x))))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.write_to(std::io::BufWriter::new(File::create(path)?))
    }

    pub fn read_from<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("time") {
            return Err(Error::Config("table must start with a time column".into()));
        }
        let mut table = Table::new(header.iter().skip(1).map(str::to_string).collect());
        for rec in rdr.records() {
            let rec = rec?;
            let vals = rec
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| Error::Config(format!("bad number {s:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            table.push(vals[0], vals[1..].to_vec())?;
        }
        Ok(table)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::read_from(File::open(path)?)
    }
}
