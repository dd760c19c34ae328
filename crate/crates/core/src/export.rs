//! Deterministic CSV/JSON writers.
//!
//! Every float is written with 17 significant digits and every file starts
//! with a provenance block, so identical inputs give byte-identical files.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// Fixed 17-significant-digit rendering of a float.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Key/value metadata written ahead of the data.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Provenance {
    pub entries: Vec<(String, String)>,
}

impl Provenance {
    pub fn new() -> Self {
        let mut p = Self::default();
        p.push("generator", concat!("pinchfold ", env!("CARGO_PKG_VERSION")));
        p
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.entries.push((key.into(), value.into()));
        self
    }

    pub fn push_f64(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.push(key, fmt_f64(value))
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.push(key, value);
        self
    }

    pub fn with_f64(mut self, key: impl Into<String>, value: f64) -> Self {
        self.push_f64(key, value);
        self
    }

    /// `# key: value` comment lines.
    pub fn write_comment_block<W: Write>(&self, w: &mut W) -> Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "# {k}: {v}").map_err(io_err)?;
        }
        Ok(())
    }
}

pub(crate) fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Export(e.to_string())
}

/// Table of named columns written as CSV behind a provenance block.
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, prov: &Provenance, mut w: W) -> Result<()> {
        prov.write_comment_block(&mut w)?;
        let mut wr = csv::WriterBuilder::new().from_writer(w);
        wr.write_record(&self.header).map_err(io_err)?;
        for r in &self.rows {
            wr.write_record(r).map_err(io_err)?;
        }
        wr.flush().map_err(io_err)?;
        Ok(())
    }
}

struct Fixed17;

impl serde_json::ser::Formatter for Fixed17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serialize `value` as JSON with fixed float formatting, wrapped as
/// `{"provenance": {...}, "data": value}`.
pub fn write_json<W: Write, T: Serialize>(prov: &Provenance, value: &T, mut w: W) -> Result<()> {
    #[derive(Serialize)]
    struct Doc<'a, T> {
        provenance: std::collections::BTreeMap<&'a str, &'a str>,
        data: &'a T,
    }
    let doc = Doc {
        provenance: prov.entries.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect(),
        data: value,
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut w, Fixed17);
    doc.serialize(&mut ser).map_err(io_err)?;
    w.write_all(b"\n").map_err(io_err)?;
    Ok(())
}
