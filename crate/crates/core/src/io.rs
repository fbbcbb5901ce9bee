//! Table and file helpers shared by the stages.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Format with 12 significant digits, `%.12g` style.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (11 - exp) as usize;
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

/// In-memory delimited table with a header row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    sep: char,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn csv<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self::with_sep(',', header)
    }

    pub fn tsv<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self::with_sep('\t', header)
    }

    fn with_sep<S: Into<String>>(sep: char, header: impl IntoIterator<Item = S>) -> Self {
        Self {
            sep,
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let sep = self.sep.to_string();
        out.push_str(&self.header.join(&sep));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(&sep));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.render())
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(BufWriter::with_capacity(1 << 20, f))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::with_capacity(1 << 20, f))
}

/// Read a tab-separated file, checking the header. Returns data lines with
/// their 1-based line numbers.
pub fn read_tsv(path: &Path, header: &[&str]) -> Result<Vec<(usize, Vec<String>)>> {
    read_delimited(path, '\t', header)
}

/// Comma-separated counterpart of [`read_tsv`]. Fields are never quoted.
pub fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<(usize, Vec<String>)>> {
    read_delimited(path, ',', header)
}

fn read_delimited(path: &Path, sep: char, header: &[&str]) -> Result<Vec<(usize, Vec<String>)>> {
    let mut lines = open(path)?.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Parse {
            path: path.into(),
            line: 1,
            message: "missing header".into(),
        })?
        .map_err(|e| Error::io(path, e))?;
    let got: Vec<&str> = first.trim_end_matches('\r').split(sep).collect();
    if got != header {
        return Err(Error::Parse {
            path: path.into(),
            line: 1,
            message: format!("expected header {header:?}, found {got:?}"),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        out.push((i + 2, line.split(sep).map(str::to_string).collect()));
    }
    Ok(out)
}

/// Flush a buffered writer, mapping the error to the path.
pub fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}
