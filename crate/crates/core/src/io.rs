//! Matrix file formats and atomic file writes.
//!
//! Coordinate text: an optional run of comment lines (`%` or `#`), a header
//! `rows cols nnz`, then `nnz` lines `i j value` with 1-based indices. Later
//! entries for the same position overwrite earlier ones, as in a stream.
//!
//! Dense CSV: one matrix row per line, comma separated, no header.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matvec::DenseMatrix;
use crate::store::CoordEntry;

/// Entries and declared dimensions of a coordinate file.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordData {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<CoordEntry>,
}

impl CoordData {
    pub fn to_dense(&self) -> Result<DenseMatrix> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for e in &self.entries {
            m[(e.i - 1, e.j - 1)] = e.value;
        }
        DenseMatrix::new(m)
    }
}

fn parse_err(line: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

fn parse_field<T: std::str::FromStr>(token: Option<&str>, line: usize, field: &str) -> Result<T> {
    let token = token.ok_or_else(|| parse_err(line, field, "missing"))?;
    token
        .parse()
        .map_err(|_| parse_err(line, field, format!("cannot parse `{token}`")))
}

pub fn parse_coordinate(text: &str) -> Result<CoordData> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%') && !l.starts_with('#'));

    let (header_line, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "header", "missing `rows cols nnz` header"))?;
    let mut tokens = header.split_whitespace();
    let rows: usize = parse_field(tokens.next(), header_line, "rows")?;
    let cols: usize = parse_field(tokens.next(), header_line, "cols")?;
    let nnz: usize = parse_field(tokens.next(), header_line, "nnz")?;
    if tokens.next().is_some() {
        return Err(parse_err(header_line, "header", "expected exactly three fields"));
    }
    if rows == 0 || cols == 0 {
        return Err(parse_err(header_line, "rows", "dimensions must be positive"));
    }

    let mut entries = Vec::with_capacity(nnz);
    for (line, content) in lines {
        let mut tokens = content.split_whitespace();
        let i: usize = parse_field(tokens.next(), line, "i")?;
        let j: usize = parse_field(tokens.next(), line, "j")?;
        let value: f64 = parse_field(tokens.next(), line, "value")?;
        if tokens.next().is_some() {
            return Err(parse_err(line, "entry", "expected exactly three fields"));
        }
        if i == 0 || i > rows {
            return Err(parse_err(line, "i", format!("row {i} outside 1..={rows}")));
        }
        if j == 0 || j > cols {
            return Err(parse_err(line, "j", format!("column {j} outside 1..={cols}")));
        }
        if !value.is_finite() {
            return Err(parse_err(line, "value", "value must be finite"));
        }
        if entries.len() == nnz {
            return Err(parse_err(line, "entry", format!("more entries than the declared {nnz}")));
        }
        entries.push(CoordEntry::new(i, j, value));
    }
    if entries.len() != nnz {
        return Err(parse_err(
            header_line,
            "nnz",
            format!("declared {nnz} entries, found {}", entries.len()),
        ));
    }
    Ok(CoordData { rows, cols, entries })
}

pub fn format_coordinate(a: &DenseMatrix) -> String {
    let nz = a.nonzeros();
    let mut out = format!("{} {} {}\n", a.rows(), a.cols(), nz.len());
    for (i, j, v) in nz {
        out.push_str(&format!("{} {} {:?}\n", i + 1, j + 1, v));
    }
    out
}

pub fn parse_dense_csv(text: &str) -> Result<DenseMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, "record", e.to_string())
        })?;
        let line = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
        let row = record
            .iter()
            .enumerate()
            .map(|(k, tok)| {
                let v: f64 = parse_field(Some(tok), line, &format!("column {}", k + 1))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(parse_err(line, &format!("column {}", k + 1), "value must be finite"))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_err(
                    line,
                    "record",
                    format!("{} fields, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(1, "record", "no rows"));
    }
    DenseMatrix::from_rows(&rows)
}

pub fn format_dense_csv(a: &DenseMatrix) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for i in 0..a.rows() {
        writer
            .write_record(a.row(i).iter().map(|v| format!("{v:?}")))
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Reads a matrix, choosing the format by extension: `.csv` is dense CSV,
/// anything else is coordinate text.
pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let text = std::fs::read_to_string(path)?;
    if is_csv(path) {
        parse_dense_csv(&text)
    } else {
        parse_coordinate(&text)?.to_dense()
    }
}

pub fn write_matrix(path: &Path, a: &DenseMatrix) -> Result<()> {
    let text = if is_csv(path) {
        format_dense_csv(a)
    } else {
        format_coordinate(a)
    };
    write_atomic(path, text.as_bytes())
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
