//! Matrix Market ingestion and CSV reports.
//!
//! Only the coordinate flavour is read: `real`, `integer` and `pattern`
//! fields with `general`, `symmetric` or `skew-symmetric` symmetry.
//! Symmetric storage is expanded to general form on load, pattern entries
//! become 1.0 and duplicate entries are summed.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::matrix::{CooMatrix, SparseMatrix};
use crate::{Result, SpmvError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

fn parse_err(line: usize, msg: impl Into<String>) -> SpmvError {
    SpmvError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_header(line: &str) -> Result<(Field, Symmetry)> {
    let words: Vec<String> = line
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" {
        return Err(parse_err(
            1,
            "expected `%%MatrixMarket matrix coordinate <field> <symmetry>`",
        ));
    }
    if words[1] != "matrix" {
        return Err(SpmvError::Unsupported(format!("object `{}`", words[1])));
    }
    match words[2].as_str() {
        "coordinate" => {}
        "array" => {
            return Err(SpmvError::Unsupported(
                "dense (array) Matrix Market files".into(),
            ))
        }
        other => return Err(parse_err(1, format!("unknown format `{other}`"))),
    }
    let field = match words[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        "complex" => return Err(SpmvError::Unsupported("complex values".into())),
        other => return Err(parse_err(1, format!("unknown field `{other}`"))),
    };
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        "hermitian" => return Err(SpmvError::Unsupported("hermitian symmetry".into())),
        other => return Err(parse_err(1, format!("unknown symmetry `{other}`"))),
    };
    Ok((field, symmetry))
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot parse {what} from `{tok}`")))
}

/// Parses a Matrix Market coordinate stream into a normalized COO matrix.
/// Non-square matrices are rejected.
pub fn parse_matrix_market<R: Read>(reader: R) -> Result<CooMatrix> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "empty input"))??;
    let (field, symmetry) = parse_header(&header)?;

    let mut lineno = 1;
    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries = Vec::new();
    let mut read = 0usize;
    for line in lines {
        let line = line?;
        lineno += 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let mut toks = t.split_whitespace();
        let Some((rows, cols, nnz)) = size else {
            let rows: usize = parse_num(toks.next(), lineno, "row count")?;
            let cols: usize = parse_num(toks.next(), lineno, "column count")?;
            let nnz: usize = parse_num(toks.next(), lineno, "entry count")?;
            if rows != cols {
                return Err(SpmvError::NotSquare { rows, cols });
            }
            if symmetry != Symmetry::General {
                entries.reserve(2 * nnz);
            } else {
                entries.reserve(nnz);
            }
            size = Some((rows, cols, nnz));
            continue;
        };
        if read == nnz {
            return Err(parse_err(
                lineno,
                format!("more than the declared {nnz} entries"),
            ));
        }
        let i: usize = parse_num(toks.next(), lineno, "row index")?;
        let j: usize = parse_num(toks.next(), lineno, "column index")?;
        if i == 0 || i > rows || j == 0 || j > cols {
            return Err(parse_err(
                lineno,
                format!("entry ({i}, {j}) outside the declared {rows}x{cols} size"),
            ));
        }
        let v = match field {
            Field::Pattern => 1.0,
            Field::Real | Field::Integer => parse_num::<f64>(toks.next(), lineno, "value")?,
        };
        let (i, j) = (i - 1, j - 1);
        entries.push((i, j, v));
        if i != j {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => entries.push((j, i, v)),
                Symmetry::SkewSymmetric => entries.push((j, i, -v)),
            }
        }
        read += 1;
    }
    let (rows, cols, nnz) = size.ok_or_else(|| parse_err(lineno, "missing size line"))?;
    if read != nnz {
        return Err(parse_err(
            lineno,
            format!("declared {nnz} entries but found {read}"),
        ));
    }
    CooMatrix::new(rows, cols, entries)
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<CooMatrix> {
    parse_matrix_market(File::open(path)?)
}

/// Writes any matrix as a general real coordinate file. Values use the
/// shortest decimal form that parses back to the same `f64`.
pub fn write_matrix_market_to<W: Write, M: SparseMatrix + ?Sized>(m: &M, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    let (rows, cols) = m.shape();
    let mut entries = Vec::with_capacity(m.nnz());
    m.for_each_stored(&mut |i, j, v| {
        if v != 0.0 {
            entries.push((i, j, v));
        }
    });
    entries.sort_by_key(|&(i, j, _)| (j, i));
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{rows} {cols} {}", entries.len())?;
    for (i, j, v) in entries {
        writeln!(out, "{} {} {v:?}", i + 1, j + 1)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_matrix_market<M: SparseMatrix + ?Sized>(m: &M, path: impl AsRef<Path>) -> Result<()> {
    write_matrix_market_to(m, File::create(path)?)
}

/// One line of a measurement or prediction report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub matrix: String,
    pub kernel: String,
    pub theta: Option<f64>,
    pub bl: Option<usize>,
    pub workers: Option<usize>,
    pub n: usize,
    pub nnz: usize,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub time_s: Option<f64>,
    pub gflops: Option<f64>,
    pub rp_vs_csr: Option<f64>,
    pub rp_est: Option<f64>,
    pub rel_err: Option<f64>,
}

pub const REPORT_HEADER: [&str; 14] = [
    "matrix",
    "kernel",
    "theta",
    "bl",
    "workers",
    "n",
    "nnz",
    "alpha",
    "beta",
    "time_s",
    "gflops",
    "rp_vs_csr",
    "rp_est",
    "rel_err",
];

impl ReportRow {
    pub fn new(matrix: impl Into<String>, kernel: impl Into<String>, n: usize, nnz: usize) -> Self {
        Self {
            matrix: matrix.into(),
            kernel: kernel.into(),
            theta: None,
            bl: None,
            workers: None,
            n,
            nnz,
            alpha: None,
            beta: None,
            time_s: None,
            gflops: None,
            rp_vs_csr: None,
            rp_est: None,
            rel_err: None,
        }
    }
}

/// Writes the fixed header followed by one line per row (UTF-8, LF).
pub fn write_report_to<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report(rows: &[ReportRow], path: impl AsRef<Path>) -> Result<()> {
    write_report_to(rows, File::create(path)?)
}

pub fn read_report_from<R: Read>(input: R) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(REPORT_HEADER) {
        return Err(SpmvError::Parse {
            line: 1,
            msg: format!(
                "unexpected report header `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    r.deserialize()
        .map(|row| row.map_err(SpmvError::from))
        .collect()
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<ReportRow>> {
    read_report_from(File::open(path)?)
}

/// One `(theta, bl)` point of a format sweep: HDC and M-HDC rates with the
/// hybrid model prediction for each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub matrix: String,
    pub theta: f64,
    pub bl: usize,
    pub n: usize,
    pub nnz: usize,
    /// Diagonals kept whole by HDC.
    pub n_diag: usize,
    pub alpha_hdc: f64,
    pub beta_hdc: f64,
    pub rp_est_hdc: f64,
    /// Partial-diagonal segments kept by M-HDC.
    pub n_seg: usize,
    pub alpha_mhdc: f64,
    pub beta_mhdc: f64,
    pub rp_est_mhdc: f64,
}

pub const SWEEP_HEADER: [&str; 13] = [
    "matrix",
    "theta",
    "bl",
    "n",
    "nnz",
    "n_diag",
    "alpha_hdc",
    "beta_hdc",
    "rp_est_hdc",
    "n_seg",
    "alpha_mhdc",
    "beta_mhdc",
    "rp_est_mhdc",
];

pub fn write_sweep_to<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    write_sweep_to(rows, File::create(path)?)
}

pub fn read_sweep(path: impl AsRef<Path>) -> Result<Vec<SweepRow>> {
    read_sweep_from(File::open(path)?)
}

pub fn read_sweep_from<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(SWEEP_HEADER) {
        return Err(SpmvError::Parse {
            line: 1,
            msg: format!(
                "unexpected sweep header `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    r.deserialize()
        .map(|row| row.map_err(SpmvError::from))
        .collect()
}
