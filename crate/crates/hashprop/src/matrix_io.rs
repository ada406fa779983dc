//! Plain-text sparse matrix files.
//!
//! ```text
//! # comment lines start with '#'
//! hashprop-matrix q=3 l=2 n=4
//! col 0 (0,1) (1,2)
//! col 2 (1,1)
//! ```
//!
//! Columns may appear in any order and may be omitted (all zero). Entries
//! are `(row,value)` pairs with `value` in `1..q`.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};
use std::path::Path;

use hashprop_core::{FieldSpec, MatrixError, SparseMatrix, Symbol};
use thiserror::Error;

const MAGIC: &str = "hashprop-matrix";

#[derive(Debug, Error)]
pub enum MatrixIoError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing `{MAGIC} q=.. l=.. n=..` header")]
    MissingHeader,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

fn parse_err(line: usize, msg: impl Into<String>) -> MatrixIoError {
    MatrixIoError::Parse { line, msg: msg.into() }
}

pub fn to_string(m: &SparseMatrix) -> String {
    let mut s = format!("{MAGIC} q={} l={} n={}\n", m.field().q(), m.rows(), m.cols());
    for j in 0..m.cols() {
        let col = m.column(j);
        if col.is_empty() {
            continue;
        }
        let _ = write!(s, "col {j}");
        for &(r, v) in col {
            let _ = write!(s, " ({r},{v})");
        }
        s.push('\n');
    }
    s
}

pub fn write_matrix(m: &SparseMatrix, mut w: impl Write) -> io::Result<()> {
    w.write_all(to_string(m).as_bytes())
}

pub fn save(m: &SparseMatrix, path: &Path) -> Result<(), MatrixIoError> {
    std::fs::write(path, to_string(m))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<SparseMatrix, MatrixIoError> {
    read_matrix(io::BufReader::new(std::fs::File::open(path)?))
}

fn header_field(tok: Option<&str>, key: &str, line: usize) -> Result<usize, MatrixIoError> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("header lacks {key}=")))?;
    tok.strip_prefix(key)
        .and_then(|t| t.strip_prefix('='))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| parse_err(line, format!("expected {key}=<integer>, got `{tok}`")))
}

pub fn read_matrix(r: impl BufRead) -> Result<SparseMatrix, MatrixIoError> {
    let mut m: Option<SparseMatrix> = None;
    for (i, line) in r.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        match (toks.next(), m.as_mut()) {
            (Some(MAGIC), None) => {
                let q = header_field(toks.next(), "q", line_no)?;
                let l = header_field(toks.next(), "l", line_no)?;
                let n = header_field(toks.next(), "n", line_no)?;
                let field = u32::try_from(q)
                    .ok()
                    .and_then(|q| FieldSpec::new(q).ok())
                    .ok_or_else(|| parse_err(line_no, format!("q={q} is not a supported prime")))?;
                m = Some(SparseMatrix::zeros(field, l, n)?);
            }
            (Some("col"), Some(mat)) => {
                let j: usize = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| parse_err(line_no, "expected column index"))?;
                if j >= mat.cols() {
                    return Err(parse_err(line_no, format!("column {j} out of range")));
                }
                for tok in toks {
                    let (r, v) = tok
                        .strip_prefix('(')
                        .and_then(|t| t.strip_suffix(')'))
                        .and_then(|t| t.split_once(','))
                        .ok_or_else(|| parse_err(line_no, format!("bad entry `{tok}`")))?;
                    let r: usize = r.parse().map_err(|_| parse_err(line_no, format!("bad row in `{tok}`")))?;
                    let v: Symbol = v.parse().map_err(|_| parse_err(line_no, format!("bad value in `{tok}`")))?;
                    if v == 0 || u32::from(v) >= mat.field().q() {
                        return Err(parse_err(line_no, format!("value {v} is not a nonzero field element")));
                    }
                    if r < mat.rows() && mat.get(r, j) != 0 {
                        return Err(parse_err(line_no, format!("duplicate entry ({r},{j})")));
                    }
                    mat.add_to(r, j, v).map_err(|e| parse_err(line_no, e.to_string()))?;
                }
            }
            (Some(MAGIC), Some(_)) => return Err(parse_err(line_no, "second header")),
            (Some(tok), None) if tok == "col" => return Err(MatrixIoError::MissingHeader),
            (Some(tok), _) => return Err(parse_err(line_no, format!("unexpected `{tok}`"))),
            (None, _) => {}
        }
    }
    m.ok_or(MatrixIoError::MissingHeader)
}
