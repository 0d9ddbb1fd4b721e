//! Matrix files: `{"n": n, "re": [[..]], "im": [[..]]}` with row-major rows.

use std::fmt;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::numlin::{c64, ComplexMatrix};

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixFileError {
    Missing(String),
    Malformed(String),
    Ragged(String),
    NonFinite(String),
}

impl fmt::Display for MatrixFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixFileError::Missing(m) => write!(f, "cannot read matrix file: {m}"),
            MatrixFileError::Malformed(m) => write!(f, "malformed matrix file: {m}"),
            MatrixFileError::Ragged(m) => write!(f, "ragged array in matrix file: {m}"),
            MatrixFileError::NonFinite(m) => write!(f, "non-finite entry in matrix file: {m}"),
        }
    }
}

impl std::error::Error for MatrixFileError {}

/// Serializable form of a matrix file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixFile {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixFile {
    pub fn from_matrix(a: &ComplexMatrix) -> Self {
        let n = a.nrows();
        let re = (0..n).map(|i| (0..n).map(|j| a[(i, j)].re).collect()).collect();
        let im = (0..n).map(|i| (0..n).map(|j| a[(i, j)].im).collect()).collect();
        MatrixFile { n, re, im }
    }
}

pub fn parse_matrix(path: &Path) -> Result<ComplexMatrix, MatrixFileError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| MatrixFileError::Missing(format!("{}: {e}", path.display())))?;
    parse_matrix_str(&text)
}

fn entry(v: &Value, name: &str, i: usize, j: usize) -> Result<f64, MatrixFileError> {
    match v {
        Value::Number(x) => x
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| MatrixFileError::NonFinite(format!("{name}[{i}][{j}]"))),
        Value::String(s) if ["nan", "inf", "+inf", "-inf", "infinity", "+infinity", "-infinity"]
            .contains(&s.to_ascii_lowercase().as_str()) =>
        {
            Err(MatrixFileError::NonFinite(format!("{name}[{i}][{j}] = {s}")))
        }
        _ => Err(MatrixFileError::Malformed(format!("{name}[{i}][{j}] is not a number"))),
    }
}

fn rows(doc: &Value, name: &str, n: usize) -> Result<Vec<Vec<f64>>, MatrixFileError> {
    let arr = doc
        .get(name)
        .ok_or_else(|| MatrixFileError::Malformed(format!("missing field \"{name}\"")))?
        .as_array()
        .ok_or_else(|| MatrixFileError::Malformed(format!("\"{name}\" must be an array of rows")))?;
    if arr.len() != n {
        return Err(MatrixFileError::Ragged(format!("\"{name}\" has {} rows, expected {n}", arr.len())));
    }
    let mut out = Vec::with_capacity(n);
    for (i, row) in arr.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| MatrixFileError::Malformed(format!("\"{name}\"[{i}] must be an array")))?;
        if row.len() != n {
            return Err(MatrixFileError::Ragged(format!(
                "\"{name}\"[{i}] has {} entries, expected {n}",
                row.len()
            )));
        }
        out.push(
            row.iter()
                .enumerate()
                .map(|(j, v)| entry(v, name, i, j))
                .collect::<Result<Vec<f64>, _>>()?,
        );
    }
    Ok(out)
}

pub fn parse_matrix_str(text: &str) -> Result<ComplexMatrix, MatrixFileError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| {
        if e.to_string().contains("number out of range") {
            MatrixFileError::NonFinite(format!("number overflows a double ({e})"))
        } else {
            MatrixFileError::Malformed(e.to_string())
        }
    })?;
    let obj = doc
        .as_object()
        .ok_or_else(|| MatrixFileError::Malformed("top level must be an object".into()))?;
    if let Some(extra) = obj.keys().find(|k| !matches!(k.as_str(), "n" | "re" | "im")) {
        return Err(MatrixFileError::Malformed(format!("unknown field \"{extra}\"")));
    }
    let n = obj
        .get("n")
        .ok_or_else(|| MatrixFileError::Malformed("missing field \"n\"".into()))?
        .as_u64()
        .filter(|&n| n >= 1)
        .ok_or_else(|| MatrixFileError::Malformed("\"n\" must be a positive integer".into()))? as usize;
    let re = rows(&doc, "re", n)?;
    let im = rows(&doc, "im", n)?;
    Ok(ComplexMatrix::from_fn(n, n, |i, j| c64(re[i][j], im[i][j])))
}

/// Writes `a` as a matrix file; `parse_matrix` reads it back bit for bit.
pub fn write_matrix(a: &ComplexMatrix, path: &Path) -> std::io::Result<()> {
    let text = super::json::to_canonical_string(&MatrixFile::from_matrix(a)).map_err(std::io::Error::other)?;
    std::fs::write(path, text)
}
