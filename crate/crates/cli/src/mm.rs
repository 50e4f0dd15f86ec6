//! Dense Matrix Market I/O for `general` real, integer and complex matrices
//! in array or coordinate layout.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use globcert::linalg::{C64, ComplexMatrix};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MmError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Array,
    Coordinate,
}

pub fn read_matrix(path: &Path) -> Result<ComplexMatrix, MmError> {
    let text = fs::read_to_string(path).map_err(|source| MmError::Io { path: path.into(), source })?;
    parse_matrix(&text).map_err(|(line, msg)| MmError::Parse { path: path.into(), line, msg })
}

/// Parses the file contents. Errors carry a 1-based line number.
pub fn parse_matrix(text: &str) -> Result<ComplexMatrix, (usize, String)> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
    let (_, header) = lines.next().ok_or((1, "empty file".to_string()))?;
    let words: Vec<String> = header.split_whitespace().map(|w| w.to_ascii_lowercase()).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err((1, format!("expected '%%MatrixMarket matrix <layout> <field> general', got '{header}'")));
    }
    let layout = match words[2].as_str() {
        "array" => Layout::Array,
        "coordinate" => Layout::Coordinate,
        other => return Err((1, format!("unsupported layout '{other}'"))),
    };
    let complex = match words[3].as_str() {
        "real" | "integer" => false,
        "complex" => true,
        other => return Err((1, format!("unsupported field '{other}'"))),
    };
    if words[4] != "general" {
        return Err((1, format!("only general matrices are supported, got '{}'", words[4])));
    }

    let mut data = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (size_line, size) = data.next().ok_or((1, "missing size line".to_string()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|w| w.parse().map_err(|_| (size_line, format!("bad size entry '{w}'"))))
        .collect::<Result<_, _>>()?;
    let want = if layout == Layout::Array { 2 } else { 3 };
    if dims.len() != want {
        return Err((size_line, format!("expected {want} size entries, got {}", dims.len())));
    }
    let (rows, cols) = (dims[0], dims[1]);
    if rows == 0 || cols == 0 {
        return Err((size_line, "matrix dimensions must be positive".into()));
    }

    let mut m = ComplexMatrix::zeros(rows, cols);
    let width = if complex { 2 } else { 1 };
    let value = |line: usize, w: &[&str]| -> Result<C64, (usize, String)> {
        let num = |s: &str| s.parse::<f64>().map_err(|_| (line, format!("bad number '{s}'")));
        let re = num(w[0])?;
        let im = if complex { num(w[1])? } else { 0.0 };
        Ok(C64::new(re, im))
    };
    match layout {
        Layout::Array => {
            let mut count = 0;
            for (line, l) in data {
                let w: Vec<&str> = l.split_whitespace().collect();
                if w.len() != width {
                    return Err((line, format!("expected {width} numbers, got {}", w.len())));
                }
                if count == rows * cols {
                    return Err((line, "more entries than the declared size".into()));
                }
                // Column-major.
                m.set(count % rows, count / rows, value(line, &w)?);
                count += 1;
            }
            if count != rows * cols {
                return Err((size_line, format!("expected {} entries, found {count}", rows * cols)));
            }
        }
        Layout::Coordinate => {
            let nnz = dims[2];
            let mut count = 0;
            for (line, l) in data {
                let w: Vec<&str> = l.split_whitespace().collect();
                if w.len() != 2 + width {
                    return Err((line, format!("expected {} fields, got {}", 2 + width, w.len())));
                }
                if count == nnz {
                    return Err((line, "more entries than declared".into()));
                }
                let idx = |s: &str, bound: usize| -> Result<usize, (usize, String)> {
                    match s.parse::<usize>() {
                        Ok(k) if k >= 1 && k <= bound => Ok(k - 1),
                        _ => Err((line, format!("index '{s}' outside 1..={bound}"))),
                    }
                };
                let (i, j) = (idx(w[0], rows)?, idx(w[1], cols)?);
                // Repeated entries are summed.
                m.set(i, j, m.get(i, j) + value(line, &w[2..])?);
                count += 1;
            }
            if count != nnz {
                return Err((size_line, format!("expected {nnz} entries, found {count}")));
            }
        }
    }
    Ok(m)
}

/// Writes with 17 significant digits; the field is `real` when every
/// imaginary part is zero.
pub fn format_matrix(m: &ComplexMatrix, layout: Layout) -> String {
    let complex = (0..m.rows()).any(|i| (0..m.cols()).any(|j| m.get(i, j).im != 0.0));
    let field = if complex { "complex" } else { "real" };
    let entry = |v: C64| if complex { format!("{:.16e} {:.16e}", v.re, v.im) } else { format!("{:.16e}", v.re) };
    let mut out = String::new();
    match layout {
        Layout::Array => {
            let _ = writeln!(out, "%%MatrixMarket matrix array {field} general\n{} {}", m.rows(), m.cols());
            for j in 0..m.cols() {
                for i in 0..m.rows() {
                    let _ = writeln!(out, "{}", entry(m.get(i, j)));
                }
            }
        }
        Layout::Coordinate => {
            let mut body = String::new();
            let mut nnz = 0;
            for j in 0..m.cols() {
                for i in 0..m.rows() {
                    let v = m.get(i, j);
                    if v != C64::new(0.0, 0.0) {
                        let _ = writeln!(body, "{} {} {}", i + 1, j + 1, entry(v));
                        nnz += 1;
                    }
                }
            }
            let _ = writeln!(out, "%%MatrixMarket matrix coordinate {field} general\n{} {} {nnz}", m.rows(), m.cols());
            out.push_str(&body);
        }
    }
    out
}

pub fn write_matrix(path: &Path, m: &ComplexMatrix, layout: Layout) -> Result<(), MmError> {
    fs::write(path, format_matrix(m, layout)).map_err(|source| MmError::Io { path: path.into(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn array_is_column_major() {
        let m = parse_matrix("%%MatrixMarket matrix array real general\n% comment\n2 2\n1\n2\n3\n4\n").unwrap();
        assert_eq!(m, ComplexMatrix::from_real_rows(&[[1.0, 3.0], [2.0, 4.0]]).unwrap());
    }

    #[test]
    fn complex_coordinate() {
        let m = parse_matrix("%%MatrixMarket matrix coordinate complex general\n2 2 2\n1 1 -1 0\n2 2 -2 0\n").unwrap();
        assert_eq!(m, ComplexMatrix::from_real_diag(&[-1.0, -2.0]));
    }

    #[test]
    fn rejects_symmetric_and_reports_lines() {
        let e = parse_matrix("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 1 1\n").unwrap_err();
        assert_eq!(e.0, 1);
        let e = parse_matrix("%%MatrixMarket matrix coordinate pattern general\n2 2 1\n1 1\n").unwrap_err();
        assert_eq!(e.0, 1);
        let e = parse_matrix("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n").unwrap_err();
        assert_eq!(e.0, 3);
        let e = parse_matrix("%%MatrixMarket matrix array real general\n2 2\n1\n2\nx\n4\n").unwrap_err();
        assert_eq!(e.0, 5);
        let e = parse_matrix("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n").unwrap_err();
        assert_eq!(e.0, 2);
    }
}
