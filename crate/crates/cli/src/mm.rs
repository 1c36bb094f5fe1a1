//! Matrix Market and plain-text vector I/O.
//!
//! Supported: `matrix coordinate|array real|integer|pattern general`.
//! Coordinate indices are 1-based in the file and 0-based in memory;
//! duplicate coordinate entries are summed.

use std::fmt::Write as _;
use std::path::Path;

use ose_core::linalg::{DenseMatrix, SparseMatrixCsr};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub enum MatrixData {
    Dense(DenseMatrix),
    Sparse(SparseMatrixCsr),
}

impl MatrixData {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            MatrixData::Dense(a) => a.shape(),
            MatrixData::Sparse(a) => (a.rows(), a.cols()),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            MatrixData::Dense(a) => a.clone(),
            MatrixData::Sparse(a) => a.to_dense(),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Real,
    Pattern,
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn read_matrix_market(path: &Path) -> CliResult<MatrixData> {
    parse_matrix_market(&read_text(path)?, path)
}

/// Parses Matrix Market text; `origin` only labels errors.
pub fn parse_matrix_market(text: &str, origin: &Path) -> CliResult<MatrixData> {
    let err = |line: usize, message: String| CliError::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(err(1, format!("malformed header `{header}`")));
    }
    let coordinate = match tokens[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(err(1, format!("unsupported format `{other}`"))),
    };
    let field = match tokens[3].as_str() {
        "real" | "integer" | "double" => Field::Real,
        "pattern" if coordinate => Field::Pattern,
        other => return Err(err(1, format!("unsupported field `{other}`"))),
    };
    if tokens[4] != "general" {
        return Err(err(
            1,
            format!("unsupported symmetry `{}`; only general is read", tokens[4]),
        ));
    }

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body.next().ok_or_else(|| err(1, "missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| err(size_line, format!("bad size line: {e}")))?;
    let parse_value = |line: usize, tok: &str| -> CliResult<f64> {
        let v: f64 = tok.parse().map_err(|e| err(line, format!("bad value `{tok}`: {e}")))?;
        if !v.is_finite() {
            return Err(err(line, format!("non-finite value `{tok}`")));
        }
        Ok(v)
    };

    if coordinate {
        let [rows, cols, nnz] = dims[..] else {
            return Err(err(size_line, "coordinate size line needs rows cols nnz".into()));
        };
        let mut triplets = Vec::with_capacity(nnz);
        for (line, l) in body.by_ref() {
            if triplets.len() == nnz {
                return Err(err(line, format!("more than the declared {nnz} entries")));
            }
            let t: Vec<&str> = l.split_whitespace().collect();
            let want = if field == Field::Pattern { 2 } else { 3 };
            if t.len() != want {
                return Err(err(line, format!("expected {want} fields, found {}", t.len())));
            }
            let index = |tok: &str, bound: usize, what: &str| -> CliResult<usize> {
                let i: usize = tok
                    .parse()
                    .map_err(|e| err(line, format!("bad {what} index `{tok}`: {e}")))?;
                if i == 0 || i > bound {
                    return Err(err(line, format!("{what} index {i} outside 1..={bound}")));
                }
                Ok(i - 1)
            };
            let i = index(t[0], rows, "row")?;
            let j = index(t[1], cols, "column")?;
            let v = if field == Field::Pattern {
                1.0
            } else {
                parse_value(line, t[2])?
            };
            triplets.push((i, j, v));
        }
        if triplets.len() != nnz {
            return Err(err(
                text.lines().count(),
                format!("expected {nnz} entries, found {}", triplets.len()),
            ));
        }
        Ok(MatrixData::Sparse(SparseMatrixCsr::from_triplets(
            rows, cols, &triplets,
        )?))
    } else {
        let [rows, cols] = dims[..] else {
            return Err(err(size_line, "array size line needs rows cols".into()));
        };
        // Array entries are listed in column-major order.
        let mut data = vec![0.0; rows * cols];
        let mut k = 0;
        for (line, l) in body {
            for tok in l.split_whitespace() {
                if k == rows * cols {
                    return Err(err(line, format!("more than the declared {} values", rows * cols)));
                }
                data[(k % rows) * cols + k / rows] = parse_value(line, tok)?;
                k += 1;
            }
        }
        if k != rows * cols {
            return Err(err(
                text.lines().count(),
                format!("expected {} values, found {k}", rows * cols),
            ));
        }
        Ok(MatrixData::Dense(DenseMatrix::from_row_major(rows, cols, data)?))
    }
}

/// Coordinate-format text for 0-based `(row, col, value)` triplets.
pub fn format_matrix_market(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "%%MatrixMarket matrix coordinate real general");
    let _ = writeln!(out, "{rows} {cols} {}", triplets.len());
    for &(i, j, v) in triplets {
        let _ = writeln!(out, "{} {} {v:.16e}", i + 1, j + 1);
    }
    out
}

/// One value per line; blank lines and `%`/`#` comments are skipped.
pub fn read_vector(path: &Path) -> CliResult<Vec<f64>> {
    parse_vector(&read_text(path)?, path)
}

pub fn parse_vector(text: &str, origin: &Path) -> CliResult<Vec<f64>> {
    let mut out = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let t = l.trim();
        if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
            continue;
        }
        let v: f64 = t.parse().map_err(|e| CliError::Parse {
            path: origin.to_path_buf(),
            line: i + 1,
            message: format!("bad value `{t}`: {e}"),
        })?;
        if !v.is_finite() {
            return Err(CliError::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message: format!("non-finite value `{t}`"),
            });
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> CliResult<MatrixData> {
        parse_matrix_market(text, Path::new("test.mtx"))
    }

    #[test]
    fn coordinate_identity() {
        let m = parse("%%MatrixMarket matrix coordinate real general\n% comment\n2 2 2\n1 1 1.0\n2 2 1.0\n").unwrap();
        match m {
            MatrixData::Sparse(a) => {
                assert_eq!(a.nnz(), 2);
                assert_eq!(a.to_dense(), DenseMatrix::identity(2));
            }
            _ => panic!("expected sparse"),
        }
    }

    #[test]
    fn duplicates_are_summed_and_pattern_is_one() {
        let m = parse("%%MatrixMarket matrix coordinate integer general\n2 2 3\n1 2 3\n1 2 4\n2 1 -1\n").unwrap();
        assert_eq!(m.to_dense().as_slice(), &[0.0, 7.0, -1.0, 0.0]);
        let p = parse("%%MatrixMarket matrix coordinate pattern general\n2 3 1\n2 3\n").unwrap();
        assert_eq!(p.to_dense()[(1, 2)], 1.0);
    }

    #[test]
    fn out_of_range_index_names_the_line() {
        let e = parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n").unwrap_err();
        match e {
            CliError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn array_is_column_major_in_file() {
        let m = parse("%%MatrixMarket matrix array real general\n3 2\n1\n2\n3\n4\n5\n6\n").unwrap();
        match m {
            MatrixData::Dense(a) => assert_eq!(a.as_slice(), &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]),
            _ => panic!("expected dense"),
        }
    }

    #[test]
    fn malformed_inputs() {
        assert!(parse("").is_err());
        assert!(parse("%%MatrixMarket matrix coordinate real symmetric\n1 1 1\n1 1 1\n").is_err());
        assert!(parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n").is_err());
        assert!(parse("%%MatrixMarket matrix array real general\n1 2\n1\nx\n").is_err());
        assert!(parse("%%MatrixMarket tensor array real general\n1 1\n1\n").is_err());
    }

    #[test]
    fn written_coordinate_text_reads_back() {
        let trip = vec![(0, 1, 0.5), (2, 0, -1.0 / 3.0)];
        let text = format_matrix_market(3, 2, &trip);
        let m = parse(&text).unwrap();
        let a = m.to_dense();
        assert_eq!(a[(0, 1)], 0.5);
        assert_eq!(a[(2, 0)], -1.0 / 3.0);
    }

    #[test]
    fn vectors() {
        let v = parse_vector("# b\n1.5\n\n-2\n", Path::new("b.txt")).unwrap();
        assert_eq!(v, vec![1.5, -2.0]);
        assert!(parse_vector("1\nfoo\n", Path::new("b.txt")).is_err());
    }
}
