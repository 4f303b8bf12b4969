//! Matrix Market coordinate matrices and dense vectors.

use super::{CsrMatrix, SparseError};
use std::io::{BufRead, Write};
use std::path::Path;

fn perr(line: usize, msg: impl std::fmt::Display) -> SparseError {
    SparseError::Parse(format!("line {line}: {msg}"))
}

/// Read a real coordinate matrix. Symmetric files are expanded and the result
/// is checked for numerical symmetry.
pub fn read_matrix<R: BufRead>(reader: R) -> Result<CsrMatrix, SparseError> {
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
    let header = header?.to_ascii_lowercase();
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(perr(1, "missing %%MatrixMarket matrix header"));
    }
    if fields[2] != "coordinate" {
        return Err(perr(1, "only coordinate format is supported"));
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(perr(1, format!("unsupported field type {}", fields[3])));
    }
    let symmetric = match fields[4] {
        "symmetric" => true,
        "general" => false,
        other => return Err(perr(1, format!("unsupported symmetry {other}"))),
    };
    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (no, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(perr(no + 1, "expected 'rows cols nnz'"));
                }
                let p = |s: &str| s.parse::<usize>().map_err(|e| perr(no + 1, e));
                size = Some((p(parts[0])?, p(parts[1])?, p(parts[2])?));
            }
            Some((nr, nc, _)) => {
                if parts.len() != 3 {
                    return Err(perr(no + 1, "expected 'row col value'"));
                }
                let i: usize = parts[0].parse().map_err(|e| perr(no + 1, e))?;
                let j: usize = parts[1].parse().map_err(|e| perr(no + 1, e))?;
                let v: f64 = parts[2].parse().map_err(|e| perr(no + 1, e))?;
                if i == 0 || j == 0 || i > nr || j > nc {
                    return Err(perr(no + 1, format!("index ({i}, {j}) out of range")));
                }
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (nr, nc, nnz) = size.ok_or_else(|| perr(1, "missing size line"))?;
    let stored = if symmetric {
        triplets.iter().filter(|t| t.0 >= t.1).count()
    } else {
        triplets.len()
    };
    if stored != nnz {
        return Err(SparseError::Parse(format!("expected {nnz} entries, found {stored}")));
    }
    let a = CsrMatrix::from_triplets(nr, nc, &triplets)?;
    if !a.is_symmetric(1e-12) {
        return Err(SparseError::NotSymmetric);
    }
    Ok(a)
}

pub fn read_matrix_file(path: &Path) -> Result<CsrMatrix, SparseError> {
    let f = std::fs::File::open(path)?;
    read_matrix(std::io::BufReader::new(f))
}

/// Write the lower triangle as a symmetric coordinate file.
pub fn write_matrix<W: Write>(mut w: W, a: &CsrMatrix) -> Result<(), SparseError> {
    let t = a.lower_triplets();
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), t.len())?;
    for (i, j, v) in t {
        writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

/// Read a vector stored either as a Matrix Market array with one column or as
/// plain newline-separated numbers.
pub fn read_vector<R: BufRead>(reader: R) -> Result<Vec<f64>, SparseError> {
    let mut out = Vec::new();
    let mut array_header = false;
    let mut expected: Option<usize> = None;
    for (no, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if no == 0 && t.to_ascii_lowercase().starts_with("%%matrixmarket") {
            if !t.to_ascii_lowercase().contains("array") {
                return Err(perr(1, "vector files must use the array format"));
            }
            array_header = true;
            continue;
        }
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        if array_header && expected.is_none() {
            let parts: Vec<usize> = t
                .split_whitespace()
                .map(|s| s.parse::<usize>().map_err(|e| perr(no + 1, e)))
                .collect::<Result<_, _>>()?;
            if parts.len() != 2 || parts[1] != 1 {
                return Err(perr(no + 1, "expected 'n 1'"));
            }
            expected = Some(parts[0]);
            continue;
        }
        out.push(t.parse::<f64>().map_err(|e| perr(no + 1, e))?);
    }
    if let Some(n) = expected {
        if n != out.len() {
            return Err(SparseError::Parse(format!("expected {n} values, found {}", out.len())));
        }
    }
    Ok(out)
}

pub fn read_vector_file(path: &Path) -> Result<Vec<f64>, SparseError> {
    let f = std::fs::File::open(path)?;
    read_vector(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_roundtrip() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 2.0), (1, 0, -1.0), (0, 1, -1.0), (1, 1, 2.5), (2, 2, 1.0)],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_matrix(&mut buf, &a).unwrap();
        let b = read_matrix(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unordered_duplicates_are_summed() {
        let src = "%%MatrixMarket matrix coordinate real general\n% c\n2 2 5\n2 2 1\n1 1 1\n1 2 -1\n2 1 -1\n1 1 1\n";
        let a = read_matrix(std::io::Cursor::new(src)).unwrap();
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.get(1, 1), 1.0);
    }

    #[test]
    fn rejects_nonsymmetric_and_bad_headers() {
        let src = "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 1\n";
        assert_eq!(read_matrix(std::io::Cursor::new(src)), Err(SparseError::NotSymmetric));
        let src = "%%MatrixMarket matrix array real general\n2 1\n1\n2\n";
        assert!(read_matrix(std::io::Cursor::new(src)).is_err());
    }

    #[test]
    fn vectors() {
        let v = read_vector(std::io::Cursor::new("1.5\n-2\n\n3e-1\n")).unwrap();
        assert_eq!(v, vec![1.5, -2.0, 0.3]);
        let v = read_vector(std::io::Cursor::new(
            "%%MatrixMarket matrix array real general\n2 1\n4\n5\n",
        ))
        .unwrap();
        assert_eq!(v, vec![4.0, 5.0]);
    }
}
