//! Text formats: coordinate matrices, numeric vectors and vertex lists.
//!
//! A matrix file holds a header `n m`, then `m` upper-triangle triples
//! `i j w` (0-based, diagonal allowed), and optionally `n` lines `D: value`
//! giving the diagonal of `D`. Without `D:` lines the matrix is the Laplacian
//! of the listed weights. `#` starts a comment.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{PosDiag, SparseSym, TMatrix};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot parse {tok:?}")))
}

pub fn parse_matrix(text: &str) -> Result<TMatrix> {
    let mut header: Option<(usize, usize)> = None;
    let mut triples = Vec::new();
    let mut diag = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix("D:") {
            for tok in rest.split_whitespace() {
                diag.push(num::<f64>(tok, line)?);
            }
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        match header {
            None => {
                if toks.len() != 2 {
                    return Err(parse_err(line, "expected header `n m`"));
                }
                header = Some((num(toks[0], line)?, num(toks[1], line)?));
            }
            Some(_) => {
                if toks.len() != 3 {
                    return Err(parse_err(line, "expected `i j w`"));
                }
                triples.push((
                    num::<usize>(toks[0], line)?,
                    num::<usize>(toks[1], line)?,
                    num::<f64>(toks[2], line)?,
                ));
            }
        }
    }
    let (n, m) = header.ok_or_else(|| parse_err(0, "missing header `n m`"))?;
    if triples.len() != m {
        return Err(parse_err(
            0,
            format!("header announces {m} entries, found {}", triples.len()),
        ));
    }
    let adjacency = SparseSym::new(n, triples)?;
    if diag.is_empty() {
        return TMatrix::laplacian(adjacency);
    }
    if diag.len() != n {
        return Err(parse_err(0, format!("expected {n} `D:` values, found {}", diag.len())));
    }
    TMatrix::new(PosDiag::new(diag)?, adjacency)
}

/// Canonical text form; `parse_matrix(&format_matrix(b)) == b`.
pub fn format_matrix(b: &TMatrix) -> String {
    let m = b.m();
    let mut out = String::new();
    let _ = writeln!(out, "# kind: {:?}", b.kind());
    let _ = writeln!(out, "{} {}", m.dim(), m.entries().len());
    for &(i, j, w) in m.entries() {
        let _ = writeln!(out, "{i} {j} {w}");
    }
    for v in b.d().values() {
        let _ = writeln!(out, "D: {v}");
    }
    out
}

/// A JSON array or whitespace-separated numbers.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let t = text.trim();
    if t.starts_with('[') {
        return serde_json::from_str(t).map_err(|e| parse_err(e.line(), e.to_string()));
    }
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        for tok in body.split_whitespace() {
            out.push(num::<f64>(tok, k + 1)?);
        }
    }
    Ok(out)
}

/// Vertex indices, in the same layouts as [`parse_vector`].
pub fn parse_indices(text: &str) -> Result<Vec<usize>> {
    let t = text.trim();
    if t.starts_with('[') {
        return serde_json::from_str(t).map_err(|e| parse_err(e.line(), e.to_string()));
    }
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        for tok in body.split_whitespace() {
            out.push(num::<usize>(tok, k + 1)?);
        }
    }
    Ok(out)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<TMatrix> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

pub fn write_matrix(path: impl AsRef<Path>, b: &TMatrix) -> Result<()> {
    std::fs::write(path, format_matrix(b))?;
    Ok(())
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    parse_vector(&std::fs::read_to_string(path)?)
}

pub fn read_indices(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    parse_indices(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Kind;

    #[test]
    fn laplacian_without_diagonal_lines() {
        let b = parse_matrix("# path\n3 2\n0 1 1\n1 2 1.5\n").unwrap();
        assert_eq!(b.kind(), Kind::Laplacian);
        assert_eq!(b.d().values(), &[1.0, 2.5, 1.5]);
    }

    #[test]
    fn round_trip() {
        let text = "2 2\n0 1 0.1\n1 1 0.3 # loop\nD: 0.7\nD: 0.5\n";
        let b = parse_matrix(text).unwrap();
        assert_eq!(b.kind(), Kind::Sddm);
        let again = parse_matrix(&format_matrix(&b)).unwrap();
        assert_eq!(again, b);
        assert_eq!(format_matrix(&again), format_matrix(&b));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_matrix("2 2\n0 1 1\n"), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_matrix("2 1\n0 x 1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(parse_matrix("2 1\n0 1 1\nD: 1\n").is_err());
        assert!(matches!(
            parse_matrix("2 1\n0 5 1\n"),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn vectors() {
        assert_eq!(parse_vector("[1, 2.5]").unwrap(), vec![1.0, 2.5]);
        assert_eq!(parse_vector("1\n2 3 # c\n").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_indices("[0, 4]").unwrap(), vec![0, 4]);
        assert!(parse_indices("0 -1").is_err());
    }
}
