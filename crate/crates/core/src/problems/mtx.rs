//! Matrix Market coordinate format.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::kernels::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::MatrixMarket {
        line,
        msg: msg.into(),
    }
}

/// Parses a real or integer coordinate Matrix Market stream into CSR.
///
/// Symmetric and skew-symmetric storage is expanded to the full matrix,
/// duplicate entries are summed, and indices are converted to 0-based.
pub fn parse_matrix_market<R: Read>(input: R) -> Result<CsrMatrix> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines().enumerate().map(|(k, l)| (k + 1, l));

    let (hline, header) = lines.next().ok_or_else(|| err(1, "empty input"))?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(err(hline, "missing '%%MatrixMarket' banner"));
    }
    if tokens[1] != "matrix" {
        return Err(err(hline, format!("unsupported object '{}'", tokens[1])));
    }
    if tokens[2] != "coordinate" {
        return Err(err(hline, format!("unsupported format '{}'", tokens[2])));
    }
    match tokens[3].as_str() {
        "real" | "double" | "integer" => {}
        "pattern" => return Err(err(hline, "pattern matrices carry no values")),
        "complex" => return Err(err(hline, "complex matrices are not supported")),
        other => return Err(err(hline, format!("unknown field '{other}'"))),
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(err(hline, format!("unsupported symmetry '{other}'"))),
    };

    let mut content = lines.filter(|(_, l)| match l {
        Ok(s) => {
            let t = s.trim();
            !t.is_empty() && !t.starts_with('%')
        }
        Err(_) => true,
    });

    let (sline, size) = content.next().ok_or_else(|| err(hline + 1, "missing size line"))?;
    let size = size?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| err(sline, format!("bad size line: {e}")))?;
    if dims.len() != 3 {
        return Err(err(sline, "size line must hold rows, cols and entry count"));
    }
    let (n_rows, n_cols, declared) = (dims[0], dims[1], dims[2]);
    if symmetry != Symmetry::General && n_rows != n_cols {
        return Err(err(sline, "symmetric storage requires a square matrix"));
    }

    let mut triplets = Vec::with_capacity(if symmetry == Symmetry::General {
        declared
    } else {
        2 * declared
    });
    let mut seen = 0usize;
    for (lno, line) in content {
        let line = line?;
        let mut it = line.split_whitespace();
        let mut index = |what: &str, bound: usize| -> Result<usize> {
            let tok = it.next().ok_or_else(|| err(lno, format!("missing {what} index")))?;
            let v: usize = tok
                .parse()
                .map_err(|_| err(lno, format!("bad {what} index '{tok}'")))?;
            if v == 0 || v > bound {
                return Err(err(lno, format!("{what} index {v} out of range 1..={bound}")));
            }
            Ok(v - 1)
        };
        let i = index("row", n_rows)?;
        let j = index("column", n_cols)?;
        let tok = it.next().ok_or_else(|| err(lno, "missing value"))?;
        let v: f64 = tok
            .parse()
            .map_err(|_| err(lno, format!("bad value '{tok}'")))?;
        if it.next().is_some() {
            return Err(err(lno, "trailing tokens after value"));
        }
        seen += 1;
        if seen > declared {
            return Err(err(lno, format!("more than the declared {declared} entries")));
        }
        match symmetry {
            Symmetry::General => triplets.push((i, j, v)),
            Symmetry::Symmetric => {
                triplets.push((i, j, v));
                if i != j {
                    triplets.push((j, i, v));
                }
            }
            Symmetry::SkewSymmetric => {
                if i == j {
                    if v != 0.0 {
                        return Err(err(lno, "non-zero diagonal in skew-symmetric matrix"));
                    }
                    continue;
                }
                triplets.push((i, j, v));
                triplets.push((j, i, -v));
            }
        }
    }
    if seen != declared {
        return Err(err(
            sline,
            format!("declared {declared} entries but found {seen}"),
        ));
    }
    CsrMatrix::from_triplets(n_rows, n_cols, triplets)
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    let f = std::fs::File::open(path)?;
    parse_matrix_market(f)
}

/// Writes `a` in coordinate/real/general form with 17 significant digits,
/// enough for an exact round trip.
pub fn write_matrix_market<W: Write>(a: &CsrMatrix, mut out: W) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(s: &str) -> Result<CsrMatrix> {
        parse_matrix_market(s.as_bytes())
    }

    #[test]
    fn general_diagonal() {
        let m = parse("%%MatrixMarket matrix coordinate real general\n% c\n2 2 2\n1 1 2\n2 2 3\n").unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.diagonal(), vec![2.0, 3.0]);
    }

    #[test]
    fn symmetric_expansion() {
        let m = parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 1\n2 1 5\n2 2 1\n").unwrap();
        assert_eq!(m.get(0, 1), Some(&5.0));
        assert_eq!(m.get(1, 0), Some(&5.0));
        assert_eq!(m.nnz(), 4);
    }

    #[test]
    fn skew_symmetric_expansion_and_integer_field() {
        let m = parse("%%MatrixMarket matrix coordinate integer skew-symmetric\n3 3 1\n3 1 4\n").unwrap();
        assert_eq!(m.get(2, 0), Some(&4.0));
        assert_eq!(m.get(0, 2), Some(&-4.0));
    }

    #[test]
    fn duplicates_are_summed() {
        let m = parse("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 2 1.5\n1 2 2.5\n2 1 1\n").unwrap();
        assert_eq!(m.get(0, 1), Some(&4.0));
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn rejects_malformed_inputs() {
        let cases = [
            "",
            "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n",
            "%%MatrixMarket matrix coordinate pattern general\n2 2 1\n1 1\n",
            "%%MatrixMarket matrix coordinate complex general\n2 2 1\n1 1 1 0\n",
            "%%MatrixMarket matrix coordinate real hermitian\n2 2 1\n1 1 1\n",
            "%%NotMatrixMarket matrix coordinate real general\n2 2 1\n1 1 1\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n0 1 1\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 x\n",
            "%%MatrixMarket matrix coordinate real general\n2 2\n1 1 1\n",
            "%%MatrixMarket matrix coordinate real symmetric\n2 3 1\n1 1 1\n",
        ];
        for c in cases {
            assert!(parse(c).is_err(), "accepted: {c:?}");
        }
    }

    #[test]
    fn error_names_the_line() {
        match parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n9 1 1\n") {
            Err(Error::MatrixMarket { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn write_then_parse_is_identity(
            entries in proptest::collection::vec((0usize..6, 0usize..5, -1e6f64..1e6), 0..30)
        ) {
            let m = CsrMatrix::from_triplets(6, 5, entries).unwrap();
            let mut buf = Vec::new();
            write_matrix_market(&m, &mut buf).unwrap();
            let back = parse_matrix_market(buf.as_slice()).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
