//! TNS3 text format for real third-order tensors.
//!
//! A deliberately simple, human-diffable, language-neutral exchange format.
//! Lines starting with `#` and blank lines are ignored everywhere.
//!
//! **Dense variant** — header `n1 n2 p`, then `p` slice blocks, each `n1`
//! lines of `n2` space-separated decimal values (row `i` of slice `k` on
//! one line):
//!
//! ```text
//! # any comment
//! 2 2 3
//! 1 0
//! 0 1
//! ...
//! ```
//!
//! **Sparse variant** — header `sparse n1 n2 p nnz`, then `nnz` lines
//! `i j k value` with 1-based indices; unlisted entries are zero and an
//! entry may appear at most once.
//!
//! Values are parsed as `f64`; non-finite values are rejected on both read
//! and write. Writing uses the shortest representation that round-trips,
//! so `save` then `load` reproduces a tensor bit for bit. Only real
//! tensors are written; a nonzero imaginary part is an error (cast first).
//!
//! Parse errors carry the 1-based line number of the offending line. The
//! total entry count is capped (at [`MAX_ENTRIES`]) so a malicious header
//! cannot request an absurd allocation.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::tensor::Tensor3;

/// Upper bound on `n1 * n2 * p` accepted from a file header (2^24).
pub const MAX_ENTRIES: usize = 1 << 24;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Significant (non-blank, non-comment) lines with their 1-based numbers.
fn significant_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_dim(tok: &str, what: &str, line: usize) -> Result<usize> {
    let v: usize = tok
        .parse()
        .map_err(|_| parse_err(line, format!("{what} '{tok}' is not a positive integer")))?;
    if v == 0 {
        return Err(parse_err(line, format!("{what} must be at least 1")));
    }
    Ok(v)
}

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("'{tok}' is not a decimal value")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value '{tok}'")));
    }
    Ok(v)
}

fn check_entry_budget(n1: usize, n2: usize, p: usize, line: usize) -> Result<()> {
    let total = n1
        .checked_mul(n2)
        .and_then(|x| x.checked_mul(p))
        .unwrap_or(usize::MAX);
    if total > MAX_ENTRIES {
        return Err(parse_err(
            line,
            format!("{n1}x{n2}x{p} exceeds the entry budget of {MAX_ENTRIES}"),
        ));
    }
    Ok(())
}

/// Parses TNS3 text (dense or sparse variant) into a tensor.
pub fn parse_tensor(text: &str) -> Result<Tensor3> {
    let mut lines = significant_lines(text);
    let (header_line, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty input: expected a TNS3 header"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.first() == Some(&"sparse") {
        if toks.len() != 5 {
            return Err(parse_err(
                header_line,
                format!(
                    "sparse header needs 'sparse n1 n2 p nnz', got {} fields",
                    toks.len()
                ),
            ));
        }
        let n1 = parse_dim(toks[1], "n1", header_line)?;
        let n2 = parse_dim(toks[2], "n2", header_line)?;
        let p = parse_dim(toks[3], "p", header_line)?;
        check_entry_budget(n1, n2, p, header_line)?;
        let nnz: usize = toks[4]
            .parse()
            .map_err(|_| parse_err(header_line, format!("nnz '{}' is not an integer", toks[4])))?;
        if nnz > n1 * n2 * p {
            return Err(parse_err(
                header_line,
                format!("nnz {} exceeds the {} entries of a {n1}x{n2}x{p} tensor", nnz, n1 * n2 * p),
            ));
        }
        parse_sparse_body(lines, n1, n2, p, nnz)
    } else {
        if toks.len() != 3 {
            return Err(parse_err(
                header_line,
                format!("dense header needs 'n1 n2 p', got {} fields", toks.len()),
            ));
        }
        let n1 = parse_dim(toks[0], "n1", header_line)?;
        let n2 = parse_dim(toks[1], "n2", header_line)?;
        let p = parse_dim(toks[2], "p", header_line)?;
        check_entry_budget(n1, n2, p, header_line)?;
        parse_dense_body(lines, n1, n2, p)
    }
}

fn parse_dense_body<'a>(
    mut lines: impl Iterator<Item = (usize, &'a str)>,
    n1: usize,
    n2: usize,
    p: usize,
) -> Result<Tensor3> {
    let mut t = Tensor3::zeros(n1, n2, p)?;
    for k in 0..p {
        for i in 0..n1 {
            let (lno, row) = lines.next().ok_or_else(|| {
                parse_err(
                    0,
                    format!(
                        "input ended early: expected row {} of slice {} ({} data lines in total)",
                        i + 1,
                        k + 1,
                        n1 * p
                    ),
                )
            })?;
            let vals: Vec<&str> = row.split_whitespace().collect();
            if vals.len() != n2 {
                return Err(parse_err(
                    lno,
                    format!("expected {} values in this row, found {}", n2, vals.len()),
                ));
            }
            for (j, tok) in vals.iter().enumerate() {
                let v = parse_value(tok, lno)?;
                t.set(i, j, k, C64::new(v, 0.0))?;
            }
        }
    }
    if let Some((lno, _)) = lines.next() {
        return Err(parse_err(
            lno,
            format!("trailing content after the {} expected data lines", n1 * p),
        ));
    }
    Ok(t)
}

fn parse_sparse_body<'a>(
    mut lines: impl Iterator<Item = (usize, &'a str)>,
    n1: usize,
    n2: usize,
    p: usize,
    nnz: usize,
) -> Result<Tensor3> {
    let mut t = Tensor3::zeros(n1, n2, p)?;
    let mut seen = vec![false; n1 * n2 * p];
    for e in 0..nnz {
        let (lno, row) = lines.next().ok_or_else(|| {
            parse_err(
                0,
                format!("input ended early: expected entry {} of {}", e + 1, nnz),
            )
        })?;
        let toks: Vec<&str> = row.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(parse_err(
                lno,
                format!("expected 'i j k value', found {} fields", toks.len()),
            ));
        }
        let i = parse_dim(toks[0], "i", lno)?;
        let j = parse_dim(toks[1], "j", lno)?;
        let k = parse_dim(toks[2], "k", lno)?;
        if i > n1 || j > n2 || k > p {
            return Err(parse_err(
                lno,
                format!("index ({i}, {j}, {k}) outside a {n1}x{n2}x{p} tensor"),
            ));
        }
        let slot = (k - 1) * n1 * n2 + (j - 1) * n1 + (i - 1);
        if seen[slot] {
            return Err(parse_err(
                lno,
                format!("duplicate entry for index ({i}, {j}, {k})"),
            ));
        }
        seen[slot] = true;
        let v = parse_value(toks[3], lno)?;
        t.set(i - 1, j - 1, k - 1, C64::new(v, 0.0))?;
    }
    if let Some((lno, _)) = lines.next() {
        return Err(parse_err(
            lno,
            format!("trailing content after the {nnz} declared entries"),
        ));
    }
    Ok(t)
}

/// Checks that every entry is exactly real and finite before writing.
fn check_writable(t: &Tensor3) -> Result<()> {
    for k in 0..t.p() {
        for j in 0..t.n2() {
            for i in 0..t.n1() {
                let v = t.get(i, j, k)?;
                if v.im != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({}, {}, {}) has nonzero imaginary part {:e}; cast to real before saving",
                        i + 1,
                        j + 1,
                        k + 1,
                        v.im
                    )));
                }
                if !v.re.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({}, {}, {}) is non-finite",
                        i + 1,
                        j + 1,
                        k + 1
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Renders a real tensor in the dense TNS3 variant.
pub fn format_tensor_dense(t: &Tensor3) -> Result<String> {
    check_writable(t)?;
    let mut out = String::new();
    out.push_str(&format!("{} {} {}\n", t.n1(), t.n2(), t.p()));
    for k in 0..t.p() {
        out.push_str(&format!("# slice {}\n", k + 1));
        for i in 0..t.n1() {
            for j in 0..t.n2() {
                if j > 0 {
                    out.push(' ');
                }
                out.push_str(&format!("{}", t.get(i, j, k)?.re));
            }
            out.push('\n');
        }
    }
    Ok(out)
}

/// Renders a real tensor in the sparse TNS3 variant (zero entries
/// omitted).
pub fn format_tensor_sparse(t: &Tensor3) -> Result<String> {
    check_writable(t)?;
    let mut entries = Vec::new();
    for k in 0..t.p() {
        for j in 0..t.n2() {
            for i in 0..t.n1() {
                let v = t.get(i, j, k)?.re;
                if v != 0.0 {
                    entries.push((i + 1, j + 1, k + 1, v));
                }
            }
        }
    }
    let mut out = String::new();
    out.push_str(&format!(
        "sparse {} {} {} {}\n",
        t.n1(),
        t.n2(),
        t.p(),
        entries.len()
    ));
    for (i, j, k, v) in entries {
        out.push_str(&format!("{i} {j} {k} {v}\n"));
    }
    Ok(out)
}

/// Loads a tensor from a TNS3 file (either variant).
pub fn load_tensor(path: impl AsRef<Path>) -> Result<Tensor3> {
    let text = fs::read_to_string(path)?;
    parse_tensor(&text)
}

/// Saves a real tensor to a file in the dense TNS3 variant.
pub fn save_tensor(path: impl AsRef<Path>, t: &Tensor3) -> Result<()> {
    fs::write(path, format_tensor_dense(t)?)?;
    Ok(())
}

/// Saves a real tensor to a file in the sparse TNS3 variant.
pub fn save_tensor_sparse(path: impl AsRef<Path>, t: &Tensor3) -> Result<()> {
    fs::write(path, format_tensor_sparse(t)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn line_of(err: &Error) -> usize {
        match err {
            Error::Parse { line, .. } => *line,
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn dense_header_and_rows_parse() {
        let text = "2 2 3\n1 0\n0 1\n2 0\n0 2\n3 0\n0 3\n";
        let t = parse_tensor(text).unwrap();
        assert_eq!((t.n1(), t.n2(), t.p()), (2, 2, 3));
        assert_eq!(t.get(0, 0, 1).unwrap().re, 2.0);
        assert_eq!(t.get(1, 1, 2).unwrap().re, 3.0);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# a tensor\n\n2 1 1\n# body\n0.5\n\n-1.5\n";
        let t = parse_tensor(text).unwrap();
        assert_eq!(t.get(0, 0, 0).unwrap().re, 0.5);
        assert_eq!(t.get(1, 0, 0).unwrap().re, -1.5);
    }

    #[test]
    fn dense_round_trip_is_bit_exact() {
        let mut rng = ChaCha12Rng::seed_from_u64(90);
        let t = Tensor3::random_real(5, 4, 3, &mut rng).unwrap();
        let text = format_tensor_dense(&t).unwrap();
        let back = parse_tensor(&text).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn sparse_round_trip_equals_dense() {
        let mut rng = ChaCha12Rng::seed_from_u64(91);
        let mut t = Tensor3::random_real(4, 4, 3, &mut rng).unwrap();
        // Sparsify a little so the variant matters.
        for k in 0..3 {
            for i in 0..4 {
                t.set(i, (i + 1) % 4, k, C64::new(0.0, 0.0)).unwrap();
            }
        }
        let dense = parse_tensor(&format_tensor_dense(&t).unwrap()).unwrap();
        let sparse = parse_tensor(&format_tensor_sparse(&t).unwrap()).unwrap();
        assert_eq!(dense, sparse);
        assert_eq!(t, sparse);
    }

    #[test]
    fn save_and_load_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tns3");
        let mut rng = ChaCha12Rng::seed_from_u64(92);
        let t = Tensor3::random_real(3, 3, 4, &mut rng).unwrap();
        save_tensor(&path, &t).unwrap();
        assert_eq!(load_tensor(&path).unwrap(), t);
        let spath = dir.path().join("t_sparse.tns3");
        save_tensor_sparse(&spath, &t).unwrap();
        assert_eq!(load_tensor(&spath).unwrap(), t);
    }

    #[test]
    fn malformed_headers_carry_line_numbers() {
        assert_eq!(line_of(&parse_tensor("").unwrap_err()), 1);
        assert_eq!(line_of(&parse_tensor("# only comments\n").unwrap_err()), 1);
        let err = parse_tensor("# c\n2 2\n").unwrap_err();
        assert_eq!(line_of(&err), 2);
        let err = parse_tensor("2 0 2\n").unwrap_err();
        assert!(err.to_string().contains("n2"));
        let err = parse_tensor("sparse 2 2\n").unwrap_err();
        assert!(err.to_string().contains("sparse header"));
        let err = parse_tensor("two 2 2\n").unwrap_err();
        assert!(err.to_string().contains("not a positive integer"));
    }

    #[test]
    fn wrong_row_arity_and_count_are_rejected() {
        let err = parse_tensor("2 2 1\n1 2 3\n4 5\n").unwrap_err();
        assert_eq!(line_of(&err), 2);
        assert!(err.to_string().contains("expected 2 values"));
        let err = parse_tensor("2 2 1\n1 2\n").unwrap_err();
        assert!(err.to_string().contains("ended early"));
        let err = parse_tensor("1 1 1\n1\n2\n").unwrap_err();
        assert!(err.to_string().contains("trailing content"));
        assert_eq!(line_of(&err), 3);
    }

    #[test]
    fn non_finite_values_are_rejected_with_line() {
        let err = parse_tensor("1 2 1\n1 inf\n").unwrap_err();
        assert_eq!(line_of(&err), 2);
        assert!(err.to_string().contains("non-finite"));
        let err = parse_tensor("1 1 1\nNaN\n").unwrap_err();
        assert!(err.to_string().contains("non-finite"));
    }

    #[test]
    fn sparse_bounds_duplicates_and_nnz_are_checked() {
        let err = parse_tensor("sparse 2 2 2 1\n3 1 1 5\n").unwrap_err();
        assert_eq!(line_of(&err), 2);
        assert!(err.to_string().contains("outside"));
        let err = parse_tensor("sparse 2 2 2 2\n1 1 1 5\n1 1 1 6\n").unwrap_err();
        assert_eq!(line_of(&err), 3);
        assert!(err.to_string().contains("duplicate"));
        let err = parse_tensor("sparse 2 2 2 9\n").unwrap_err();
        assert!(err.to_string().contains("exceeds"));
        let err = parse_tensor("sparse 2 2 2 1\n1 1 1 0\n2 2 2 1\n").unwrap_err();
        assert!(err.to_string().contains("trailing"));
        // 0-based-looking index: 0 is out of the 1-based range.
        let err = parse_tensor("sparse 2 2 2 1\n0 1 1 5\n").unwrap_err();
        assert!(err.to_string().contains("at least 1"));
    }

    #[test]
    fn entry_budget_guards_absurd_headers() {
        let err = parse_tensor("99999 99999 99999\n").unwrap_err();
        assert!(err.to_string().contains("entry budget"));
        let err = parse_tensor("sparse 5000 5000 5000 1\n1 1 1 1\n").unwrap_err();
        assert!(err.to_string().contains("entry budget"));
    }

    #[test]
    fn complex_and_non_finite_tensors_are_not_writable() {
        let mut t = Tensor3::zeros(2, 2, 1).unwrap();
        t.set(0, 1, 0, C64::new(1.0, 1e-3)).unwrap();
        let err = format_tensor_dense(&t).unwrap_err();
        assert!(err.to_string().contains("imaginary"));
        let mut t = Tensor3::zeros(2, 2, 1).unwrap();
        t.set(0, 1, 0, C64::new(f64::INFINITY, 0.0)).unwrap();
        assert!(format_tensor_sparse(&t).is_err());
    }

    #[test]
    fn negative_zero_survives_the_round_trip() {
        let mut t = Tensor3::zeros(1, 1, 1).unwrap();
        t.set(0, 0, 0, C64::new(-0.0, 0.0)).unwrap();
        let back = parse_tensor(&format_tensor_dense(&t).unwrap()).unwrap();
        assert!(back.get(0, 0, 0).unwrap().re.is_sign_negative());
    }
}
