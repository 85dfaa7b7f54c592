//! Coordinate-format sparse tensor text files (`.tns`).
//!
//! Dialect: whitespace-separated values, one entry per line — `d` 1-based
//! integer indices followed by one finite real value. Lines starting with
//! `#` and blank lines are skipped. There is no header; the shape is the
//! per-mode maximum index unless the caller supplies one. Duplicate
//! coordinates are summed on load.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::SparseTensor;

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn parse_entries(path: &Path) -> Result<(usize, Vec<(Vec<usize>, f64)>, Vec<usize>)> {
    let file =
        File::open(path).map_err(|e| parse_error(path, 0, format!("cannot open file: {e}")))?;
    let reader = BufReader::new(file);
    let mut arity: Option<usize> = None;
    let mut entries: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut max_index: Vec<usize> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() < 2 {
            return Err(parse_error(
                path,
                lineno,
                "expected at least one index and a value",
            ));
        }
        let d = tokens.len() - 1;
        match arity {
            None => {
                arity = Some(d);
                max_index = vec![0; d];
            }
            Some(expected) if expected != d => {
                return Err(parse_error(
                    path,
                    lineno,
                    format!("entry has {d} indices, previous lines had {expected}"),
                ));
            }
            _ => {}
        }
        let mut idx = Vec::with_capacity(d);
        for (k, tok) in tokens[..d].iter().enumerate() {
            let i: usize = tok.parse().map_err(|_| {
                parse_error(path, lineno, format!("index '{tok}' is not a positive integer"))
            })?;
            if i == 0 {
                return Err(parse_error(path, lineno, "indices are 1-based; found 0"));
            }
            max_index[k] = max_index[k].max(i);
            idx.push(i - 1);
        }
        let value: f64 = tokens[d]
            .parse()
            .map_err(|_| parse_error(path, lineno, format!("value '{}' is not a number", tokens[d])))?;
        if !value.is_finite() {
            return Err(parse_error(path, lineno, "value must be finite"));
        }
        entries.push((idx, value));
    }
    let arity = arity.ok_or_else(|| parse_error(path, 0, "file contains no entries"))?;
    Ok((arity, entries, max_index))
}

/// Reads a `.tns` file, inferring the shape from the maximum index seen in
/// each mode.
pub fn read_tns(path: impl AsRef<Path>) -> Result<SparseTensor> {
    let path = path.as_ref();
    let (_, entries, shape) = parse_entries(path)?;
    SparseTensor::new(&shape, entries)
}

/// Reads a `.tns` file with an explicitly declared shape (needed when a
/// trailing slice of the tensor holds no entries, where inference would
/// under-report the dimension). Indices beyond the declared shape fail.
pub fn read_tns_with_shape(path: impl AsRef<Path>, shape: &[usize]) -> Result<SparseTensor> {
    let path = path.as_ref();
    let (arity, entries, max_index) = parse_entries(path)?;
    if arity != shape.len() {
        return Err(parse_error(
            path,
            0,
            format!(
                "file has {arity}-mode entries, declared shape has {} modes",
                shape.len()
            ),
        ));
    }
    for (k, (&seen, &declared)) in max_index.iter().zip(shape).enumerate() {
        if seen > declared {
            return Err(parse_error(
                path,
                0,
                format!("mode {} index {seen} exceeds declared dimension {declared}", k + 1),
            ));
        }
    }
    SparseTensor::new(shape, entries)
}

/// Writes a sparse tensor in `.tns` format (1-based indices, one entry per
/// line, storage order). Values are printed with Rust's shortest-roundtrip
/// float formatting, so read-back is bit-exact.
pub fn write_tns(x: &SparseTensor, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut out = BufWriter::new(file);
    for (idx, v) in x.iter() {
        for &i in idx {
            write!(out, "{} ", i + 1)?;
        }
        writeln!(out, "{v}")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_file(dir: &tempfile::TempDir, name: &str, contents: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    #[test]
    fn reads_the_documented_dialect() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "a.tns",
            "# a comment\n1 2 3 4.5\n\n2 2 3 -1e-3\n1 2 3 0.5\n",
        );
        let t = read_tns(&path).unwrap();
        assert_eq!(t.shape(), &[2, 2, 3]);
        assert_eq!(t.get(&[0, 1, 2]), Some(5.0)); // duplicates summed
        assert_eq!(t.get(&[1, 1, 2]), Some(-1e-3));
        assert_eq!(t.nnz(), 2);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        for (contents, needle) in [
            ("1 2 3 4.5\n1 2 4.5\n", "previous lines had"),
            ("1 x 3 4.5\n", "not a positive integer"),
            ("0 2 3 4.5\n", "1-based"),
            ("1 2 3 nope\n", "not a number"),
            ("1 2 3 inf\n", "finite"),
            ("5\n", "at least one index"),
            ("# only a comment\n", "no entries"),
        ] {
            let path = write_file(&dir, "bad.tns", contents);
            let err = read_tns(&path).unwrap_err().to_string();
            assert!(err.contains(needle), "'{err}' lacks '{needle}'");
            assert!(err.contains("bad.tns"), "'{err}' lacks the path");
        }
        let path = write_file(&dir, "lineno.tns", "1 1 1.0\n1 1 1.0\nx 1 1.0\n");
        let err = read_tns(&path).unwrap_err().to_string();
        assert!(err.contains(":3:"), "'{err}' lacks line 3");
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let entries: Vec<(Vec<usize>, f64)> = (0..50)
            .map(|k| {
                (
                    vec![(k * 7) % 11, (k * 3) % 6, (k * 5) % 9],
                    ((k + 1) as f64).ln() * 1.37e-3,
                )
            })
            .collect();
        let x = SparseTensor::new(&[11, 6, 9], entries).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("round.tns");
        write_tns(&x, &path).unwrap();
        let back = read_tns_with_shape(&path, &[11, 6, 9]).unwrap();
        assert_eq!(x, back);
    }

    #[test]
    fn declared_shapes_are_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "s.tns", "1 1 2.0\n3 2 1.0\n");
        let t = read_tns_with_shape(&path, &[5, 4]).unwrap();
        assert_eq!(t.shape(), &[5, 4]);
        assert!(read_tns_with_shape(&path, &[2, 4]).is_err());
        assert!(read_tns_with_shape(&path, &[5, 4, 3]).is_err());
    }
}
