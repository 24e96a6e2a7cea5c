//! Matrix Market and CSV readers and writers. Every writer goes through a
//! temporary file in the destination directory followed by a rename.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use glx_core::covariance::SampleSet;
use glx_core::numerics::{SparseSymmetricMatrix, SymmetricMatrix};
use sha2::{Digest, Sha256};

use crate::args::Impute;
use crate::CliError;

pub const MM_HEADER: &str = "%%MatrixMarket matrix coordinate real symmetric";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> CliError {
    CliError::Parse { path: path.to_path_buf(), line, message: message.into() }
}

/// Writes through a temporary sibling file renamed into place on success.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_err(path))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w).map_err(io_err(path))?;
        w.flush().map_err(io_err(path))?;
    }
    tmp.persist(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

/// Hex SHA-256 of a file's bytes.
pub fn digest(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

enum Layout {
    Coordinate,
    Array,
}

enum Symmetry {
    Symmetric,
    General,
}

/// Reads a real square Matrix Market file (coordinate or array, symmetric or
/// general). General input must be symmetric to round-off.
pub fn read_matrix_market(path: &Path) -> Result<SparseSymmetricMatrix, CliError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header = match lines.next() {
        Some((_, l)) => l.map_err(io_err(path))?,
        None => return Err(parse_err(path, 1, "empty file")),
    };
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(path, 1, "missing %%MatrixMarket matrix header"));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_err(path, 1, format!("unsupported layout {other}"))),
    };
    if !matches!(tokens[3].as_str(), "real" | "integer" | "double") {
        return Err(parse_err(path, 1, format!("unsupported field {}", tokens[3])));
    }
    let symmetry = match tokens[4].as_str() {
        "symmetric" => Symmetry::Symmetric,
        "general" => Symmetry::General,
        other => return Err(parse_err(path, 1, format!("unsupported symmetry {other}"))),
    };

    let mut body = lines.filter_map(|(n, l)| match l {
        Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('%') => None,
        Ok(s) => Some(Ok((n + 1, s))),
        Err(e) => Some(Err(e)),
    });
    let (size_line, size) = body.next().ok_or_else(|| parse_err(path, 2, "missing size line"))?.map_err(io_err(path))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(path, size_line, format!("bad size field {t:?}"))))
        .collect::<Result<_, _>>()?;
    let parse_value = |line: usize, t: &str| -> Result<f64, CliError> {
        let v: f64 = t.parse().map_err(|_| parse_err(path, line, format!("bad value {t:?}")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(parse_err(path, line, "non-finite value"))
        }
    };

    let (d, values): (usize, Vec<(usize, usize, f64, usize)>) = match layout {
        Layout::Coordinate => {
            let [rows, cols, nnz] = dims[..] else {
                return Err(parse_err(path, size_line, "expected `rows cols entries`"));
            };
            if rows != cols || rows == 0 {
                return Err(parse_err(path, size_line, "matrix must be square and non-empty"));
            }
            let mut out = Vec::with_capacity(nnz);
            for item in body.by_ref() {
                let (n, l) = item.map_err(io_err(path))?;
                let f: Vec<&str> = l.split_whitespace().collect();
                if f.len() != 3 {
                    return Err(parse_err(path, n, "expected `row col value`"));
                }
                let idx = |t: &str| -> Result<usize, CliError> {
                    match t.parse::<usize>() {
                        Ok(i) if (1..=rows).contains(&i) => Ok(i - 1),
                        _ => Err(parse_err(path, n, format!("index {t:?} out of range"))),
                    }
                };
                out.push((idx(f[0])?, idx(f[1])?, parse_value(n, f[2])?, n));
            }
            if out.len() != nnz {
                return Err(parse_err(path, size_line, format!("declared {nnz} entries, found {}", out.len())));
            }
            (rows, out)
        }
        Layout::Array => {
            let [rows, cols] = dims[..] else {
                return Err(parse_err(path, size_line, "expected `rows cols`"));
            };
            if rows != cols || rows == 0 {
                return Err(parse_err(path, size_line, "matrix must be square and non-empty"));
            }
            // Column-major; symmetric files hold the lower triangle only.
            let mut positions = Vec::new();
            for c in 0..cols {
                let first = if matches!(symmetry, Symmetry::Symmetric) { c } else { 0 };
                positions.extend((first..rows).map(|r| (r, c)));
            }
            let mut out = Vec::with_capacity(positions.len());
            let mut pos = positions.into_iter();
            for item in body.by_ref() {
                let (n, l) = item.map_err(io_err(path))?;
                for t in l.split_whitespace() {
                    let (r, c) = pos.next().ok_or_else(|| parse_err(path, n, "too many values"))?;
                    out.push((r, c, parse_value(n, t)?, n));
                }
            }
            if pos.next().is_some() {
                return Err(parse_err(path, size_line, "too few values"));
            }
            (rows, out)
        }
    };

    let mut diag = vec![0.0; d];
    let mut seen_diag = vec![false; d];
    type Pair = (usize, usize);
    // Value, position it was first read at, and whether its mirror was seen.
    let mut off: std::collections::BTreeMap<Pair, (f64, Pair, bool)> = Default::default();
    for (r, c, v, line) in values {
        if r == c {
            if seen_diag[r] {
                return Err(parse_err(path, line, format!("duplicate diagonal entry {}", r + 1)));
            }
            seen_diag[r] = true;
            diag[r] = v;
            continue;
        }
        let key = (r.min(c), r.max(c));
        let duplicate = || parse_err(path, line, format!("duplicate entry ({}, {})", r + 1, c + 1));
        match (&symmetry, off.get(&key).copied()) {
            (Symmetry::Symmetric, Some(_)) => return Err(duplicate()),
            (Symmetry::General, Some((_, first, paired))) if paired || first == (r, c) => return Err(duplicate()),
            (Symmetry::General, Some((prev, first, _))) => {
                let scale = f64::max(prev.abs(), v.abs()).max(1.0);
                if (prev - v).abs() > 1e-12 * scale {
                    return Err(parse_err(path, line, format!("matrix is not symmetric at ({}, {})", r + 1, c + 1)));
                }
                off.insert(key, (0.5 * (prev + v), first, true));
            }
            (_, None) => {
                off.insert(key, (v, (r, c), false));
            }
        }
    }
    if matches!(symmetry, Symmetry::General) {
        if let Some((&(i, j), _)) = off.iter().find(|(_, &(v, _, paired))| !paired && v != 0.0) {
            return Err(parse_err(path, 0, format!("entry ({}, {}) has no symmetric partner", j + 1, i + 1)));
        }
    }
    let entries = off.into_iter().map(|((i, j), (v, _, _))| (i, j, v)).collect();
    SparseSymmetricMatrix::new(diag, entries).map_err(|e| parse_err(path, 0, e.to_string()))
}

fn write_mm_body(w: &mut dyn Write, d: usize, lines: &mut dyn Iterator<Item = (usize, usize, f64)>, nnz: usize) -> std::io::Result<()> {
    writeln!(w, "{MM_HEADER}")?;
    writeln!(w, "{d} {d} {nnz}")?;
    for (r, c, v) in lines {
        writeln!(w, "{} {} {:.16e}", r + 1, c + 1, v)?;
    }
    Ok(())
}

/// Lower triangle in column order, diagonal always present.
pub fn write_matrix_market(path: &Path, m: &SparseSymmetricMatrix) -> Result<(), CliError> {
    let d = m.dim();
    let entries = m.entries();
    write_atomic(path, |w| {
        let mut k = 0;
        let mut iter = (0..d).flat_map(|c| {
            let mut col = vec![(c, c, m.diag()[c])];
            while k < entries.len() && entries[k].0 == c {
                let (i, j, v) = entries[k];
                col.push((j, i, v));
                k += 1;
            }
            col
        });
        write_mm_body(w, d, &mut iter, d + entries.len())
    })
}

/// Dense symmetric matrix as coordinate entries; off-diagonal zeros are omitted.
pub fn write_dense_matrix_market(path: &Path, m: &SymmetricMatrix) -> Result<(), CliError> {
    let d = m.dim();
    let nnz = d + (0..d).map(|c| m.row(c)[c + 1..].iter().filter(|v| **v != 0.0).count()).sum::<usize>();
    write_atomic(path, |w| {
        let mut iter = (0..d).flat_map(|c| {
            let row = m.row(c);
            std::iter::once((c, c, row[c]))
                .chain((c + 1..d).filter(move |&r| row[r] != 0.0).map(move |r| (r, c, row[r])))
        });
        write_mm_body(w, d, &mut iter, nnz)
    })
}

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f.eq_ignore_ascii_case("na") || f.eq_ignore_ascii_case("nan") || f.eq_ignore_ascii_case("null")
}

/// Headered CSV of observations. Missing values (empty, `NA`, `NaN`) are
/// dropped row-wise by default, or interpolated within each column.
pub fn read_samples_csv(path: &Path, impute: Option<Impute>) -> Result<SampleSet, CliError> {
    let csv_err = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path).map_err(csv_err)?;
    let d = reader.headers().map_err(csv_err)?.len();
    if d == 0 {
        return Err(parse_err(path, 1, "header has no columns"));
    }
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = k + 2;
        if record.len() != d {
            return Err(parse_err(path, line, format!("expected {d} fields, found {}", record.len())));
        }
        let row = record
            .iter()
            .map(|f| {
                if is_missing(f) {
                    Ok(None)
                } else {
                    match f.parse::<f64>() {
                        Ok(v) if v.is_finite() => Ok(Some(v)),
                        _ => Err(parse_err(path, line, format!("bad value {f:?}"))),
                    }
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let data: Vec<f64> = match impute {
        None => rows.iter().filter(|r| r.iter().all(Option::is_some)).flat_map(|r| r.iter().map(|v| v.unwrap())).collect(),
        Some(Impute::LinearTime) => {
            let n = rows.len();
            let mut out = vec![0.0; n * d];
            for j in 0..d {
                let known: Vec<(usize, f64)> = rows.iter().enumerate().filter_map(|(t, r)| r[j].map(|v| (t, v))).collect();
                if known.is_empty() {
                    return Err(parse_err(path, 1, format!("column {} has no values", j + 1)));
                }
                let mut next = 0;
                for t in 0..n {
                    while next < known.len() && known[next].0 < t {
                        next += 1;
                    }
                    out[t * d + j] = match (next.checked_sub(1).map(|p| known[p]), known.get(next)) {
                        (_, Some(&(tn, v))) if tn == t => v,
                        (Some((t0, v0)), Some(&(t1, v1))) => v0 + (v1 - v0) * (t - t0) as f64 / (t1 - t0) as f64,
                        (Some((_, v0)), None) => v0,
                        (None, Some(&(_, v1))) => v1,
                        (None, None) => unreachable!("column has values"),
                    };
                }
            }
            out
        }
    };
    let n = data.len() / d;
    SampleSet::new(n, d, data).map_err(|e| parse_err(path, 0, e.to_string()))
}

pub fn write_samples_csv(path: &Path, samples: &SampleSet) -> Result<(), CliError> {
    write_atomic(path, |w| {
        let header: Vec<String> = (1..=samples.d()).map(|j| format!("x{j}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for t in 0..samples.n() {
            let row: Vec<String> = samples.row(t).iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    })
}

/// Writes `header` and `rows` as CSV.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    write_atomic(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(header)?;
        for r in rows {
            out.write_record(r)?;
        }
        out.flush()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_market_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mtx");
        let m = SparseSymmetricMatrix::new(vec![1.0 / 3.0, 2.0, 0.0], vec![(0, 2, -0.1), (1, 2, std::f64::consts::PI)]).unwrap();
        write_matrix_market(&path, &m).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(MM_HEADER));
        assert!(text.contains("3 1 -1.0000000000000001e-1"));
        assert_eq!(read_matrix_market(&path).unwrap(), m);
    }

    #[test]
    fn reads_general_and_array_layouts() {
        let dir = tempfile::tempdir().unwrap();
        let general = dir.path().join("g.mtx");
        std::fs::write(&general, "%%MatrixMarket matrix coordinate real general\n% c\n2 2 4\n1 1 1\n1 2 0.5\n2 1 0.5\n2 2 2\n").unwrap();
        let m = read_matrix_market(&general).unwrap();
        assert_eq!(m.get(0, 1), 0.5);
        let array = dir.path().join("a.mtx");
        std::fs::write(&array, "%%MatrixMarket matrix array real symmetric\n2 2\n1\n0.5\n2\n").unwrap();
        assert_eq!(read_matrix_market(&array).unwrap(), m);
        let bad = dir.path().join("b.mtx");
        std::fs::write(&bad, "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 0.5\n2 1 0.4\n").unwrap();
        assert!(matches!(read_matrix_market(&bad), Err(CliError::Parse { .. })));
        // The same position twice is a duplicate, not a mirrored pair.
        std::fs::write(&bad, "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 0.5\n1 2 0.5\n").unwrap();
        assert!(matches!(read_matrix_market(&bad), Err(CliError::Parse { line: 4, .. })));
    }

    #[test]
    fn csv_missing_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(&path, "a,b\n1,10\nNA,20\n3,\n5,40\n").unwrap();
        let dropped = read_samples_csv(&path, None).unwrap();
        assert_eq!(dropped.as_slice(), &[1.0, 10.0, 5.0, 40.0]);
        let filled = read_samples_csv(&path, Some(Impute::LinearTime)).unwrap();
        assert_eq!(filled.as_slice(), &[1.0, 10.0, 2.0, 20.0, 3.0, 30.0, 5.0, 40.0]);
    }
}
